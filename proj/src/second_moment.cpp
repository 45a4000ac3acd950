#include "wncs/second_moment.hpp"

namespace wncs {

SecondMomentOperator second_moment_operator(const AugmentedClosedLoop& acl) {
    SecondMomentOperator smo;
    smo.d = acl.dim();
    smo.G = kron(acl.A0, acl.A0) + acl.sigma2_1 * kron(acl.A1, acl.A1) +
            acl.sigma2_2 * kron(acl.A2, acl.A2);
    smo.W_hat = acl.E0 * acl.W * acl.E0.transpose() +
                acl.sigma2_1 * acl.E1 * acl.W * acl.E1.transpose();
    return smo;
}

MssCertificate check_mss(const SecondMomentOperator& smo, double tol) {
    if (!(tol > 0.0) || tol >= 0.1)
        throw ConfigError("check_mss: tol must lie in (0, 0.1)");

    Eigen::EigenSolver<Mat> es(smo.G, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw AnalysisError("eigensolver failed on G");

    MssCertificate cert;
    cert.spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
    cert.borderline = std::abs(cert.spectral_radius - 1.0) < tol;
    if (cert.spectral_radius < 1.0 - tol) {
        cert.verdict = MssCertificate::Verdict::stable;
        // Lyapunov certificate: solve (I - G^T) vec(P) = vec(I), the adjoint
        // discrete Lyapunov fixed point with unit right-hand side.
        const Eigen::Index d = smo.d;
        Mat lhs = Mat::Identity(d * d, d * d) - smo.G.transpose();
        Vec p = lhs.partialPivLu().solve(vec(Mat::Identity(d, d)));
        Mat P = unvec(p, d, d);
        P = 0.5 * (P + P.transpose());
        Mat residual = unvec(smo.G.transpose() * vec(P), d, d) - P;
        residual = 0.5 * (residual + residual.transpose());
        Eigen::SelfAdjointEigenSolver<Mat> res_es(residual);
        cert.lmi_margin = res_es.eigenvalues().maxCoeff();
        cert.P = std::move(P);
    } else {
        cert.verdict = MssCertificate::Verdict::unstable;
    }
    return cert;
}

MssCertificate check_mss(const AugmentedClosedLoop& acl, double tol) {
    return check_mss(second_moment_operator(acl), tol);
}

Mat steady_state_correlation(const SecondMomentOperator& smo) {
    Eigen::EigenSolver<Mat> es(smo.G, false);
    if (es.eigenvalues().cwiseAbs().maxCoeff() >= 1.0)
        throw AnalysisError("no steady state: second-moment operator is not stable");
    const Eigen::Index d = smo.d;
    Mat lhs = Mat::Identity(d * d, d * d) - smo.G;
    Vec w = lhs.partialPivLu().solve(vec(smo.W_hat));
    Mat W_bar = unvec(w, d, d);
    return 0.5 * (W_bar + W_bar.transpose());
}

}  // namespace wncs
