#include "wncs/augmented.hpp"

namespace wncs {

AugmentedClosedLoop build_augmented(const Mat& A, const Mat& B, const Mat& F,
                                    double mu_theta, double mu_phi,
                                    const Mat& Sigma_proc, const Mat& Sigma_meas) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    if (A.cols() != n || B.rows() != n || F.rows() != m || F.cols() != n)
        throw ConfigError("build_augmented: dimensions inconsistent");
    if (!(mu_theta > 0.0) || mu_theta > 1.0 || !(mu_phi > 0.0) || mu_phi > 1.0)
        throw ConfigError("delivery probabilities must lie in (0, 1]; total loss is "
                          "not an analyzable mode");

    const Eigen::Index d = 2 * n + 2 * m;
    const Mat FA = F * A;
    const Mat FB = F * B;
    const Mat Im = Mat::Identity(m, m);

    AugmentedClosedLoop acl;
    acl.n = n;
    acl.m = m;
    acl.mu_theta = mu_theta;
    acl.mu_phi = mu_phi;
    acl.sigma2_1 = 1.0 / mu_theta - 1.0;
    acl.sigma2_2 = 1.0 / mu_phi - 1.0;

    Mat A0 = Mat::Zero(d, d);
    A0.block(0, 0, n, n) = A;
    A0.block(0, 2 * n, n, m) = B;
    A0.block(n, 0, n, n) = mu_theta * A;
    A0.block(n, n, n, n) = (1.0 - mu_theta) * A;
    A0.block(n, 2 * n + m, n, m) = B;
    A0.block(2 * n, n, m, n) = mu_phi * FA;
    A0.block(2 * n, 2 * n, m, m) = (1.0 - mu_phi) * Im;
    A0.block(2 * n, 2 * n + m, m, m) = mu_phi * FB;
    A0.block(2 * n + m, n, m, n) = FA;
    A0.block(2 * n + m, 2 * n + m, m, m) = FB;

    Mat A1 = Mat::Zero(d, d);
    A1.block(n, 0, n, n) = -mu_theta * A;
    A1.block(n, n, n, n) = mu_theta * A;

    Mat A2 = Mat::Zero(d, d);
    A2.block(2 * n, n, m, n) = -mu_phi * FA;
    A2.block(2 * n, 2 * n, m, m) = mu_phi * Im;
    A2.block(2 * n, 2 * n + m, m, m) = -mu_phi * FB;

    // Noise injection: v enters the plant row directly; w enters the predictor
    // row through theta*A, split with the same zero-mean transformation as the
    // loss indicators.
    Mat E0 = Mat::Zero(d, 2 * n);
    E0.block(0, 0, n, n) = Mat::Identity(n, n);
    E0.block(n, n, n, n) = mu_theta * A;
    Mat E1 = Mat::Zero(d, 2 * n);
    E1.block(n, n, n, n) = -mu_theta * A;

    Mat W = Mat::Zero(2 * n, 2 * n);
    if (Sigma_proc.size() > 0) W.topLeftCorner(n, n) = Sigma_proc;
    if (Sigma_meas.size() > 0) W.bottomRightCorner(n, n) = Sigma_meas;

    acl.A0 = std::move(A0);
    acl.A1 = std::move(A1);
    acl.A2 = std::move(A2);
    acl.E0 = std::move(E0);
    acl.E1 = std::move(E1);
    acl.W = std::move(W);
    return acl;
}

}  // namespace wncs
