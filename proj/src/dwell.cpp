#include "wncs/dwell.hpp"

#include <cmath>

namespace wncs {

namespace {

// S = sum_k (G^T)^k G^k, i.e. the solution of G^T S G - S = -I, via doubling.
Mat lyapunov_unit_rhs(const Mat& G) {
    const Eigen::Index d2 = G.rows();
    Mat S = Mat::Identity(d2, d2);
    Mat T = G;
    for (int j = 0; j < 200; ++j) {
        Mat inc = T.transpose() * S * T;
        S += inc;
        if (inc.norm() < 1e-14 * S.norm()) break;
        T = T * T;
    }
    return 0.5 * (S + S.transpose());
}

}  // namespace

std::int64_t dwell_time_from_constants(double alpha, double mu) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (mu < 1.0) throw ConfigError("mu must be >= 1");
    double raw = -std::log(mu) / std::log(1.0 - alpha);
    auto tau = static_cast<std::int64_t>(std::ceil(raw));
    return tau < 1 ? 1 : tau;
}

DwellTimeCertificate min_avg_dwell_time(const SwitchedSystem& sw) {
    if (sw.modes.size() < 2)
        throw ConfigError("a switched system needs at least two modes");
    const Eigen::Index d = sw.modes.front().dim();

    DwellTimeCertificate cert;
    std::vector<double> lambda_max, lambda_min;
    for (std::size_t i = 0; i < sw.modes.size(); ++i) {
        if (sw.modes[i].dim() != d)
            throw ConfigError("all modes must share the augmented dimension");
        SecondMomentOperator smo = second_moment_operator(sw.modes[i]);
        MssCertificate mss = check_mss(smo);
        cert.per_mode_radius.push_back(mss.spectral_radius);
        if (!mss.stable())
            throw AnalysisError("dwell-time certificate unavailable: mode " +
                                std::to_string(i + 1) + " is not mean-square stable");
        Mat P = lyapunov_unit_rhs(smo.G);
        Eigen::SelfAdjointEigenSolver<Mat> es(P);
        lambda_max.push_back(es.eigenvalues().maxCoeff());
        lambda_min.push_back(es.eigenvalues().minCoeff());
        cert.per_mode_P.push_back(std::move(P));
    }

    // V_i(v) = v^T P_i v decays by at least 1/lambda_max(P_i) per step since
    // the Lyapunov difference is -v^T v.
    double alpha = 1.0;
    for (double lm : lambda_max) alpha = std::min(alpha, 1.0 / lm);
    alpha = std::min(alpha, 1.0 - 1e-12);

    double mu = 1.0;
    for (std::size_t i = 0; i < lambda_max.size(); ++i)
        for (std::size_t j = 0; j < lambda_min.size(); ++j)
            if (i != j) mu = std::max(mu, lambda_max[i] / lambda_min[j]);

    cert.alpha = alpha;
    cert.mu = mu;
    cert.tau_a_star = dwell_time_from_constants(alpha, mu);
    return cert;
}

bool verify_switching_signal(const SwitchingSignal& sig, const DwellTimeCertificate& cert) {
    for (std::size_t i = 1; i < sig.events.size(); ++i)
        if (sig.events[i].first <= sig.events[i - 1].first)
            throw ConfigError("switching events must have strictly increasing steps");

    std::vector<std::int64_t> boundaries{0};
    for (const auto& [step, mode] : sig.events) boundaries.push_back(step);
    if (sig.horizon > 0) boundaries.push_back(sig.horizon);

    const double tau = static_cast<double>(cert.tau_a_star);
    for (std::size_t a = 0; a < boundaries.size(); ++a) {
        for (std::size_t b = a + 1; b < boundaries.size(); ++b) {
            const std::int64_t ks = boundaries[a], ke = boundaries[b];
            if (ke <= ks) continue;
            std::int64_t switches = 0;
            for (const auto& [step, mode] : sig.events)
                if (step >= ks && step <= ke) ++switches;
            if (static_cast<double>(switches) >
                sig.N0 + static_cast<double>(ke - ks) / tau)
                return false;
        }
    }
    return true;
}

}  // namespace wncs
