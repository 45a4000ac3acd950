#pragma once

#include <optional>

#include "wncs/augmented.hpp"

namespace wncs {

// Vectorized representation of the map on state-correlation matrices,
//   Gamma(M) = A0 M A0^T + sigma2_1 A1 M A1^T + sigma2_2 A2 M A2^T,
// so that vec(M(k+1)) = G vec(M(k)) + vec(W_hat). Mean-square stability is
// equivalent to spectral_radius(G) < 1.
struct SecondMomentOperator {
    Mat G;      // d^2 x d^2
    Mat W_hat;  // d x d constant term
    Eigen::Index d = 0;

    Mat apply(const Mat& M) const { return unvec(G * vec(M), d, d); }
};

SecondMomentOperator second_moment_operator(const AugmentedClosedLoop& acl);

struct MssCertificate {
    enum class Verdict { stable, unstable };
    Verdict verdict = Verdict::unstable;
    double spectral_radius = 0.0;
    bool borderline = false;
    std::optional<Mat> P;   // Lyapunov certificate for the LMI, when stable
    double lmi_margin = 0;  // max eigenvalue of the LMI residual (negative when certified)

    bool stable() const { return verdict == Verdict::stable; }
};

// Spectral-radius verdict plus a Lyapunov certificate P solving the adjoint
// fixed point A0^T P A0 + sum sigma2_i Ai^T P Ai - P = -I when stable.
MssCertificate check_mss(const AugmentedClosedLoop& acl, double tol = 1e-6);
MssCertificate check_mss(const SecondMomentOperator& smo, double tol = 1e-6);

// Solution of W_bar = Gamma(W_bar) + W_hat; the stationary state correlation.
Mat steady_state_correlation(const SecondMomentOperator& smo);

}  // namespace wncs
