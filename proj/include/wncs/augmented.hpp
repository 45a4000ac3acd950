#pragma once

#include "wncs/matrix.hpp"

namespace wncs {

// Augmented closed-loop system over z = (x, x_hat, u, u_hat), dimension
// d = 2n + 2m. The loss indicators are absorbed into zero-mean multiplicative
// perturbations p_1, p_2 with variances sigma2_1 = 1/mu_theta - 1 and
// sigma2_2 = 1/mu_phi - 1, so that
//   z(k+1) = (A0 + A1 p_1 + A2 p_2) z(k) + (E0 + E1 p_1) eps(k),
// with eps = (v, w) and E[eps eps^T] = W = blockdiag(Sigma_proc, Sigma_meas).
struct AugmentedClosedLoop {
    Mat A0, A1, A2;        // d x d
    Mat E0, E1;            // d x 2n
    Mat W;                 // 2n x 2n
    double sigma2_1 = 0.0;
    double sigma2_2 = 0.0;
    double mu_theta = 1.0;
    double mu_phi = 1.0;
    Eigen::Index n = 0;
    Eigen::Index m = 0;

    Eigen::Index dim() const { return A0.rows(); }
};

AugmentedClosedLoop build_augmented(const Mat& A, const Mat& B, const Mat& F,
                                    double mu_theta, double mu_phi,
                                    const Mat& Sigma_proc, const Mat& Sigma_meas);

}  // namespace wncs
