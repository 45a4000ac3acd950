#include "wncs/plant.hpp"

namespace wncs {

Mat psd_factor(const Mat& sigma) {
    if (sigma.size() == 0 || sigma.isZero(0.0)) return Mat();
    if (!sigma.isApprox(sigma.transpose(), 1e-10))
        throw ConfigError("noise covariance must be symmetric");
    Eigen::LDLT<Mat> ldlt(sigma);
    if (ldlt.info() != Eigen::Success)
        throw ConfigError("noise covariance decomposition failed");
    Vec d = ldlt.vectorD();
    if ((d.array() < -1e-12).any())
        throw ConfigError("noise covariance must be positive semidefinite");
    Mat L = ldlt.matrixL();
    Mat factor = ldlt.transpositionsP().transpose() *
                 (L * d.cwiseMax(0.0).cwiseSqrt().asDiagonal()).eval();
    return factor;
}

Vec gaussian_sample(const Mat& factor, Eigen::Index dim, std::mt19937_64& rng) {
    if (factor.size() == 0) return Vec::Zero(dim);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vec z(factor.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    return factor * z;
}

LtiPlant::LtiPlant(Mat A, Mat B, Mat Sigma_proc, Mat Sigma_meas, Vec x0, double T_U)
    : A_(std::move(A)),
      B_(std::move(B)),
      Sigma_proc_(std::move(Sigma_proc)),
      Sigma_meas_(std::move(Sigma_meas)),
      x_(std::move(x0)),
      T_U_(T_U) {
    const Eigen::Index n = A_.rows();
    if (A_.cols() != n || B_.rows() != n || x_.size() != n)
        throw ConfigError("plant dimensions inconsistent");
    if (!(T_U_ > 0)) throw ConfigError("plant T_U must be positive");
    if (!A_.allFinite() || !B_.allFinite())
        throw ConfigError("plant matrices must be finite");
    if (Sigma_proc_.size() == 0) Sigma_proc_ = Mat::Zero(n, n);
    if (Sigma_meas_.size() == 0) Sigma_meas_ = Mat::Zero(n, n);
    proc_chol_ = psd_factor(Sigma_proc_);
    meas_chol_ = psd_factor(Sigma_meas_);
}

Vec LtiPlant::saturate(const Vec& u) const {
    if (!constraints_) return u;
    const double cap = constraints_->input_cap;
    return u.cwiseMax(-cap).cwiseMin(cap);
}

const Vec& LtiPlant::step(const Vec& u, std::mt19937_64& rng) {
    if (!u.allFinite()) throw ConfigError("plant input must be finite");
    Vec u_sat = saturate(u);
    x_ = A_ * x_ + B_ * u_sat + gaussian_sample(proc_chol_, state_dim(), rng);
    return x_;
}

Vec LtiPlant::measure(std::mt19937_64& rng) const {
    return x_ + gaussian_sample(meas_chol_, state_dim(), rng);
}

bool LtiPlant::track_violated() const {
    return constraints_ && std::abs(x_(0)) > constraints_->track_limit;
}

}  // namespace wncs
