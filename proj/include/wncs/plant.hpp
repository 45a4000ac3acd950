#pragma once

#include <optional>
#include <random>

#include "wncs/matrix.hpp"

namespace wncs {

struct PlantConstraints {
    double input_cap = 10.0;    // V
    double track_limit = 0.25;  // m, |s| bound on state index 0

    void validate() const {
        if (!(input_cap > 0) || !(track_limit > 0))
            throw ConfigError("plant constraints must be strictly positive");
    }
};

// Discrete-time stochastic LTI plant:
//   x(k+1) = A x(k) + B u(k) + v(k),  v ~ N(0, Sigma_proc)
//   y(k)   = x(k) + w(k),             w ~ N(0, Sigma_meas)
class LtiPlant {
public:
    LtiPlant(Mat A, Mat B, Mat Sigma_proc, Mat Sigma_meas, Vec x0, double T_U);

    const Mat& A() const { return A_; }
    const Mat& B() const { return B_; }
    const Mat& sigma_proc() const { return Sigma_proc_; }
    const Mat& sigma_meas() const { return Sigma_meas_; }
    const Vec& state() const { return x_; }
    double update_interval() const { return T_U_; }
    Eigen::Index state_dim() const { return A_.rows(); }
    Eigen::Index input_dim() const { return B_.cols(); }

    void set_state(const Vec& x) { x_ = x; }
    void set_constraints(PlantConstraints c) { c.validate(); constraints_ = c; }
    const std::optional<PlantConstraints>& constraints() const { return constraints_; }

    // Applies saturation (when constraints are attached), advances the state,
    // and returns it. Track violation does not throw; the caller decides
    // whether it terminates the experiment.
    const Vec& step(const Vec& u, std::mt19937_64& rng);

    Vec measure(std::mt19937_64& rng) const;

    bool track_violated() const;
    Vec saturate(const Vec& u) const;

private:
    Mat A_, B_, Sigma_proc_, Sigma_meas_;
    Mat proc_chol_, meas_chol_;  // lower Cholesky factors, empty when zero
    Vec x_;
    double T_U_;
    std::optional<PlantConstraints> constraints_;
};

// Cholesky-like factor of a PSD matrix (LDL^T based, tolerates singularity).
Mat psd_factor(const Mat& sigma);

Vec gaussian_sample(const Mat& factor, Eigen::Index dim, std::mt19937_64& rng);

}  // namespace wncs
