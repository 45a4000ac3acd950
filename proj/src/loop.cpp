#include "wncs/loop.hpp"

namespace wncs {

PredictiveController::PredictiveController(Mat A, Mat B, FeedbackGain gain)
    : A_(std::move(A)), B_(std::move(B)), gain_(std::move(gain)) {
    if (gain_.F.rows() != B_.cols() || gain_.F.cols() != A_.rows())
        throw ConfigError("controller gain dimensions inconsistent with model");
    x_hat_ = Vec::Zero(A_.rows());
    u_hat_prev_ = Vec::Zero(B_.cols());
    u_hat_sent_ = Vec::Zero(B_.cols());
}

const Vec& PredictiveController::predictor_update(bool arrived,
                                                  const std::optional<Vec>& y_delayed) {
    if (arrived != y_delayed.has_value())
        throw ConfigError("measurement must be present iff it arrived");
    if (arrived) {
        x_hat_ = A_ * *y_delayed + B_ * u_hat_prev_;
    } else {
        x_hat_ = A_ * x_hat_ + B_ * u_hat_prev_;
    }
    return x_hat_;
}

Vec PredictiveController::compute_input() {
    Vec u_next = gain_.F * (A_ * x_hat_ + B_ * u_hat_sent_);
    u_hat_prev_ = u_hat_sent_;
    u_hat_sent_ = u_next;
    return u_next;
}

void PredictiveController::reset() {
    x_hat_.setZero();
    u_hat_prev_.setZero();
    u_hat_sent_.setZero();
}

void PredictiveController::set_internal(const Vec& x_hat, const Vec& u_hat_prev,
                                        const Vec& u_hat_sent) {
    x_hat_ = x_hat;
    u_hat_prev_ = u_hat_prev;
    u_hat_sent_ = u_hat_sent;
}

const Vec& ZohActuator::apply(bool arrived, const std::optional<Vec>& u_hat) {
    if (arrived != u_hat.has_value())
        throw ConfigError("control message must be present iff it arrived");
    if (arrived) u_prev_ = *u_hat;
    return u_prev_;
}

}  // namespace wncs
