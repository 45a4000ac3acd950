#pragma once

#include <optional>

#include "wncs/gains.hpp"

namespace wncs {

// Controller-side state machine for the pipelined remote loop. The delivered
// measurement is one step old; the predictor propagates it forward and the
// next input is computed two steps ahead of the measurement it is based on.
class PredictiveController {
public:
    PredictiveController(Mat A, Mat B, FeedbackGain gain);

    // x_hat(k) = A y(k-1) + B u_hat(k-1)        if arrived,
    //            A x_hat(k-1) + B u_hat(k-1)    otherwise.
    // u_hat(k-1) is the input the controller believes was applied at k-1,
    // i.e. the one computed two executions ago and sent one round ago.
    const Vec& predictor_update(bool arrived, const std::optional<Vec>& y_delayed);

    // u_hat(k+1) = F (A x_hat(k) + B u_hat(k)), with u_hat(k) the previously
    // computed input; shifts the input memory and returns u_hat(k+1).
    Vec compute_input();

    const Vec& predicted_state() const { return x_hat_; }
    const Vec& last_input() const { return u_hat_sent_; }
    const Mat& F() const { return gain_.F; }

    void reset();
    void set_internal(const Vec& x_hat, const Vec& u_hat_prev, const Vec& u_hat_sent);

private:
    Mat A_, B_;
    FeedbackGain gain_;
    Vec x_hat_;
    Vec u_hat_prev_;  // u_hat(k-1), consumed by the predictor
    Vec u_hat_sent_;  // u_hat(k), consumed by compute_input
};

// Zero-order hold: keep the previous input when no control message arrives.
class ZohActuator {
public:
    explicit ZohActuator(Eigen::Index input_dim) : u_prev_(Vec::Zero(input_dim)) {}

    const Vec& apply(bool arrived, const std::optional<Vec>& u_hat);
    const Vec& held() const { return u_prev_; }

private:
    Vec u_prev_;
};

}  // namespace wncs
