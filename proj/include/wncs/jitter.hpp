#pragma once

#include "wncs/matrix.hpp"

namespace wncs {

// Worst-case end-to-end jitter budget. Times in microseconds, drifts in ppm.
struct JitterParams {
    double e_ref_hat = 10.0;            // us, flood reference-time error
    double e_sync_hat = 1.0 / 48.0;     // us, one application-clock tick
    double rho_ap_hat = 50.0;           // ppm
    double rho_cp_hat = 50.0;           // ppm
    double e_task_hat = 10.0;           // us
    double T_end_tilde = 100000.0;      // us, nominal end-to-end interval

    void validate() const {
        if (e_ref_hat < 0 || e_sync_hat < 0 || rho_ap_hat < 0 || rho_cp_hat < 0 ||
            e_task_hat < 0 || T_end_tilde < 0)
            throw ConfigError("jitter parameters must be nonnegative");
    }
};

// |J| <= 2 (e_ref + e_sync + T_end (rho_ap + rho_cp)) + e_task, in us.
double jitter_bound(const JitterParams& p);

}  // namespace wncs
