#pragma once

#include <cstdint>
#include <vector>

#include "wncs/second_moment.hpp"

namespace wncs {

struct SwitchedSystem {
    std::vector<AugmentedClosedLoop> modes;
};

struct DwellTimeCertificate {
    double alpha = 0.0;  // per-step decay of each mode's Lyapunov function
    double mu = 1.0;     // worst-case growth when switching Lyapunov functions
    std::int64_t tau_a_star = 1;
    std::vector<Mat> per_mode_P;  // on the vectorized moment space, d^2 x d^2
    std::vector<double> per_mode_radius;
};

struct SwitchingSignal {
    std::vector<std::pair<std::int64_t, std::size_t>> events;  // (step, mode index)
    double N0 = 1.0;
    std::int64_t horizon = 0;
};

std::int64_t dwell_time_from_constants(double alpha, double mu);

// Multiple-Lyapunov-function certificate on the vectorized second-moment
// dynamics v(k+1) = G_i v(k): P_i solves G_i^T P_i G_i - P_i = -I, alpha from
// the slowest per-mode decay, mu from the worst cross-mode level-set ratio.
// Requires every mode to be individually mean-square stable.
DwellTimeCertificate min_avg_dwell_time(const SwitchedSystem& sw);

// Average dwell-time inequality over every interval spanned by event
// boundaries: switches in [k_s, k_e] <= N0 + (k_e - k_s) / tau_a.
bool verify_switching_signal(const SwitchingSignal& sig, const DwellTimeCertificate& cert);

}  // namespace wncs
