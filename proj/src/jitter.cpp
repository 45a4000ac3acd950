#include "wncs/jitter.hpp"

namespace wncs {

double jitter_bound(const JitterParams& p) {
    p.validate();
    const double drift = p.T_end_tilde * (p.rho_ap_hat + p.rho_cp_hat) * 1e-6;
    return 2.0 * (p.e_ref_hat + p.e_sync_hat + drift) + p.e_task_hat;
}

}  // namespace wncs
