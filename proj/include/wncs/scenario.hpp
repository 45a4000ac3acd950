#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wncs/cartpole.hpp"
#include "wncs/netsim.hpp"
#include "wncs/plant.hpp"

namespace wncs {

inline constexpr int kSchemaVersion = 1;

struct PlantSpec {
    std::string name;
    std::optional<CartPoleParams> cartpole;  // discretized per-mode T_U
    std::optional<Mat> A_explicit;           // already discrete; T_U fixed
    std::optional<Mat> B_explicit;
    Mat sigma_proc;  // may be empty (no noise)
    Mat sigma_meas;
    // When set, sigma_proc is the per-step covariance at this update interval
    // and scales linearly with T_U (continuous-time noise intensity).
    // Measurement noise is per-sample and never rescaled.
    std::optional<double> noise_reference_T_U;
    std::optional<PlantConstraints> constraints;
    Vec x0;  // empty means equilibrium

    Eigen::Index state_dim() const;
    Mat sigma_proc_at(double T_U) const;
};

struct ControllerSpec {
    enum class Type { pole_placement, lqr, sync_lqr, explicit_gain };
    Type type = Type::pole_placement;
    std::vector<std::complex<double>> poles;  // at reference_T_U; rescaled as
                                              // p^(T_U/reference_T_U) per mode
    double reference_T_U = 0.04;
    Mat Q, R, Q_sync;
    Mat F_explicit;
};

struct ModeChangeEventSpec {
    std::int64_t step = 0;
    int next_mode = 0;
    int rounds = 1;
};

struct HoldSpec {
    std::size_t agent = 0;
    std::int64_t start_step = 0;
    std::int64_t end_step = 0;
    double position = 0.0;
};

struct SyncSettings {
    double local_T_U = 0.01;
    int exchange_every = 5;  // local steps per network round
};

struct Scenario {
    std::vector<PlantSpec> plants;
    ControllerSpec controller;
    LossConfig loss;
    std::vector<Mode> modes;  // schedule slots may be empty: built per loop
    int initial_mode = 1;
    std::int64_t horizon = 0;
    std::uint64_t seed = 0;
    bool sync_task = false;
    SyncSettings sync;
    std::vector<ModeChangeEventSpec> mode_script;
    std::vector<HoldSpec> hold_script;
    std::string trace_csv;
    std::string metrics_json;

    void validate() const;
};

// Parses and schema-validates a scenario config. Unknown keys are rejected
// with the offending JSON path in the error message.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text, const std::string& origin);

}  // namespace wncs
