#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wncs/netsim.hpp"
#include "wncs/scenario.hpp"
#include "wncs/second_moment.hpp"

namespace wncs {

struct StepRecord {
    std::int64_t step = 0;
    double time = 0.0;
    int mode = 0;
    std::int64_t round_index = -1;  // network round serving this step, if any
    // one entry per plant, in scenario order
    std::vector<Vec> x, y, u, u_hat, x_hat;
    std::vector<bool> theta, phi, active;
};

struct Termination {
    std::int64_t step = 0;
    std::string cause;
};

struct Trace {
    std::vector<std::string> plant_names;
    std::vector<StepRecord> steps;
    std::vector<RoundOutcome> rounds;
    std::vector<bool> round_burst;  // aligned with rounds
    std::vector<std::optional<Termination>> terminations;  // per plant
};

struct SeriesStats {
    double min = 0, max = 0, mean = 0, stddev = 0, p5 = 0, p50 = 0, p95 = 0;
};

struct PlantMetrics {
    std::string name;
    SeriesStats position, angle, input;
    double traveled_m = 0.0;
    bool stabilized = true;
    std::optional<Termination> termination;
};

struct PairSyncError {
    std::size_t i = 0, j = 0;
    double mean_abs = 0.0;
    double max_abs = 0.0;
};

struct Metrics {
    std::vector<PlantMetrics> per_plant;
    std::vector<PairSyncError> sync_errors;
    double mean_duty_cycle = 0.0;
    bool all_stabilized = true;
};

// Runs a scenario to completion (dispatches to the sync engine when the
// config has a run.sync section). Deterministic per seed.
Trace run_scenario(const Scenario& sc);
Trace run_sync_scenario(const Scenario& sc);

Metrics compute_metrics(const Trace& tr);

enum class LossAxis { theta, phi, both };

// Bisects the delivery probability against the mean-square-stability verdict;
// returns the critical probability below which the loop goes unstable.
// Requires the loop to be stable with perfect delivery.
double find_critical_loss(const Mat& A, const Mat& B, const Mat& F, LossAxis axis,
                          double tol = 1e-3);

void write_trace_csv(const Trace& tr, const std::string& path);
void write_metrics_json(const Metrics& m, const std::string& path);

// Stream seed derivation so per-agent randomness is independent of how many
// agents run in one process (stable FNV-1a over the stream name).
std::uint64_t derive_seed(std::uint64_t master, const std::string& stream);

}  // namespace wncs
