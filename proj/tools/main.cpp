#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wncs/cartpole.hpp"
#include "wncs/dwell.hpp"
#include "wncs/engine.hpp"
#include "wncs/gains.hpp"
#include "wncs/jitter.hpp"
#include "wncs/scenario.hpp"
#include "wncs/second_moment.hpp"

namespace {

using namespace wncs;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUnstable = 2;

std::string resolved(const std::string& out_dir, const std::string& path) {
    if (path.empty() || out_dir.empty()) return path;
    std::filesystem::path p = std::filesystem::path(out_dir) / path;
    std::filesystem::create_directories(p.parent_path());
    return p.string();
}

struct LoopSetup {
    Mat A, B, F;
};

LoopSetup loop_for_mode(const Scenario& sc, std::size_t plant_idx, const Mode& mode) {
    const PlantSpec& p = sc.plants[plant_idx];
    Mat A, B;
    if (p.cartpole) {
        auto d = discretize(linearize_cartpole(*p.cartpole), mode.T_U);
        A = d.A;
        B = d.B;
    } else {
        A = *p.A_explicit;
        B = *p.B_explicit;
    }
    Mat F;
    switch (sc.controller.type) {
        case ControllerSpec::Type::pole_placement: {
            std::vector<std::complex<double>> scaled;
            for (const auto& pole : sc.controller.poles)
                scaled.push_back(std::pow(pole, mode.T_U / sc.controller.reference_T_U));
            F = place_poles(A, B, scaled).F;
            break;
        }
        case ControllerSpec::Type::lqr:
            F = lqr_gain(A, B, sc.controller.Q, sc.controller.R).gain.F;
            break;
        case ControllerSpec::Type::explicit_gain:
            F = sc.controller.F_explicit;
            break;
        case ControllerSpec::Type::sync_lqr:
            throw ConfigError("analyze/dwell expect per-loop controllers, not sync_lqr");
    }
    return {A, B, F};
}

const Mode& mode_by_id(const Scenario& sc, int id) {
    for (const auto& m : sc.modes)
        if (m.id == id) return m;
    throw ConfigError("unknown mode id " + std::to_string(id));
}

int cmd_analyze(const std::string& config, const std::string& report_path,
                const std::string& out_dir) {
    Scenario sc = load_scenario(config);
    const Mode& mode = mode_by_id(sc, sc.initial_mode);

    nlohmann::json report;
    report["schema_version"] = kSchemaVersion;
    bool all_stable = true;

    for (std::size_t i = 0; i < sc.plants.size(); ++i) {
        LoopSetup ls = loop_for_mode(sc, i, mode);
        auto acl = build_augmented(ls.A, ls.B, ls.F, sc.loss.mu_theta, sc.loss.mu_phi,
                                   sc.plants[i].sigma_proc_at(mode.T_U),
                                   sc.plants[i].sigma_meas);
        auto smo = second_moment_operator(acl);
        auto cert = check_mss(smo);

        std::cout << "plant " << sc.plants[i].name << ": "
                  << (cert.stable() ? "mean-square stable" : "mean-square UNSTABLE")
                  << (cert.borderline ? " (borderline)" : "") << "\n"
                  << "  spectral radius  " << cert.spectral_radius << "\n"
                  << "  sigma^2 (sensor link)   " << acl.sigma2_1 << "\n"
                  << "  sigma^2 (actuator link) " << acl.sigma2_2 << "\n";

        nlohmann::json pj;
        pj["name"] = sc.plants[i].name;
        pj["stable"] = cert.stable();
        pj["borderline"] = cert.borderline;
        pj["spectral_radius"] = cert.spectral_radius;
        pj["sigma2_sensor"] = acl.sigma2_1;
        pj["sigma2_actuator"] = acl.sigma2_2;
        pj["lmi_margin"] = cert.lmi_margin;

        if (cert.stable()) {
            Mat Wbar = steady_state_correlation(smo);
            const auto n = acl.n;
            Mat plant_block = Wbar.topLeftCorner(n, n);
            std::cout << "  steady-state std per state:";
            for (Eigen::Index c = 0; c < n; ++c)
                std::cout << ' ' << std::sqrt(std::max(0.0, plant_block(c, c)));
            std::cout << "\n";
            for (Eigen::Index c = 0; c < n; ++c)
                pj["steady_state_std"].push_back(std::sqrt(std::max(0.0, plant_block(c, c))));
        } else {
            all_stable = false;
        }
        report["plants"].push_back(pj);
    }
    report["all_stable"] = all_stable;

    if (!report_path.empty()) {
        std::ofstream out(resolved(out_dir, report_path));
        if (!out) throw ConfigError("cannot open report file: " + report_path);
        out << report.dump(2) << "\n";
    }
    return all_stable ? kExitOk : kExitUnstable;
}

int cmd_dwell(const std::string& config, const std::string& report_path,
              const std::string& out_dir) {
    Scenario sc = load_scenario(config);
    if (sc.modes.size() < 2) throw ConfigError("dwell analysis needs at least two modes");

    SwitchedSystem sw;
    std::vector<int> mode_ids;
    for (const auto& m : sc.modes) {
        LoopSetup ls = loop_for_mode(sc, 0, m);
        sw.modes.push_back(build_augmented(ls.A, ls.B, ls.F, sc.loss.mu_theta, sc.loss.mu_phi,
                                           sc.plants[0].sigma_proc_at(m.T_U),
                                           sc.plants[0].sigma_meas));
        mode_ids.push_back(m.id);
    }

    DwellTimeCertificate cert;
    try {
        cert = min_avg_dwell_time(sw);
    } catch (const AnalysisError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUnstable;
    }

    std::cout << "alpha " << cert.alpha << "\nmu " << cert.mu << "\ntau_a* " << cert.tau_a_star
              << " steps\n";
    for (std::size_t i = 0; i < cert.per_mode_radius.size(); ++i)
        std::cout << "mode " << mode_ids[i] << " spectral radius " << cert.per_mode_radius[i]
                  << "\n";

    nlohmann::json report;
    report["schema_version"] = kSchemaVersion;
    report["alpha"] = cert.alpha;
    report["mu"] = cert.mu;
    report["tau_a_star"] = cert.tau_a_star;
    for (std::size_t i = 0; i < cert.per_mode_radius.size(); ++i)
        report["modes"].push_back(
            {{"id", mode_ids[i]}, {"spectral_radius", cert.per_mode_radius[i]}});

    if (!sc.mode_script.empty()) {
        SwitchingSignal sig;
        sig.horizon = sc.horizon;
        for (const auto& e : sc.mode_script) {
            const auto it = std::find(mode_ids.begin(), mode_ids.end(), e.next_mode);
            sig.events.emplace_back(e.step,
                                    static_cast<std::size_t>(it - mode_ids.begin()));
        }
        const bool ok = verify_switching_signal(sig, cert);
        std::cout << "switching script " << (ok ? "accepted" : "rejected") << "\n";
        report["script_accepted"] = ok;
    }

    if (!report_path.empty()) {
        std::ofstream out(resolved(out_dir, report_path));
        if (!out) throw ConfigError("cannot open report file: " + report_path);
        out << report.dump(2) << "\n";
    }
    return kExitOk;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    std::filesystem::path stem = p.parent_path() / p.stem();
    return stem.string() + suffix + p.extension().string();
}

int cmd_simulate(const std::string& config, std::optional<std::uint64_t> seed_override,
                 int trials, const std::string& out_dir) {
    Scenario sc = load_scenario(config);
    if (seed_override) sc.seed = *seed_override;
    if (trials < 1) throw ConfigError("--trials must be at least 1");

    const std::uint64_t base_seed = sc.seed;
    int succeeded = 0;
    for (int t = 0; t < trials; ++t) {
        Scenario trial = sc;
        std::string suffix;
        if (trials > 1) {
            trial.seed = derive_seed(base_seed, "trial:" + std::to_string(t));
            suffix = "_" + std::to_string(t);
        }
        Trace tr = run_scenario(trial);
        Metrics m = compute_metrics(tr);
        if (m.all_stabilized) ++succeeded;
        if (!trial.trace_csv.empty())
            write_trace_csv(tr, resolved(out_dir, with_suffix(trial.trace_csv, suffix)));
        if (!trial.metrics_json.empty())
            write_metrics_json(m, resolved(out_dir, with_suffix(trial.metrics_json, suffix)));

        std::cout << "trial " << t << ": " << tr.steps.size() << " steps, "
                  << (m.all_stabilized ? "stabilized" : "terminated") << "\n";
    }
    if (trials > 1)
        std::cout << "stabilized " << succeeded << "/" << trials << " trials\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analyzer and simulator for feedback control over lossy round-based networks"};
    app.require_subcommand(1);

    std::string config, out_dir, report_path;
    std::optional<std::uint64_t> seed_override;
    int trials = 1;

    auto* analyze = app.add_subcommand("analyze", "Mean-square stability report for a scenario");
    analyze->add_option("--config", config, "Scenario JSON file")->required();
    analyze->add_option("--report", report_path, "Write a JSON stability report");
    analyze->add_option("--out-dir", out_dir, "Directory prefix for outputs");

    auto* dwell = app.add_subcommand("dwell", "Average dwell-time certificate for multi-mode scenarios");
    dwell->add_option("--config", config, "Scenario JSON file")->required();
    dwell->add_option("--report", report_path, "Write a JSON dwell-time report");
    dwell->add_option("--out-dir", out_dir, "Directory prefix for outputs");

    auto* simulate = app.add_subcommand("simulate", "Run a scenario and write trace/metrics files");
    simulate->add_option("--config", config, "Scenario JSON file")->required();
    simulate->add_option("--seed", seed_override, "Override the scenario seed");
    simulate->add_option("--trials", trials, "Number of trials with derived seeds");
    simulate->add_option("--out-dir", out_dir, "Directory prefix for outputs");

    auto* jitter = app.add_subcommand("jitter", "Worst-case end-to-end jitter bound (microseconds)");
    wncs::JitterParams jp;
    jitter->add_option("--e-ref", jp.e_ref_hat, "Flood reference-time error (us)");
    jitter->add_option("--e-sync", jp.e_sync_hat, "Application clock sync error (us)");
    jitter->add_option("--rho-ap", jp.rho_ap_hat, "Application processor drift (ppm)");
    jitter->add_option("--rho-cp", jp.rho_cp_hat, "Communication processor drift (ppm)");
    jitter->add_option("--e-task", jp.e_task_hat, "Task scheduling error (us)");
    jitter->add_option("--t-end", jp.T_end_tilde, "Nominal end-to-end interval (us)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) return cmd_analyze(config, report_path, out_dir);
        if (dwell->parsed()) return cmd_dwell(config, report_path, out_dir);
        if (simulate->parsed()) return cmd_simulate(config, seed_override, trials, out_dir);
        if (jitter->parsed()) {
            jp.validate();
            std::cout << wncs::jitter_bound(jp) << " us\n";
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
