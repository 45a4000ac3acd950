#include "wncs/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>

#include <json.hpp>

#include "wncs/cartpole.hpp"
#include "wncs/gains.hpp"
#include "wncs/loop.hpp"
#include "wncs/plant.hpp"

namespace wncs {

namespace {

struct LoopMatrices {
    Mat A, B, F;
};

std::pair<Mat, Mat> plant_matrices(const PlantSpec& p, double T_U) {
    if (p.cartpole) {
        auto d = discretize(linearize_cartpole(*p.cartpole), T_U);
        return {d.A, d.B};
    }
    return {*p.A_explicit, *p.B_explicit};
}

// Per-mode feedback gain. Pole-placement designs are specified at a reference
// update interval; for a mode running at T_U the poles are rescaled as
// p^(T_U / T_ref) so the continuous-time closed-loop dynamics are preserved.
Mat gain_for(const ControllerSpec& c, const Mat& A, const Mat& B, double T_U) {
    switch (c.type) {
        case ControllerSpec::Type::pole_placement: {
            std::vector<std::complex<double>> scaled;
            scaled.reserve(c.poles.size());
            const double exponent = T_U / c.reference_T_U;
            for (const auto& p : c.poles) scaled.push_back(std::pow(p, exponent));
            return place_poles(A, B, scaled).F;
        }
        case ControllerSpec::Type::lqr:
            return lqr_gain(A, B, c.Q, c.R).gain.F;
        case ControllerSpec::Type::explicit_gain:
            if (c.F_explicit.cols() != A.rows())
                throw ConfigError("explicit gain has the wrong number of columns");
            return c.F_explicit;
        case ControllerSpec::Type::sync_lqr:
            throw ConfigError("sync_lqr gains are not per-loop");
    }
    throw ConfigError("unreachable controller type");
}

std::map<int, std::vector<LoopMatrices>> per_mode_loops(const Scenario& sc) {
    std::map<int, std::vector<LoopMatrices>> out;
    for (const Mode& m : sc.modes) {
        std::vector<LoopMatrices> loops;
        for (const PlantSpec& p : sc.plants) {
            auto [A, B] = plant_matrices(p, m.T_U);
            loops.push_back({A, B, gain_for(sc.controller, A, B, m.T_U)});
        }
        out.emplace(m.id, std::move(loops));
    }
    return out;
}

LtiPlant make_plant(const PlantSpec& spec, const LoopMatrices& lm, const Vec& x, double T_U) {
    LtiPlant plant(lm.A, lm.B, spec.sigma_proc_at(T_U), spec.sigma_meas, x, T_U);
    if (spec.constraints) plant.set_constraints(*spec.constraints);
    return plant;
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * (static_cast<double>(v.size()) - 1.0);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

SeriesStats series_stats(const std::vector<double>& v) {
    SeriesStats s;
    if (v.empty()) return s;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    double sum = 0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double var = 0;
    for (double x : v) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(v.size()));
    s.p5 = percentile(v, 0.05);
    s.p50 = percentile(v, 0.50);
    s.p95 = percentile(v, 0.95);
    return s;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, const std::string& stream) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : stream) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h ^ (master * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL);
}

Trace run_scenario(const Scenario& sc) {
    sc.validate();
    if (sc.sync_task) return run_sync_scenario(sc);

    const auto loops = per_mode_loops(sc);
    const std::size_t np = sc.plants.size();

    std::vector<std::string> nodes = {"controller"};
    for (const auto& p : sc.plants) {
        nodes.push_back("sensor:" + p.name);
        nodes.push_back("actuator:" + p.name);
    }
    NetworkSim net(sc.modes, sc.loss, sc.initial_mode, nodes);

    int mode_id = sc.initial_mode;
    const Mode* mode = net.find_mode(mode_id);

    std::vector<LtiPlant> plants;
    std::vector<PredictiveController> ctrls;
    std::vector<ZohActuator> acts;
    std::vector<std::mt19937_64> plant_rng;
    std::vector<std::optional<Vec>> y_inflight(np), u_inflight(np);
    std::vector<bool> active(np, true);
    for (std::size_t i = 0; i < np; ++i) {
        const LoopMatrices& lm = loops.at(mode_id)[i];
        plants.push_back(make_plant(sc.plants[i], lm, sc.plants[i].x0, mode->T_U));
        ctrls.emplace_back(lm.A, lm.B, FeedbackGain{lm.F});
        acts.emplace_back(lm.B.cols());
        plant_rng.emplace_back(derive_seed(sc.seed, "plant:" + sc.plants[i].name));
    }
    std::mt19937_64 net_rng(derive_seed(sc.seed, "net"));

    Trace tr;
    for (const auto& p : sc.plants) tr.plant_names.push_back(p.name);
    tr.terminations.assign(np, std::nullopt);

    double t = 0.0;
    for (std::int64_t k = 0; k < sc.horizon; ++k) {
        for (const auto& e : sc.mode_script)
            if (e.step == k) net.host_request_mode_change(e.next_mode, e.rounds);

        RoundOutcome round = net.run_round(net_rng);
        const bool burst = net.in_burst(round.round);
        // A controller that fell out of the mode sequence has a stale estimate
        // after an unknown gap: start over from the equilibrium prior.
        for (const auto& nm : round.rejoined)
            if (nm == "controller")
                for (auto& c : ctrls) c.reset();
        if (round.events.switched) {
            mode_id = net.current_mode().id;
            mode = net.find_mode(mode_id);
            for (std::size_t i = 0; i < np; ++i) {
                const LoopMatrices& lm = loops.at(mode_id)[i];
                Vec x = plants[i].state();
                plants[i] = make_plant(sc.plants[i], lm, x, mode->T_U);
                // The estimate and input memory survive the switch; only the
                // model matrices change.
                PredictiveController next(lm.A, lm.B, FeedbackGain{lm.F});
                next.set_internal(ctrls[i].predicted_state(), acts[i].held(),
                                  ctrls[i].last_input());
                ctrls[i] = std::move(next);
                y_inflight[i].reset();
                u_inflight[i].reset();
            }
        }

        StepRecord rec;
        rec.step = k;
        rec.time = t;
        rec.mode = mode_id;
        rec.round_index = round.round;
        rec.x.resize(np);
        rec.y.resize(np);
        rec.u.resize(np);
        rec.u_hat.resize(np);
        rec.x_hat.resize(np);
        rec.theta.assign(np, false);
        rec.phi.assign(np, false);
        rec.active.assign(np, false);

        for (std::size_t i = 0; i < np; ++i) {
            const std::string& name = sc.plants[i].name;
            if (!active[i]) {
                rec.x[i] = plants[i].state();
                rec.y[i] = Vec::Zero(plants[i].state_dim());
                rec.u[i] = Vec::Zero(plants[i].input_dim());
                rec.u_hat[i] = Vec::Zero(plants[i].input_dim());
                rec.x_hat[i] = ctrls[i].predicted_state();
                continue;
            }
            const bool theta = round.delivered("y:" + name, "controller") &&
                               y_inflight[i].has_value();
            const bool phi = round.delivered("u:" + name, "actuator:" + name) &&
                             u_inflight[i].has_value();
            rec.theta[i] = theta;
            rec.phi[i] = phi;
            rec.active[i] = true;

            rec.x_hat[i] = ctrls[i].predictor_update(theta, theta ? y_inflight[i] : std::nullopt);
            Vec u_next = ctrls[i].compute_input();
            Vec u_applied = acts[i].apply(phi, phi ? u_inflight[i] : std::nullopt);
            u_applied = plants[i].saturate(u_applied);

            rec.x[i] = plants[i].state();
            rec.u[i] = u_applied;
            rec.u_hat[i] = u_next;

            Vec y = plants[i].measure(plant_rng[i]);
            rec.y[i] = y;
            y_inflight[i] = y;
            u_inflight[i] = u_next;

            plants[i].step(u_applied, plant_rng[i]);
            if (plants[i].track_violated()) {
                active[i] = false;
                tr.terminations[i] = Termination{k, "track_limit"};
            }
        }

        tr.steps.push_back(std::move(rec));
        tr.rounds.push_back(std::move(round));
        tr.round_burst.push_back(burst);
        t += mode->T_U;

        if (std::none_of(active.begin(), active.end(), [](bool a) { return a; })) break;
    }
    return tr;
}

Trace run_sync_scenario(const Scenario& sc) {
    sc.validate();
    const std::size_t np = sc.plants.size();
    const double T_loc = sc.sync.local_T_U;
    const int every = sc.sync.exchange_every;

    SyncLqrSpec spec;
    for (const auto& p : sc.plants) {
        auto [A, B] = plant_matrices(p, T_loc);
        spec.A.push_back(A);
        spec.B.push_back(B);
        spec.Q.push_back(sc.controller.Q);
        spec.R.push_back(sc.controller.R);
    }
    spec.Q_sync = sc.controller.Q_sync;
    const SyncGains gains = sync_lqr(spec);

    std::vector<std::string> nodes;
    for (const auto& p : sc.plants) nodes.push_back(p.name);
    NetworkSim net(sc.modes, sc.loss, sc.initial_mode, nodes);
    std::mt19937_64 net_rng(derive_seed(sc.seed, "net"));

    std::vector<LtiPlant> plants;
    std::vector<std::mt19937_64> agent_rng;
    std::vector<Vec> outbox;
    std::vector<std::vector<Vec>> held(np);
    std::vector<bool> active(np, true);
    for (std::size_t i = 0; i < np; ++i) {
        LtiPlant plant(spec.A[i], spec.B[i], sc.plants[i].sigma_proc_at(T_loc),
                       sc.plants[i].sigma_meas, sc.plants[i].x0, T_loc);
        if (sc.plants[i].constraints) plant.set_constraints(*sc.plants[i].constraints);
        plants.push_back(std::move(plant));
        agent_rng.emplace_back(derive_seed(sc.seed, "plant:" + sc.plants[i].name));
        outbox.push_back(sc.plants[i].x0);
        held[i].assign(np, Vec::Zero(sc.plants[i].state_dim()));
    }

    Trace tr;
    for (const auto& p : sc.plants) tr.plant_names.push_back(p.name);
    tr.terminations.assign(np, std::nullopt);

    for (std::int64_t k = 0; k < sc.horizon; ++k) {
        std::int64_t round_index = -1;
        if (k % every == 0) {
            RoundOutcome round = net.run_round(net_rng);
            round_index = round.round;
            for (std::size_t src = 0; src < np; ++src)
                for (std::size_t dst = 0; dst < np; ++dst)
                    if (src != dst &&
                        round.delivered("x:" + sc.plants[src].name, sc.plants[dst].name))
                        held[dst][src] = outbox[src];
            // States broadcast in the next round are the ones sampled now, so
            // remote views are one network round old.
            for (std::size_t i = 0; i < np; ++i) outbox[i] = plants[i].state();
            tr.round_burst.push_back(net.in_burst(round.round));
            tr.rounds.push_back(std::move(round));
        }

        for (const auto& h : sc.hold_script)
            if (k >= h.start_step && k < h.end_step && active[h.agent]) {
                Vec x = plants[h.agent].state();
                x(0) = h.position;
                x(1) = 0.0;
                plants[h.agent].set_state(x);
            }

        StepRecord rec;
        rec.step = k;
        rec.time = static_cast<double>(k) * T_loc;
        rec.mode = sc.initial_mode;
        rec.round_index = round_index;
        rec.x.resize(np);
        rec.y.resize(np);
        rec.u.resize(np);
        rec.u_hat.resize(np);
        rec.x_hat.resize(np);
        rec.theta.assign(np, false);
        rec.phi.assign(np, false);
        rec.active.assign(np, false);

        for (std::size_t i = 0; i < np; ++i) {
            if (!active[i]) {
                rec.x[i] = plants[i].state();
                rec.y[i] = Vec::Zero(plants[i].state_dim());
                rec.u[i] = Vec::Zero(plants[i].input_dim());
                rec.u_hat[i] = rec.u[i];
                rec.x_hat[i] = rec.y[i];
                continue;
            }
            rec.active[i] = true;
            Vec y = plants[i].measure(agent_rng[i]);
            Vec u = gains.blocks[i][i] * y;
            for (std::size_t j = 0; j < np; ++j)
                if (j != i) u += gains.blocks[i][j] * held[i][j];
            u = plants[i].saturate(u);

            rec.x[i] = plants[i].state();
            rec.y[i] = y;
            rec.u[i] = u;
            rec.u_hat[i] = u;
            rec.x_hat[i] = held[i][(i + 1) % np];

            plants[i].step(u, agent_rng[i]);
            if (plants[i].track_violated()) {
                active[i] = false;
                tr.terminations[i] = Termination{k, "track_limit"};
            }
        }

        tr.steps.push_back(std::move(rec));
        if (std::none_of(active.begin(), active.end(), [](bool a) { return a; })) break;
    }
    return tr;
}

Metrics compute_metrics(const Trace& tr) {
    if (tr.steps.empty()) throw AnalysisError("cannot compute metrics on an empty trace");
    Metrics m;
    const std::size_t np = tr.plant_names.size();

    for (std::size_t i = 0; i < np; ++i) {
        PlantMetrics pm;
        pm.name = tr.plant_names[i];
        std::vector<double> pos, ang, inp;
        double prev_s = 0.0;
        bool have_prev = false;
        for (const auto& rec : tr.steps) {
            if (!rec.active[i]) continue;
            const Vec& x = rec.x[i];
            pos.push_back(x(0));
            if (x.size() >= 3) ang.push_back(x(2));
            if (rec.u[i].size() > 0) inp.push_back(rec.u[i](0));
            if (have_prev) pm.traveled_m += std::abs(x(0) - prev_s);
            prev_s = x(0);
            have_prev = true;
        }
        pm.position = series_stats(pos);
        pm.angle = series_stats(ang);
        pm.input = series_stats(inp);
        if (i < tr.terminations.size() && tr.terminations[i]) {
            pm.stabilized = false;
            pm.termination = tr.terminations[i];
            m.all_stabilized = false;
        }
        m.per_plant.push_back(std::move(pm));
    }

    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = i + 1; j < np; ++j) {
            PairSyncError pe;
            pe.i = i;
            pe.j = j;
            double sum = 0;
            std::size_t cnt = 0;
            for (const auto& rec : tr.steps) {
                if (!rec.active[i] || !rec.active[j]) continue;
                const double d = std::abs(rec.x[i](0) - rec.x[j](0));
                sum += d;
                pe.max_abs = std::max(pe.max_abs, d);
                ++cnt;
            }
            pe.mean_abs = cnt ? sum / static_cast<double>(cnt) : 0.0;
            m.sync_errors.push_back(pe);
        }

    if (!tr.rounds.empty()) {
        double sum = 0;
        for (const auto& r : tr.rounds) sum += r.duty_cycle;
        m.mean_duty_cycle = sum / static_cast<double>(tr.rounds.size());
    }
    return m;
}

double find_critical_loss(const Mat& A, const Mat& B, const Mat& F, LossAxis axis, double tol) {
    const Mat Zn = Mat::Zero(A.rows(), A.rows());
    auto stable = [&](double mu) {
        const double mt = axis == LossAxis::phi ? 1.0 : mu;
        const double mp = axis == LossAxis::theta ? 1.0 : mu;
        auto acl = build_augmented(A, B, F, mt, mp, Zn, Zn);
        return spectral_radius(second_moment_operator(acl).G) < 1.0;
    };
    if (!(tol > 0)) throw ConfigError("tolerance must be positive");
    if (!stable(1.0))
        throw AnalysisError("loop is mean-square unstable even with perfect delivery");
    double lo = 1e-4, hi = 1.0;
    if (stable(lo)) return lo;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (stable(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

void write_trace_csv(const Trace& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open trace output file: " + path);
    out << std::setprecision(17);

    Eigen::Index nmax = 0, mmax = 0;
    if (!tr.steps.empty())
        for (std::size_t i = 0; i < tr.plant_names.size(); ++i) {
            nmax = std::max(nmax, tr.steps[0].x[i].size());
            mmax = std::max(mmax, tr.steps[0].u[i].size());
        }

    out << "step,time,round,mode,plant,active,theta,phi,burst";
    for (Eigen::Index c = 0; c < nmax; ++c) out << ",x" << c;
    for (Eigen::Index c = 0; c < nmax; ++c) out << ",y" << c;
    for (Eigen::Index c = 0; c < mmax; ++c) out << ",u" << c;
    for (Eigen::Index c = 0; c < mmax; ++c) out << ",uhat" << c;
    for (Eigen::Index c = 0; c < nmax; ++c) out << ",xhat" << c;
    out << "\n";

    auto emit = [&](const Vec& v, Eigen::Index width) {
        for (Eigen::Index c = 0; c < width; ++c) {
            out << ',';
            if (c < v.size()) out << v(c);
        }
    };

    std::size_t round_pos = 0;
    for (const auto& rec : tr.steps) {
        bool burst = false;
        if (rec.round_index >= 0) {
            while (round_pos < tr.rounds.size() && tr.rounds[round_pos].round < rec.round_index)
                ++round_pos;
            if (round_pos < tr.round_burst.size() &&
                tr.rounds[round_pos].round == rec.round_index)
                burst = tr.round_burst[round_pos];
        }
        for (std::size_t i = 0; i < tr.plant_names.size(); ++i) {
            out << rec.step << ',' << rec.time << ',' << rec.round_index << ',' << rec.mode << ','
                << tr.plant_names[i] << ',' << rec.active[i] << ',' << rec.theta[i] << ','
                << rec.phi[i] << ',' << burst;
            emit(rec.x[i], nmax);
            emit(rec.y[i], nmax);
            emit(rec.u[i], mmax);
            emit(rec.u_hat[i], mmax);
            emit(rec.x_hat[i], nmax);
            out << "\n";
        }
    }
}

void write_metrics_json(const Metrics& m, const std::string& path) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    auto stats_json = [](const SeriesStats& s) {
        return nlohmann::json{{"min", s.min}, {"max", s.max},       {"mean", s.mean},
                              {"stddev", s.stddev}, {"p5", s.p5},  {"p50", s.p50},
                              {"p95", s.p95}};
    };
    for (const auto& pm : m.per_plant) {
        nlohmann::json pj;
        pj["name"] = pm.name;
        pj["stabilized"] = pm.stabilized;
        pj["traveled_m"] = pm.traveled_m;
        pj["position"] = stats_json(pm.position);
        pj["angle"] = stats_json(pm.angle);
        pj["input"] = stats_json(pm.input);
        if (pm.termination) {
            pj["termination"] = {{"step", pm.termination->step}, {"cause", pm.termination->cause}};
        }
        j["plants"].push_back(pj);
    }
    for (const auto& pe : m.sync_errors)
        j["sync_errors"].push_back(
            {{"i", pe.i}, {"j", pe.j}, {"mean_abs_m", pe.mean_abs}, {"max_abs_m", pe.max_abs}});
    j["mean_duty_cycle"] = m.mean_duty_cycle;
    j["all_stabilized"] = m.all_stabilized;

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open metrics output file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace wncs
