#include "wncs/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace wncs {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
}

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown key");
}

const json* find(const json& obj, const std::string& key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    const json* p = find(obj, key);
    if (!p) fail(path + "." + key, "missing required key");
    return *p;
}

double get_double(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

std::int64_t get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<std::int64_t>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Vec get_vector(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = get_double(j[i], path + "[" + std::to_string(i) + "]");
    return v;
}

Mat get_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) fail(path, "expected rows as arrays of numbers");
    Mat m(j.size(), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != cols) fail(rp, "ragged matrix row");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                get_double(j[r][c], rp + "[" + std::to_string(c) + "]");
    }
    return m;
}

// Noise is given either as per-component standard deviations ("..._std", an
// array) or as a full covariance matrix ("..._cov").
Mat get_noise(const json& obj, const std::string& stem, const std::string& path,
              Eigen::Index n) {
    const json* std_j = find(obj, stem + "_std");
    const json* cov_j = find(obj, stem + "_cov");
    if (std_j && cov_j) fail(path, "give " + stem + "_std or " + stem + "_cov, not both");
    if (std_j) {
        Vec s = get_vector(*std_j, path + "." + stem + "_std");
        if (s.size() != n) fail(path + "." + stem + "_std", "wrong length");
        return s.cwiseProduct(s).asDiagonal();
    }
    if (cov_j) {
        Mat c = get_matrix(*cov_j, path + "." + stem + "_cov");
        if (c.rows() != n || c.cols() != n) fail(path + "." + stem + "_cov", "wrong shape");
        return c;
    }
    return Mat::Zero(n, n);
}

CartPoleParams parse_cartpole(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path,
                   {"cart_mass", "pole_mass", "pole_half_length", "gravity", "cart_friction",
                    "input_gain"});
    CartPoleParams p;
    if (const json* v = find(j, "cart_mass")) p.cart_mass = get_double(*v, path + ".cart_mass");
    if (const json* v = find(j, "pole_mass")) p.pole_mass = get_double(*v, path + ".pole_mass");
    if (const json* v = find(j, "pole_half_length"))
        p.pole_half_length = get_double(*v, path + ".pole_half_length");
    if (const json* v = find(j, "gravity")) p.gravity = get_double(*v, path + ".gravity");
    if (const json* v = find(j, "cart_friction"))
        p.cart_friction = get_double(*v, path + ".cart_friction");
    if (const json* v = find(j, "input_gain")) p.input_gain = get_double(*v, path + ".input_gain");
    p.validate();
    return p;
}

PlantSpec parse_plant(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path,
                   {"name", "cartpole", "A", "B", "process_noise_std", "process_noise_cov",
                    "noise_reference_T_U", "measurement_noise_std", "measurement_noise_cov",
                    "constraints", "x0"});
    PlantSpec p;
    p.name = get_string(require(j, "name", path), path + ".name");
    const json* cp = find(j, "cartpole");
    const json* A = find(j, "A");
    const json* B = find(j, "B");
    if (cp && (A || B)) fail(path, "give either cartpole or explicit A/B, not both");
    if (cp) {
        p.cartpole = parse_cartpole(*cp, path + ".cartpole");
    } else {
        if (!A || !B) fail(path, "need cartpole or both A and B");
        p.A_explicit = get_matrix(*A, path + ".A");
        p.B_explicit = get_matrix(*B, path + ".B");
        if (p.A_explicit->rows() != p.A_explicit->cols() ||
            p.B_explicit->rows() != p.A_explicit->rows())
            fail(path, "A must be square and B row-compatible with A");
    }
    const Eigen::Index n = p.state_dim();
    p.sigma_proc = get_noise(j, "process_noise", path, n);
    if (const json* v = find(j, "noise_reference_T_U")) {
        p.noise_reference_T_U = get_double(*v, path + ".noise_reference_T_U");
        if (!(*p.noise_reference_T_U > 0)) fail(path + ".noise_reference_T_U", "must be positive");
    }
    p.sigma_meas = get_noise(j, "measurement_noise", path, n);
    if (const json* c = find(j, "constraints")) {
        const std::string cpth = path + ".constraints";
        expect_object(*c, cpth);
        reject_unknown(*c, cpth, {"input_cap", "track_limit"});
        PlantConstraints pc;
        if (const json* v = find(*c, "input_cap"))
            pc.input_cap = get_double(*v, cpth + ".input_cap");
        if (const json* v = find(*c, "track_limit"))
            pc.track_limit = get_double(*v, cpth + ".track_limit");
        pc.validate();
        p.constraints = pc;
    }
    if (const json* v = find(j, "x0")) {
        p.x0 = get_vector(*v, path + ".x0");
        if (p.x0.size() != n) fail(path + ".x0", "wrong length");
    } else {
        p.x0 = Vec::Zero(n);
    }
    return p;
}

ControllerSpec parse_controller(const json& j, const std::string& path) {
    expect_object(j, path);
    reject_unknown(j, path, {"type", "poles", "reference_T_U", "Q", "R", "Q_sync", "F"});
    ControllerSpec c;
    const std::string type = get_string(require(j, "type", path), path + ".type");
    if (type == "pole_placement") {
        c.type = ControllerSpec::Type::pole_placement;
        const json& poles = require(j, "poles", path);
        if (!poles.is_array() || poles.empty()) fail(path + ".poles", "expected a non-empty array");
        for (std::size_t i = 0; i < poles.size(); ++i) {
            const std::string pp = path + ".poles[" + std::to_string(i) + "]";
            const json& e = poles[i];
            if (e.is_number()) {
                c.poles.emplace_back(e.get<double>(), 0.0);
            } else if (e.is_array() && e.size() == 2) {
                c.poles.emplace_back(get_double(e[0], pp + "[0]"), get_double(e[1], pp + "[1]"));
            } else {
                fail(pp, "expected a number or [re, im] pair");
            }
        }
        if (const json* v = find(j, "reference_T_U")) {
            c.reference_T_U = get_double(*v, path + ".reference_T_U");
            if (!(c.reference_T_U > 0)) fail(path + ".reference_T_U", "must be positive");
        }
    } else if (type == "lqr" || type == "sync_lqr") {
        c.type = type == "lqr" ? ControllerSpec::Type::lqr : ControllerSpec::Type::sync_lqr;
        c.Q = get_matrix(require(j, "Q", path), path + ".Q");
        c.R = get_matrix(require(j, "R", path), path + ".R");
        if (c.type == ControllerSpec::Type::sync_lqr)
            c.Q_sync = get_matrix(require(j, "Q_sync", path), path + ".Q_sync");
    } else if (type == "explicit") {
        c.type = ControllerSpec::Type::explicit_gain;
        c.F_explicit = get_matrix(require(j, "F", path), path + ".F");
    } else {
        fail(path + ".type", "unknown controller type '" + type + "'");
    }
    return c;
}

void parse_network(const json& j, const std::string& path, Scenario& sc) {
    expect_object(j, path);
    reject_unknown(j, path,
                   {"mu_theta", "mu_phi", "mu_exchange", "beacon_loss_p", "burst", "modes"});
    if (const json* v = find(j, "mu_theta")) sc.loss.mu_theta = get_double(*v, path + ".mu_theta");
    if (const json* v = find(j, "mu_phi")) sc.loss.mu_phi = get_double(*v, path + ".mu_phi");
    if (const json* v = find(j, "mu_exchange"))
        sc.loss.mu_exchange = get_double(*v, path + ".mu_exchange");
    if (const json* v = find(j, "beacon_loss_p"))
        sc.loss.beacon_loss_p = get_double(*v, path + ".beacon_loss_p");
    if (const json* v = find(j, "burst")) {
        const std::string bp = path + ".burst";
        expect_object(*v, bp);
        reject_unknown(*v, bp, {"length", "interval_s"});
        BurstConfig b;
        b.length = static_cast<int>(get_int(require(*v, "length", bp), bp + ".length"));
        b.interval_s = get_double(require(*v, "interval_s", bp), bp + ".interval_s");
        sc.loss.burst = b;
    }
    sc.loss.validate();
    const json& modes = require(j, "modes", path);
    if (!modes.is_array() || modes.empty()) fail(path + ".modes", "expected a non-empty array");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        const std::string mp = path + ".modes[" + std::to_string(i) + "]";
        expect_object(modes[i], mp);
        reject_unknown(modes[i], mp, {"id", "T_U", "slot_length"});
        Mode m;
        m.id = static_cast<int>(get_int(require(modes[i], "id", mp), mp + ".id"));
        m.T_U = get_double(require(modes[i], "T_U", mp), mp + ".T_U");
        if (!(m.T_U > 0)) fail(mp + ".T_U", "must be positive");
        m.T_D = 2.0 * m.T_U;
        m.schedule.mode_id = m.id;
        if (const json* v = find(modes[i], "slot_length"))
            m.schedule.slot_length = get_double(*v, mp + ".slot_length");
        sc.modes.push_back(std::move(m));
    }
}

void parse_run(const json& j, const std::string& path, Scenario& sc) {
    expect_object(j, path);
    reject_unknown(j, path,
                   {"horizon", "seed", "initial_mode", "sync", "mode_script", "hold_script"});
    sc.horizon = get_int(require(j, "horizon", path), path + ".horizon");
    if (const json* v = find(j, "seed"))
        sc.seed = static_cast<std::uint64_t>(get_int(*v, path + ".seed"));
    if (const json* v = find(j, "initial_mode"))
        sc.initial_mode = static_cast<int>(get_int(*v, path + ".initial_mode"));
    if (const json* v = find(j, "sync")) {
        const std::string sp = path + ".sync";
        expect_object(*v, sp);
        reject_unknown(*v, sp, {"local_T_U", "exchange_every"});
        sc.sync_task = true;
        if (const json* w = find(*v, "local_T_U"))
            sc.sync.local_T_U = get_double(*w, sp + ".local_T_U");
        if (const json* w = find(*v, "exchange_every"))
            sc.sync.exchange_every = static_cast<int>(get_int(*w, sp + ".exchange_every"));
        if (!(sc.sync.local_T_U > 0) || sc.sync.exchange_every < 1)
            fail(sp, "local_T_U must be positive and exchange_every >= 1");
    }
    if (const json* v = find(j, "mode_script")) {
        if (!v->is_array()) fail(path + ".mode_script", "expected an array");
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string ep = path + ".mode_script[" + std::to_string(i) + "]";
            expect_object((*v)[i], ep);
            reject_unknown((*v)[i], ep, {"step", "next_mode", "rounds"});
            ModeChangeEventSpec e;
            e.step = get_int(require((*v)[i], "step", ep), ep + ".step");
            e.next_mode = static_cast<int>(get_int(require((*v)[i], "next_mode", ep), ep + ".next_mode"));
            if (const json* w = find((*v)[i], "rounds"))
                e.rounds = static_cast<int>(get_int(*w, ep + ".rounds"));
            sc.mode_script.push_back(e);
        }
    }
    if (const json* v = find(j, "hold_script")) {
        if (!v->is_array()) fail(path + ".hold_script", "expected an array");
        for (std::size_t i = 0; i < v->size(); ++i) {
            const std::string ep = path + ".hold_script[" + std::to_string(i) + "]";
            expect_object((*v)[i], ep);
            reject_unknown((*v)[i], ep, {"agent", "start_step", "end_step", "position"});
            HoldSpec h;
            h.agent = static_cast<std::size_t>(get_int(require((*v)[i], "agent", ep), ep + ".agent"));
            h.start_step = get_int(require((*v)[i], "start_step", ep), ep + ".start_step");
            h.end_step = get_int(require((*v)[i], "end_step", ep), ep + ".end_step");
            h.position = get_double(require((*v)[i], "position", ep), ep + ".position");
            sc.hold_script.push_back(h);
        }
    }
}

// The per-mode slot list is derived from the plant roster: a remote loop
// exchanges one measurement and one control message per plant each round; a
// sync task broadcasts each agent's state to all others.
void build_schedules(Scenario& sc) {
    for (Mode& m : sc.modes) {
        m.schedule.slots.clear();
        if (sc.sync_task) {
            m.schedule.period_T = sc.sync.local_T_U * sc.sync.exchange_every;
            for (const PlantSpec& p : sc.plants) {
                Slot s;
                s.message_id = "x:" + p.name;
                s.source = p.name;
                for (const PlantSpec& q : sc.plants)
                    if (q.name != p.name) s.destinations.push_back(q.name);
                s.kind = SlotKind::state_exchange;
                m.schedule.slots.push_back(std::move(s));
            }
        } else {
            m.schedule.period_T = m.T_U;
            for (const PlantSpec& p : sc.plants) {
                Slot up;
                up.message_id = "y:" + p.name;
                up.source = "sensor:" + p.name;
                up.destinations = {"controller"};
                up.kind = SlotKind::sensor_to_controller;
                m.schedule.slots.push_back(std::move(up));
                Slot down;
                down.message_id = "u:" + p.name;
                down.source = "controller";
                down.destinations = {"actuator:" + p.name};
                down.kind = SlotKind::controller_to_actuator;
                m.schedule.slots.push_back(std::move(down));
            }
        }
        m.schedule.validate();
    }
}

}  // namespace

Eigen::Index PlantSpec::state_dim() const {
    return cartpole ? 4 : A_explicit->rows();
}

Mat PlantSpec::sigma_proc_at(double T_U) const {
    if (!noise_reference_T_U) return sigma_proc;
    return sigma_proc * (T_U / *noise_reference_T_U);
}

void Scenario::validate() const {
    if (plants.empty()) throw ConfigError("scenario has no plants");
    if (horizon <= 0) throw ConfigError("run.horizon must be positive");
    std::set<std::string> names;
    for (const auto& p : plants)
        if (!names.insert(p.name).second)
            throw ConfigError("duplicate plant name: " + p.name);
    std::set<int> mode_ids;
    for (const auto& m : modes) mode_ids.insert(m.id);
    if (!mode_ids.count(initial_mode)) throw ConfigError("run.initial_mode is not a known mode");
    for (const auto& e : mode_script) {
        if (!mode_ids.count(e.next_mode))
            throw ConfigError("mode_script references unknown mode " + std::to_string(e.next_mode));
        if (e.step < 0 || e.rounds < 1)
            throw ConfigError("mode_script entries need step >= 0 and rounds >= 1");
    }
    for (const auto& h : hold_script)
        if (h.agent >= plants.size() || h.end_step < h.start_step)
            throw ConfigError("hold_script entry out of range");
    if (sync_task) {
        if (controller.type != ControllerSpec::Type::sync_lqr)
            throw ConfigError("sync runs require a sync_lqr controller");
    } else if (controller.type == ControllerSpec::Type::sync_lqr) {
        throw ConfigError("sync_lqr controller requires a run.sync section");
    }
    for (const auto& p : plants)
        if (!sync_task && p.B_explicit && p.B_explicit->cols() < 1)
            throw ConfigError("plant " + p.name + " has no input");
}

Scenario parse_scenario(const std::string& json_text, const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    expect_object(root, origin);
    reject_unknown(root, origin,
                   {"schema_version", "plants", "controller", "network", "run", "output"});
    const auto ver = get_int(require(root, "schema_version", origin), origin + ".schema_version");
    if (ver != kSchemaVersion)
        fail(origin + ".schema_version",
             "unsupported version " + std::to_string(ver) + " (expected " +
                 std::to_string(kSchemaVersion) + ")");

    Scenario sc;
    const json& plants = require(root, "plants", origin);
    if (!plants.is_array() || plants.empty())
        fail(origin + ".plants", "expected a non-empty array");
    for (std::size_t i = 0; i < plants.size(); ++i)
        sc.plants.push_back(parse_plant(plants[i], origin + ".plants[" + std::to_string(i) + "]"));

    sc.controller = parse_controller(require(root, "controller", origin), origin + ".controller");
    parse_network(require(root, "network", origin), origin + ".network", sc);
    parse_run(require(root, "run", origin), origin + ".run", sc);

    if (const json* out = find(root, "output")) {
        const std::string op = origin + ".output";
        expect_object(*out, op);
        reject_unknown(*out, op, {"trace_csv", "metrics_json"});
        if (const json* v = find(*out, "trace_csv"))
            sc.trace_csv = get_string(*v, op + ".trace_csv");
        if (const json* v = find(*out, "metrics_json"))
            sc.metrics_json = get_string(*v, op + ".metrics_json");
    }

    build_schedules(sc);
    sc.validate();
    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

}  // namespace wncs
