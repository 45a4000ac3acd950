#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "wncs/jitter.hpp"
#include "wncs/netsim.hpp"

using namespace wncs;

namespace {

Mode make_mode(int id, double period) {
    Mode m;
    m.id = id;
    m.T_U = period;
    m.T_D = 2.0 * period;
    m.schedule.period_T = period;
    m.schedule.mode_id = id;
    m.schedule.slots = {
        {"y", "sensor", {"controller"}, SlotKind::sensor_to_controller},
        {"u", "controller", {"actuator"}, SlotKind::controller_to_actuator},
    };
    return m;
}

const std::vector<std::string> kNodes = {"controller", "sensor", "actuator"};

}  // namespace

TEST_CASE("jitter bound: zero parameters give zero jitter") {
    JitterParams p;
    p.e_ref_hat = p.e_sync_hat = p.rho_ap_hat = p.rho_cp_hat = p.e_task_hat = 0.0;
    p.T_end_tilde = 0.0;
    CHECK(jitter_bound(p) == doctest::Approx(0.0));
}

TEST_CASE("jitter bound: default budget") {
    CHECK(jitter_bound(JitterParams{}) == doctest::Approx(50.0417).epsilon(1e-3));
}

TEST_CASE("jitter bound: zero interval removes the drift term") {
    JitterParams p;
    p.T_end_tilde = 0.0;
    CHECK(jitter_bound(p) == doctest::Approx(2.0 * (10.0 + 1.0 / 48.0) + 10.0).epsilon(1e-9));
}

TEST_CASE("jitter bound: monotone in every parameter") {
    const double base = jitter_bound(JitterParams{});
    auto bumped = [](auto set) {
        JitterParams p;
        set(p);
        return jitter_bound(p);
    };
    CHECK(bumped([](JitterParams& p) { p.e_ref_hat += 1; }) > base);
    CHECK(bumped([](JitterParams& p) { p.e_sync_hat += 1; }) > base);
    CHECK(bumped([](JitterParams& p) { p.rho_ap_hat += 1; }) > base);
    CHECK(bumped([](JitterParams& p) { p.rho_cp_hat += 1; }) > base);
    CHECK(bumped([](JitterParams& p) { p.e_task_hat += 1; }) > base);
    CHECK(bumped([](JitterParams& p) { p.T_end_tilde *= 2; }) > base);
}

TEST_CASE("jitter bound: rejects negative parameters") {
    JitterParams p;
    p.rho_ap_hat = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("lossless network delivers everything") {
    LossConfig loss;
    loss.beacon_loss_p = 0.0;
    NetworkSim net({make_mode(1, 0.02)}, loss, 1, kNodes);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 100; ++k) {
        auto out = net.run_round(rng);
        CHECK(out.round == k);
        CHECK(out.data_round);
        CHECK(out.deliveries.size() == 2);
        for (const auto& d : out.deliveries) CHECK(d.delivered);
        for (const auto& [node, got] : out.beacon_received) CHECK(got);
        CHECK(out.duty_cycle == doctest::Approx(3.0 * 0.004 / 0.02));
    }
}

TEST_CASE("per-link delivery rate matches the configured probability") {
    LossConfig loss;
    loss.beacon_loss_p = 0.0;
    loss.mu_theta = 0.5;
    loss.mu_phi = 0.9;
    NetworkSim net({make_mode(1, 0.02)}, loss, 1, kNodes);
    std::mt19937_64 rng(2);
    const int N = 100000;
    int got_y = 0, got_u = 0;
    for (int k = 0; k < N; ++k) {
        auto out = net.run_round(rng);
        got_y += out.delivered("y", "controller");
        got_u += out.delivered("u", "actuator");
    }
    CHECK(static_cast<double>(got_y) / N == doctest::Approx(0.5).epsilon(0.02));
    CHECK(static_cast<double>(got_u) / N == doctest::Approx(0.9).epsilon(0.02));
}

TEST_CASE("loss draws are serially uncorrelated") {
    LossConfig loss;
    loss.beacon_loss_p = 0.0;
    loss.mu_theta = 0.5;
    NetworkSim net({make_mode(1, 0.02)}, loss, 1, kNodes);
    std::mt19937_64 rng(3);
    const int N = 100000;
    std::vector<int> seq;
    seq.reserve(N);
    for (int k = 0; k < N; ++k) seq.push_back(net.run_round(rng).delivered("y", "controller"));
    double mean = 0.0;
    for (int v : seq) mean += v;
    mean /= N;
    double num = 0.0, den = 0.0;
    for (int k = 0; k < N; ++k) {
        den += (seq[k] - mean) * (seq[k] - mean);
        if (k + 1 < N) num += (seq[k] - mean) * (seq[k + 1] - mean);
    }
    CHECK(std::abs(num / den) < 0.02);
}

TEST_CASE("slot kinds map to their own loss probabilities") {
    Mode m = make_mode(1, 0.02);
    m.schedule.slots.push_back({"x", "sensor", {"actuator"}, SlotKind::state_exchange});
    LossConfig loss;
    loss.beacon_loss_p = 0.0;
    loss.mu_theta = 1.0;
    loss.mu_phi = 0.0;
    loss.mu_exchange = 1.0;
    NetworkSim net({m}, loss, 1, kNodes);
    std::mt19937_64 rng(4);
    for (int k = 0; k < 50; ++k) {
        auto out = net.run_round(rng);
        CHECK(out.delivered("y", "controller"));
        CHECK_FALSE(out.delivered("u", "actuator"));
        CHECK(out.delivered("x", "actuator"));
    }
}

TEST_CASE("burst blanks exactly the configured window") {
    LossConfig loss;
    loss.beacon_loss_p = 0.0;
    loss.burst = BurstConfig{40, 5.0};
    NetworkSim net({make_mode(1, 0.02)}, loss, 1, kNodes);  // 250 rounds per burst interval
    std::mt19937_64 rng(5);
    for (int k = 0; k < 600; ++k) {
        auto out = net.run_round(rng);
        const bool in_window = k >= 250 && k % 250 < 40;
        CHECK(net.in_burst(k) == in_window);
        CHECK(out.delivered("y", "controller") == !in_window);
        CHECK(out.delivered("u", "actuator") == !in_window);
    }
}

TEST_CASE("per-round deliveries are unique and rounds advance in order") {
    LossConfig loss;
    loss.mu_theta = 0.7;
    loss.mu_phi = 0.7;
    loss.beacon_loss_p = 0.05;
    NetworkSim net({make_mode(1, 0.02), make_mode(2, 0.04)}, loss, 1, kNodes);
    std::mt19937_64 rng(6);
    std::int64_t prev = -1;
    for (int k = 0; k < 2000; ++k) {
        if (k == 500) net.host_request_mode_change(2, 3);
        auto out = net.run_round(rng);
        CHECK(out.round == prev + 1);
        prev = out.round;
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& d : out.deliveries)
            CHECK(seen.emplace(d.message_id, d.destination).second);
    }
}

TEST_CASE("mode change switches after the countdown with one dead round") {
    LossConfig loss;
    loss.beacon_loss_p = 0.0;
    NetworkSim net({make_mode(1, 0.02), make_mode(2, 0.04)}, loss, 1, kNodes);
    std::mt19937_64 rng(7);
    for (int k = 0; k < 10; ++k) net.run_round(rng);

    REQUIRE(net.host_request_mode_change(2, 5));
    CHECK_FALSE(net.host_request_mode_change(2, 5));  // one change at a time
    for (int k = 10; k < 20; ++k) {
        auto out = net.run_round(rng);
        if (k < 15) {
            CHECK(out.beacon_mode == 1);
            CHECK(out.data_round);
            CHECK_FALSE(out.events.switched);
        } else if (k == 15) {
            // counter expired: everyone informed switches, round carries no data
            CHECK(out.events.switched);
            CHECK(out.events.flushed);
            CHECK(out.events.dead_round);
            CHECK(out.beacon_mode == 2);
            CHECK_FALSE(out.data_round);
            CHECK(out.deliveries.empty());
            for (const auto& [node, mode] : out.local_modes) CHECK(mode == 2);
        } else {
            CHECK(out.beacon_mode == 2);
            CHECK(out.data_round);
            CHECK(out.deliveries.size() == 2);
        }
    }
    CHECK(net.current_mode().id == 2);
    CHECK(net.current_mode().T_U == doctest::Approx(0.04));
}

TEST_CASE("mode change requests are validated") {
    NetworkSim net({make_mode(1, 0.02), make_mode(2, 0.04)}, LossConfig{}, 1, kNodes);
    CHECK_FALSE(net.host_request_mode_change(99, 3));  // unknown target
    CHECK_FALSE(net.host_request_mode_change(2, 0));   // countdown too short
    CHECK(net.host_request_mode_change(2, 1));
}

TEST_CASE("out-of-mode node resynchronizes via the beacon") {
    LossConfig loss;
    loss.beacon_loss_p = 0.0;
    NetworkSim net({make_mode(1, 0.02), make_mode(2, 0.04)}, loss, 2, kNodes);
    std::mt19937_64 rng(8);
    net.run_round(rng);

    net.set_out_of_mode("sensor", 1);
    auto out = net.run_round(rng);
    // the stale node hears the beacon, adopts the mode, but sits this round out
    REQUIRE(out.rejoined.size() == 1);
    CHECK(out.rejoined[0] == "sensor");
    CHECK_FALSE(out.delivered("y", "controller"));
    CHECK(out.delivered("u", "actuator"));  // unaffected link still works
    CHECK(out.local_modes.at("sensor") == 2);

    auto next = net.run_round(rng);
    CHECK(next.rejoined.empty());
    CHECK(next.delivered("y", "controller"));
}

TEST_CASE("lossless mode changes keep every node in the announced mode") {
    LossConfig loss;
    loss.beacon_loss_p = 0.0;
    NetworkSim net({make_mode(1, 0.02), make_mode(2, 0.04)}, loss, 1, kNodes);
    std::mt19937_64 rng(9);
    int want = 1;
    for (int k = 0; k < 400; ++k) {
        if (k % 50 == 10) net.host_request_mode_change(want == 1 ? 2 : 1, 4);
        if (k % 50 == 14) want = want == 1 ? 2 : 1;  // switch lands at offset 14
        auto out = net.run_round(rng);
        CHECK(out.beacon_mode == want);
        for (const auto& [node, mode] : out.local_modes) CHECK(mode == want);
    }
}

TEST_CASE("identical seeds reproduce the loss sequence exactly") {
    auto run = [] {
        LossConfig loss;
        loss.mu_theta = 0.6;
        loss.mu_phi = 0.8;
        loss.beacon_loss_p = 0.01;
        NetworkSim net({make_mode(1, 0.02)}, loss, 1, kNodes);
        std::mt19937_64 rng(77);
        std::vector<int> bits;
        for (int k = 0; k < 5000; ++k) {
            auto out = net.run_round(rng);
            bits.push_back(out.delivered("y", "controller") * 2 +
                           out.delivered("u", "actuator"));
        }
        return bits;
    };
    CHECK(run() == run());
}

TEST_CASE("constructor and config validation") {
    CHECK_THROWS_AS(NetworkSim({make_mode(1, 0.02)}, LossConfig{}, 9, kNodes), ConfigError);
    CHECK_THROWS_AS(NetworkSim({make_mode(1, 0.02), make_mode(1, 0.04)}, LossConfig{}, 1, kNodes),
                    ConfigError);
    LossConfig bad;
    bad.mu_theta = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    Mode dup = make_mode(1, 0.02);
    dup.schedule.slots.push_back({"y", "sensor", {"actuator"}, SlotKind::sensor_to_controller});
    CHECK_THROWS_AS(dup.schedule.validate(), ConfigError);
}
