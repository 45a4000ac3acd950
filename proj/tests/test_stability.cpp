#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "wncs/cartpole.hpp"
#include "wncs/dwell.hpp"
#include "wncs/gains.hpp"
#include "wncs/second_moment.hpp"

using namespace wncs;

namespace {

AugmentedClosedLoop scalar_loop(double a, double b, double f, double mu_theta, double mu_phi,
                                double q_proc = 0.0, double q_meas = 0.0) {
    return build_augmented(a * Mat::Ones(1, 1), b * Mat::Ones(1, 1), f * Mat::Ones(1, 1),
                           mu_theta, mu_phi, q_proc * Mat::Ones(1, 1), q_meas * Mat::Ones(1, 1));
}

// Step the actual lossy loop once: the closed-loop transition for given
// delivery indicators, via the zero-mean perturbation values they induce.
Mat transition_for(const AugmentedClosedLoop& acl, bool theta, bool phi) {
    const double p1 = (acl.mu_theta - (theta ? 1.0 : 0.0)) / acl.mu_theta;
    const double p2 = (acl.mu_phi - (phi ? 1.0 : 0.0)) / acl.mu_phi;
    return acl.A0 + p1 * acl.A1 + p2 * acl.A2;
}

// Scalar-loop transition built straight from the protocol recursion, with no
// use of the augmented-model builder: an independent oracle.
Mat protocol_transition(double a, double b, double f, bool theta, bool phi) {
    Mat T = Mat::Zero(4, 4);
    T(0, 0) = a;
    T(0, 2) = b;  // x+ = a x + b u
    T(1, theta ? 0 : 1) = a;
    T(1, 3) = b;  // xh+ = a (theta ? x : xh) + b uh
    T(3, 1) = f * a;
    T(3, 3) = f * b;  // uh+ = f (a xh + b uh)
    if (phi)
        T.row(2) = T.row(3);  // u+ = uh+ when delivered
    else
        T(2, 2) = 1.0;
    return T;
}

// Exact growth rate of E[|z|^2]: propagate the covariance through the four
// delivery outcomes weighted by their probabilities.
double exact_growth_rate(double a, double b, double f, double mu_theta, double mu_phi,
                         int steps) {
    Mat T[2][2];
    double p[2][2];
    for (int th = 0; th <= 1; ++th)
        for (int ph = 0; ph <= 1; ++ph) {
            T[th][ph] = protocol_transition(a, b, f, th, ph);
            p[th][ph] = (th ? mu_theta : 1.0 - mu_theta) * (ph ? mu_phi : 1.0 - mu_phi);
        }
    Mat M = 0.25 * Mat::Identity(4, 4);  // unit trace
    double log_growth = 0.0;
    for (int k = 0; k < steps; ++k) {
        Mat next = Mat::Zero(4, 4);
        for (int th = 0; th <= 1; ++th)
            for (int ph = 0; ph <= 1; ++ph) next += p[th][ph] * T[th][ph] * M * T[th][ph].transpose();
        const double tr = next.trace();
        log_growth += std::log(tr);
        M = next / tr;
    }
    return log_growth / steps;
}

}  // namespace

TEST_CASE("augmented construction basics") {
    auto d = discretize(linearize_cartpole(CartPoleParams{}), 0.04);
    auto g = place_poles(d.A, d.B, {{0.8, 0}, {0.85, 0}, {0.9, 0}, {0.9, 0}});
    auto acl = build_augmented(d.A, d.B, g.F, 0.9, 0.8, Mat::Zero(4, 4), Mat::Zero(4, 4));
    CHECK(acl.dim() == 10);  // 2n + 2m with n=4, m=1
    CHECK(acl.sigma2_1 == doctest::Approx(1.0 / 0.9 - 1.0));
    CHECK(acl.sigma2_2 == doctest::Approx(1.0 / 0.8 - 1.0));

    auto perfect = scalar_loop(1.1, 1.0, -0.6, 1.0, 1.0);
    CHECK(perfect.sigma2_1 == doctest::Approx(0.0));
    CHECK(perfect.sigma2_2 == doctest::Approx(0.0));

    auto half = scalar_loop(1.1, 1.0, -0.6, 0.5, 1.0);
    CHECK(half.sigma2_1 == doctest::Approx(1.0));

    CHECK_THROWS_AS(scalar_loop(1.1, 1.0, -0.6, 0.0, 1.0), ConfigError);
}

TEST_CASE("augmented blocks match the closed-loop recursion") {
    // One exact step of the real protocol must equal the z-space transition.
    const double a = 1.3, b = 0.7, f = -1.1, mt = 0.6, mp = 0.55;
    auto acl = scalar_loop(a, b, f, mt, mp);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int theta = 0; theta <= 1; ++theta)
        for (int phi = 0; phi <= 1; ++phi) {
            // z = (x, x_hat, u, u_hat); uh is the input in flight this round
            const double x = unit(rng), xh = unit(rng), u = unit(rng), uh = unit(rng);
            // protocol step, noise-free: the measurement delivered is the
            // current state, the delivered input is the one computed now
            const double xh_next = a * (theta ? x : xh) + b * uh;
            const double uh_next = f * (a * xh + b * uh);
            const double u_next = phi ? uh_next : u;
            const double x_next = a * x + b * u;
            Vec z(4);
            z << x, xh, u, uh;
            Vec z_model = transition_for(acl, theta, phi) * z;
            CHECK(z_model(0) == doctest::Approx(x_next).epsilon(1e-12));
            CHECK(z_model(1) == doctest::Approx(xh_next).epsilon(1e-12));
            CHECK(z_model(2) == doctest::Approx(u_next).epsilon(1e-12));
            CHECK(z_model(3) == doctest::Approx(uh_next).epsilon(1e-12));
        }
}

TEST_CASE("second moment operator applies the explicit map") {
    auto acl = scalar_loop(1.1, 1.0, -0.6, 0.7, 0.8, 0.3, 0.2);
    auto smo = second_moment_operator(acl);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int t = 0; t < 10; ++t) {
        Mat M(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = i; j < 4; ++j) M(i, j) = M(j, i) = unit(rng);
        Mat direct = acl.A0 * M * acl.A0.transpose() +
                     acl.sigma2_1 * acl.A1 * M * acl.A1.transpose() +
                     acl.sigma2_2 * acl.A2 * M * acl.A2.transpose();
        CHECK((smo.apply(M) - direct).cwiseAbs().maxCoeff() < 1e-10);
    }
    Mat W_hat_direct = acl.E0 * acl.W * acl.E0.transpose() +
                       acl.sigma2_1 * acl.E1 * acl.W * acl.E1.transpose();
    CHECK((smo.W_hat - W_hat_direct).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scalar second-moment operator values") {
    SecondMomentOperator smo;
    smo.d = 1;
    smo.G = 0.25 * Mat::Ones(1, 1);
    smo.W_hat = Mat::Ones(1, 1);
    CHECK(smo.apply(Mat::Ones(1, 1))(0, 0) == doctest::Approx(0.25));
    // geometric series: W_bar = 1 / (1 - 0.25)
    CHECK(steady_state_correlation(smo)(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    smo.W_hat = Mat::Zero(1, 1);
    CHECK(steady_state_correlation(smo)(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("perfect communication: verdict from the nominal spectrum") {
    auto acl = scalar_loop(1.1, 1.0, -0.6, 1.0, 1.0);
    auto cert = check_mss(acl);
    CHECK(cert.stable());
    // nominal closed loop a+bf = 0.5; the moment operator squares it
    CHECK(cert.spectral_radius == doctest::Approx(0.25).epsilon(1e-9));
    REQUIRE(cert.P.has_value());
    CHECK(cert.lmi_margin < 0.0);
}

TEST_CASE("near-total actuator loss destabilizes an unstable plant") {
    auto cert = check_mss(scalar_loop(1.1, 1.0, -0.6, 1.0, 1e-3));
    CHECK_FALSE(cert.stable());
    CHECK(cert.spectral_radius > 1.0);
}

TEST_CASE("critical actuator-loss probability matches Monte Carlo") {
    auto rho = [&](double mu_phi) {
        return check_mss(scalar_loop(1.1, 1.0, -0.6, 1.0, mu_phi)).spectral_radius;
    };
    double lo = 1e-3, hi = 1.0;
    REQUIRE(rho(hi) < 1.0);
    REQUIRE(rho(lo) > 1.0);
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        (rho(mid) < 1.0 ? hi : lo) = mid;
    }
    const double mu_star = 0.5 * (lo + hi);
    // the protocol-level moment recursion changes sign within +-0.02 of mu_star
    const double g_above = exact_growth_rate(1.1, 1.0, -0.6, 1.0, mu_star + 0.02, 4000);
    const double g_below = exact_growth_rate(1.1, 1.0, -0.6, 1.0, mu_star - 0.02, 4000);
    CHECK(g_above < 0.0);
    CHECK(g_below > 0.0);
}

TEST_CASE("steady state matches a long lossy simulation (scalar loop)") {
    const double a = 1.1, b = 1.0, f = -0.6, mt = 0.8, mp = 0.8;
    auto acl = scalar_loop(a, b, f, mt, mp, 0.01, 0.004);
    auto smo = second_moment_operator(acl);
    auto cert = check_mss(smo);
    REQUIRE(cert.stable());
    Mat W_bar = steady_state_correlation(smo);

    // simulate the full stochastic recursion z(k+1) = A(k) z(k) + E(k) eps(k)
    std::mt19937_64 rng(97);
    std::bernoulli_distribution dth(mt), dph(mp);
    std::normal_distribution<double> gauss;
    Vec z = Vec::Zero(4);
    double acc = 0.0;
    const int warmup = 2000, N = 1000000;
    for (int k = 0; k < warmup + N; ++k) {
        const bool th = dth(rng), ph = dph(rng);
        const double p1 = (mt - (th ? 1 : 0)) / mt;
        Vec eps(2);
        eps << std::sqrt(0.01) * gauss(rng), std::sqrt(0.004) * gauss(rng);
        z = transition_for(acl, th, ph) * z + (acl.E0 + p1 * acl.E1) * eps;
        if (k >= warmup) acc += z(0) * z(0);
    }
    acc /= N;
    CHECK(acc == doctest::Approx(W_bar(0, 0)).epsilon(0.10));
}

TEST_CASE("moment recursion equals the unrolled operator sum") {
    auto acl = scalar_loop(1.1, 1.0, -0.6, 0.7, 0.9, 0.02, 0.01);
    auto smo = second_moment_operator(acl);
    Mat M = Mat::Identity(4, 4);
    Mat step = M;
    for (int k = 1; k <= 20; ++k) {
        step = smo.apply(step) + smo.W_hat;
        // closed form: Gamma^k(M0) + sum_{i<k} Gamma^i(W_hat)
        Mat direct = M;
        for (int i = 0; i < k; ++i) direct = smo.apply(direct);
        Mat tail = Mat::Zero(4, 4);
        Mat term = smo.W_hat;
        for (int i = 0; i < k; ++i) {
            tail += term;
            term = smo.apply(term);
        }
        CHECK((step - (direct + tail)).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("spectral radius is monotone in delivery probability") {
    double prev_theta = -1.0, prev_phi = -1.0;
    for (double mu = 1.0; mu >= 0.2; mu -= 0.1) {
        const double r_th = check_mss(scalar_loop(1.1, 1.0, -0.6, mu, 1.0)).spectral_radius;
        const double r_ph = check_mss(scalar_loop(1.1, 1.0, -0.6, 1.0, mu)).spectral_radius;
        if (prev_theta >= 0) {
            CHECK(r_th >= prev_theta - 1e-12);
            CHECK(r_ph >= prev_phi - 1e-12);
        }
        prev_theta = r_th;
        prev_phi = r_ph;
    }
}

TEST_CASE("Lyapunov certificate agrees with the spectral verdict") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    int checked = 0;
    for (int t = 0; t < 200; ++t) {
        const Eigen::Index d = 2 + t % 5;  // d up to 6
        SecondMomentOperator smo;
        smo.d = d;
        Mat A0(d, d), A1(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) {
                A0(i, j) = unit(rng) * 0.7;
                A1(i, j) = unit(rng) * 0.4;
            }
        const double s2 = std::abs(unit(rng));
        smo.G = kron(A0, A0) + s2 * kron(A1, A1);
        smo.W_hat = Mat::Zero(d, d);
        const double rho = spectral_radius(smo.G);
        if (std::abs(rho - 1.0) <= 1e-3) continue;
        ++checked;
        auto cert = check_mss(smo);
        if (rho < 1.0) {
            CHECK(cert.stable());
            REQUIRE(cert.P.has_value());
            CHECK(cert.lmi_margin < 0.0);
        } else {
            CHECK_FALSE(cert.stable());
        }
    }
    CHECK(checked > 100);  // the sweep must actually exercise both sides
}

TEST_CASE("steady state requires stability") {
    auto smo = second_moment_operator(scalar_loop(1.1, 1.0, -0.6, 1.0, 0.01, 0.1, 0.1));
    CHECK_THROWS_AS(steady_state_correlation(smo), AnalysisError);
}

TEST_CASE("dwell time formula") {
    CHECK(dwell_time_from_constants(0.05, 2.0) == 14);
    CHECK(dwell_time_from_constants(0.05, 1.0) == 1);
    CHECK_THROWS_AS(dwell_time_from_constants(1.5, 2.0), ConfigError);
    CHECK_THROWS_AS(dwell_time_from_constants(0.05, 0.5), ConfigError);
}

TEST_CASE("min average dwell time over identical modes is finite") {
    SwitchedSystem sw;
    sw.modes.push_back(scalar_loop(1.1, 1.0, -0.6, 0.9, 0.9));
    sw.modes.push_back(scalar_loop(1.1, 1.0, -0.6, 0.9, 0.9));
    auto cert = min_avg_dwell_time(sw);
    CHECK(cert.alpha > 0.0);
    CHECK(cert.alpha < 1.0);
    CHECK(cert.mu >= 1.0);
    CHECK(cert.tau_a_star >= 1);
    REQUIRE(cert.per_mode_P.size() == 2);
    // P solves G^T P G - P = -I on the vectorized space
    const Mat& G = second_moment_operator(sw.modes[0]).G;
    const Mat& P = cert.per_mode_P[0];
    Mat residual = G.transpose() * P * G - P + Mat::Identity(P.rows(), P.cols());
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("dwell certificate refuses unstable modes") {
    SwitchedSystem sw;
    sw.modes.push_back(scalar_loop(1.1, 1.0, -0.6, 0.9, 0.9));
    sw.modes.push_back(scalar_loop(1.1, 1.0, -0.6, 1.0, 0.01));
    CHECK_THROWS_AS(min_avg_dwell_time(sw), AnalysisError);
}

TEST_CASE("switching signal verification") {
    DwellTimeCertificate cert;
    cert.tau_a_star = 289;

    SwitchingSignal none;
    none.N0 = 1.0;
    none.horizon = 100000;
    CHECK(verify_switching_signal(none, cert));

    SwitchingSignal slow;
    slow.N0 = 1.0;
    slow.horizon = 20000;
    for (std::int64_t k = 2000; k < 20000; k += 2000) slow.events.emplace_back(k, k / 2000 % 2);
    CHECK(verify_switching_signal(slow, cert));

    DwellTimeCertificate fast_cert;
    fast_cert.tau_a_star = 14;
    SwitchingSignal fast;
    fast.N0 = 1.0;
    fast.horizon = 100;
    for (std::int64_t k = 1; k < 100; ++k) fast.events.emplace_back(k, k % 2);
    CHECK_FALSE(verify_switching_signal(fast, fast_cert));
}

TEST_CASE("accepted switching keeps the moment recursion bounded") {
    SwitchedSystem sw;
    sw.modes.push_back(scalar_loop(1.1, 1.0, -0.6, 0.95, 0.95));
    sw.modes.push_back(scalar_loop(1.1, 1.0, -0.5, 0.9, 0.9));
    auto cert = min_avg_dwell_time(sw);

    // Build a signal switching exactly at the certified average dwell time.
    const std::int64_t period = std::max<std::int64_t>(cert.tau_a_star, 1);
    SwitchingSignal sig;
    sig.N0 = 1.0;
    sig.horizon = 100000;
    std::size_t mode = 0;
    for (std::int64_t k = period; k < sig.horizon; k += period) {
        mode = 1 - mode;
        sig.events.emplace_back(k, mode);
    }
    REQUIRE(verify_switching_signal(sig, cert));

    std::vector<Mat> G;
    for (const auto& m : sw.modes) G.push_back(second_moment_operator(m).G);
    Vec v = vec(Mat::Identity(4, 4));
    const double v0 = v.norm();
    std::size_t cur = 0, next_event = 0;
    for (std::int64_t k = 0; k < sig.horizon; ++k) {
        if (next_event < sig.events.size() && sig.events[next_event].first == k)
            cur = sig.events[next_event++].second;
        v = G[cur] * v;
        REQUIRE(v.norm() <= 1e6 * v0);
    }
}
