#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "soen/behavioral_plasticity.hpp"

using namespace soen;

TEST_CASE("counter rng is a pure function of seed, stream and counter") {
    CounterRng a(5, 3), b(5, 3), c(5, 4);
    for (int i = 0; i < 100; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x != c.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    CounterRng d(1, 0);
    for (int i = 0; i < 1000; ++i) CHECK(d.uniform_open() > 0.0);
}

TEST_CASE("hard upper bound holds") {
    BehavioralSynapse s;
    s.states = 4;
    s.level = 4;
    s.q = 1.0;
    CounterRng rng(1, 0);
    for (int i = 0; i < 100; ++i) apply_candidate_event(s, Direction::strengthen, rng);
    CHECK(s.level == 4);
}

TEST_CASE("binary synapse switches with q = 1") {
    BehavioralSynapse s;
    s.states = 1;
    s.q = 1.0;
    CounterRng rng(1, 0);
    CHECK(apply_candidate_event(s, Direction::strengthen, rng));
    CHECK(s.w() == 1.0);
    CHECK(apply_candidate_event(s, Direction::weaken, rng));
    CHECK(s.w() == 0.0);
}

TEST_CASE("update fraction follows q") {
    BehavioralSynapse s;
    s.states = 1000000;
    s.level = 500000;
    s.q = 0.25;
    CounterRng rng(42, 0);
    int moved = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) moved += apply_candidate_event(s, i % 2 ? Direction::weaken : Direction::strengthen, rng);
    // Binomial sd is sqrt(q(1-q)/n) = 0.0014.
    CHECK(std::abs(static_cast<double>(moved) / n - 0.25) < 0.01);
}

TEST_CASE("weight stays on the level grid under a long fuzz") {
    std::mt19937_64 g(99);
    BehavioralSynapse s;
    s.states = 7;
    s.level = 3;
    CounterRng rng(3, 1);
    for (int i = 0; i < 1000000; ++i) {
        if (i % 1000 == 0) {
            s.q = static_cast<double>(g() % 1001) / 1000.0;
            s.bounds = g() & 1 ? BoundMode::soft : BoundMode::hard;
        }
        apply_candidate_event(s, g() & 1 ? Direction::strengthen : Direction::weaken, rng);
        REQUIRE(s.level >= 0);
        REQUIRE(s.level <= s.states);
    }
    CHECK(s.w() * s.states == doctest::Approx(s.level));
}

TEST_CASE("soft bounds shrink steps near the target bound") {
    BehavioralSynapse s;
    s.states = 10;
    s.q = 0.8;
    s.bounds = BoundMode::soft;
    s.level = 9;
    const double near = expected_step(s, Direction::strengthen);
    s.level = 5;
    const double mid = expected_step(s, Direction::strengthen);
    CHECK(near <= mid);
    CHECK(step_probability(s, Direction::strengthen) == doctest::Approx(0.8 * 0.5));
    s.level = 10;
    CHECK(step_probability(s, Direction::strengthen) == 0.0);
    CHECK(step_probability(s, Direction::weaken) == doctest::Approx(0.8));
}

TEST_CASE("invalid synapse and stream parameters") {
    BehavioralSynapse s;
    s.states = 0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    PlasticityEventStream e;
    e.f_plus = 0.8;
    e.f_minus = 0.5;
    CHECK_THROWS_AS(e.validate(), std::invalid_argument);
}

TEST_CASE("stdp update signs and support") {
    const StdpKernel k = StdpKernel::exponential(0.5, 20.0, 38.0);
    BehavioralSynapse s;
    s.states = 8;
    s.level = 4;
    stdp_update(s, k, 38.0, 0.0, 1000.0);
    CHECK(s.level == 4);
    stdp_update(s, k, 38.0, 0.0, 5.0);
    CHECK(s.level > 4);
    const int up = s.level;
    stdp_update(s, k, 38.0, 5.0, 0.0);
    CHECK(s.level < up);
}

TEST_CASE("stdp update rounds toward zero change") {
    const StdpKernel k({{0.0, 38.0, 0.2}, {10.0, 38.0, 0.2}});
    BehavioralSynapse s;
    s.states = 4;  // α = 0.25 > 0.2
    s.level = 2;
    stdp_update(s, k, 38.0, 0.0, 5.0);
    CHECK(s.level == 2);
}

TEST_CASE("kernel table lookup") {
    const StdpKernel k({{-10.0, 35.0, -0.01}, {0.0, 35.0, 0.02}, {10.0, 35.0, 0.01},
                        {-10.0, 38.0, -0.2}, {0.0, 38.0, 0.5}, {10.0, 38.0, 0.3}});
    CHECK(k.delta_w(5.0, 38.0) == doctest::Approx(0.4));
    CHECK(k.delta_w(-10.0, 38.0) == doctest::Approx(-0.2));
    // Each sign interpolates only within its own rows.
    CHECK(k.delta_w(-5.0, 38.0) == 0.0);
    CHECK(k.delta_w(50.0, 38.0) == 0.0);
    CHECK(k.delta_w(0.0, 37.9) == doctest::Approx(0.5));
    CHECK(std::abs(k.delta_w(0.0, 38.0)) > std::abs(k.delta_w(0.0, 35.0)));
    CHECK(k.bias_levels() == std::vector<double>{35.0, 38.0});

    std::stringstream io;
    k.write_csv(io);
    const StdpKernel back = StdpKernel::read_csv(io);
    CHECK(back.rows().size() == k.rows().size());
    CHECK(back.delta_w(5.0, 38.0) == doctest::Approx(0.4));

    std::istringstream bad("delta_t_ns,i_su_uA,delta_w\n1;2;3\n");
    CHECK_THROWS(StdpKernel::read_csv(bad));
    CHECK(StdpKernel::standard_grid() == std::vector<double>{0, 5, 10, 15, 20, 25, 35, 50, 75, 100});
}

TEST_CASE("short-term filter") {
    ShortTermState st;
    st.tau_sf = 20.0;
    st.tau_sd = 5.0;
    st.g_sf = 0.05;
    st.g_sd = 0.0;
    const std::vector<double> times = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 40, 80};
    CHECK(short_term_filter(st, 0.3, {}, times) == std::vector<double>(times.size(), 0.3));

    const std::vector<double> burst = {0.5, 1.5, 2.5, 3.5, 4.5};
    const auto w = short_term_filter(st, 0.3, burst, times);
    for (std::size_t i = 1; i <= 5; ++i) CHECK(w[i] >= w[i - 1]);
    for (std::size_t i = 6; i < w.size(); ++i) CHECK(w[i] <= w[i - 1]);
    // Leaky-integrator closed form after the burst.
    double sf = 0.0;
    for (double t : burst) sf += std::exp(-(20.0 - t) / 20.0);
    CHECK(w[11] == doctest::Approx(0.3 + 0.05 * sf).epsilon(1e-12));

    st.g_sd = st.g_sf;
    st.tau_sd = st.tau_sf;
    for (double v : short_term_filter(st, 0.3, burst, times)) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("homeostatic offset") {
    HomeostaticState h;
    h.tau_h = 50.0;
    h.g_h = 0.01;
    CHECK(homeostatic_update(h, {}, 100.0) == 0.0);
    auto steady = [&](double rate) {
        std::vector<double> spikes;
        for (double t = 0; t < 2000.0; t += 1.0 / rate) spikes.push_back(t);
        return homeostatic_update(h, spikes, 2000.0);
    };
    const double a = steady(0.2), b = steady(0.4);
    CHECK(a == doctest::Approx(-0.01 * 0.2 * 50.0).epsilon(0.05));
    CHECK(b == doctest::Approx(2.0 * a).epsilon(0.05));
}

TEST_CASE("metaplastic ladder") {
    const auto ladder = q_ladder_from_integrals({0.036, 0.18, 0.48, 1.0});
    CHECK(ladder == std::vector<double>{0.036, 0.18, 0.48, 1.0});
    BehavioralSynapse s;
    s.states = 8;
    s.level = 3;
    s.q_ladder = ladder;
    s.rung = 0;
    s.q = ladder[0];
    metaplastic_update(s, Correlation::up);
    metaplastic_update(s, Correlation::up);
    metaplastic_update(s, Correlation::down);
    CHECK(s.rung == 1);
    CHECK(s.q == 0.18);
    for (int i = 0; i < 10; ++i) metaplastic_update(s, Correlation::up);
    CHECK(s.rung == 3);
    CHECK(s.level == 3);
    for (int i = 0; i < 10; ++i) metaplastic_update(s, Correlation::down);
    CHECK(s.rung == 0);
    CHECK(s.level == 3);
}
