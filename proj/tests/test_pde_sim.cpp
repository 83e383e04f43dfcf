#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "fhn/pde_sim.hpp"

using namespace fhn;
using doctest::Approx;

namespace {

const ModelParams canon{0.45, 50, 1e-5};

SimState uniform(const SimGrid& g, double u, double v)
{
    SimState s = init_state(SimKind::custom, canon, g);
    s.u.assign(g.n, u);
    s.v.assign(g.n, v);
    return s;
}

double drift(const SimState& s, double u, double v)
{
    double m = 0;
    for (int i = 0; i < s.grid.n; ++i) m = std::max({m, std::abs(s.u[i] - u), std::abs(s.v[i] - v)});
    return m;
}

}  // namespace

TEST_CASE("initial states")
{
    const double mu3 = equilibria(canon)[1];
    const auto g = SimGrid::centered(100, 2048);
    auto f = init_state(SimKind::front, canon, g);
    CHECK(f.u.front() == Approx(mu3).epsilon(1e-14));
    CHECK(std::abs(f.u.back()) < 1e-14);
    CHECK(f.v.front() == Approx(mu3 / canon.gamma).epsilon(1e-14));
    CHECK(std::abs(f.v.back()) < 1e-14);

    auto r = init_state(SimKind::reversed_front, canon, g);
    CHECK(std::abs(r.u.front()) < 1e-14);
    CHECK(r.u.back() == Approx(mu3).epsilon(1e-14));
    CHECK(r.v.back() == Approx(mu3 / canon.gamma).epsilon(1e-14));

    InitOptions lag;
    lag.v_lag_widths = 8;
    auto fl = init_state(SimKind::front, canon, g, lag);
    CHECK(fl.u.front() == Approx(mu3).epsilon(1e-14));
    CHECK(fl.v.front() == Approx(mu3 / canon.gamma).epsilon(1e-14));
    // behind the u step, ahead of the v step
    int i = g.n / 2 - static_cast<int>(4 * transition_width() / g.h());
    CHECK(fl.u[i] == Approx(mu3).epsilon(1e-12));
    CHECK(fl.v[i] < 1e-12);

    auto p = init_state(SimKind::pulse, canon, g);
    CHECK(*std::max_element(p.u.begin(), p.u.end()) == Approx(1).epsilon(1e-12));
    CHECK(std::abs(p.u.front()) < 1e-14);
    CHECK(std::abs(p.u.back()) < 1e-14);
    for (double x : p.v) CHECK(x == 0);
}

TEST_CASE("constant equilibria are preserved")
{
    const auto [mu2, mu3] = equilibria(canon);
    const auto g = SimGrid::centered(50, 256);

    auto z = uniform(g, 0, 0);
    Stepper st(g, 0.1);
    for (int k = 0; k < 10000; ++k) st.step(z);
    CHECK(drift(z, 0, 0) <= 1e-14);

    auto e3 = uniform(g, mu3, mu3 / canon.gamma);
    for (int k = 0; k < 10000; ++k) st.step(e3);
    CHECK(drift(e3, mu3, mu3 / canon.gamma) <= 1e-12);

    // mu2 is unstable (growth rate ~0.25); keep tau short so round-off stays below the bound
    auto e2 = uniform(g, mu2, mu2 / canon.gamma);
    Stepper fine(g, 1e-3);
    for (int k = 0; k < 10000; ++k) fine.step(e2);
    CHECK(drift(e2, mu2, mu2 / canon.gamma) <= 1e-12);
}

TEST_CASE("diffusion alone conserves mass under zero flux")
{
    const auto g = SimGrid::centered(60, 1024);
    auto s = init_state(SimKind::pulse, canon, g);
    for (int i = 0; i < g.n; ++i) s.v[i] = std::exp(-std::pow(g.y(i) / 30, 2));
    const double mu0 = total_mass(s.u, g), mv0 = total_mass(s.v, g);
    Stepper st(g, 0.5);
    st.reaction = false;
    double worst = 0;
    for (int k = 0; k < 2000; ++k) {
        double before = total_mass(s.u, g);
        st.step(s);
        worst = std::max(worst, std::abs(total_mass(s.u, g) - before) / mu0);
        if (k == 199) {
            CHECK(std::abs(total_mass(s.u, g) - mu0) <= 1e-12 * mu0);
            CHECK(std::abs(total_mass(s.v, g) - mv0) <= 1e-12 * mv0);
        }
    }
    CHECK(worst <= 1e-12);
    // and it actually diffused
    CHECK(*std::max_element(s.u.begin(), s.u.end()) < 0.9);
}

TEST_CASE("blow-up guard")
{
    const auto g = SimGrid::centered(20, 64);
    auto s = uniform(g, 0, 0);
    s.u[10] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(step(s, 0.1), SimError);
    CHECK_THROWS_AS(Stepper(g, 0.0), SimError);
}

TEST_CASE("speed fit on synthetic tracks")
{
    std::vector<TrackPoint> t;
    for (int k = 0; k < 40; ++k) t.push_back({10.0 * k, 3 + 0.07 * 10.0 * k});
    auto f = measure_speed(t);
    CHECK(f.sigma == Approx(0.07).epsilon(1e-13));
    CHECK(f.residual < 1e-12);

    std::vector<TrackPoint> still;
    for (int k = 0; k < 25; ++k) still.push_back({1.0 * k, -4.0});
    CHECK(measure_speed(still).sigma == 0);

    // only the final half enters the fit
    std::vector<TrackPoint> bent;
    for (int k = 0; k < 40; ++k) bent.push_back({1.0 * k, k < 20 ? 5.0 * k : 100 + 0.5 * (k - 20)});
    CHECK(measure_speed(bent).sigma == Approx(0.5).epsilon(1e-12));

    t.resize(19);
    CHECK_THROWS_AS(measure_speed(t), SimError);
}

TEST_CASE("level tracking")
{
    const double mu3 = equilibria(canon)[1];
    const auto g = SimGrid::centered(100, 4096);
    auto f = init_state(SimKind::front, canon, g);
    auto y = level_position(f, SimKind::front, mu3 / 2);
    REQUIRE(y);
    CHECK(std::abs(*y) < g.h());

    auto r = init_state(SimKind::reversed_front, canon, g);
    auto yr = level_position(r, SimKind::reversed_front, mu3 / 2);
    REQUIRE(yr);
    CHECK(std::abs(*yr) < g.h());

    auto z = uniform(g, 0, 0);
    CHECK_FALSE(level_position(z, SimKind::front, mu3 / 2));
}

TEST_CASE("supercritical front advances from mu3")
{
    SimConfig c;
    c.params = {0.45, 70, 1e-5};
    c.widths = 160;
    c.n = 4096;
    c.dtau = 0.2;
    c.v_lag_widths = 0;
    auto rep = run_experiment(c);
    CHECK(rep.outcome == Outcome::front_right);
    CHECK(rep.sigma_measured > 0);
    CHECK(rep.level_track.size() >= 20);
    CHECK(rep.level == Approx(equilibria(c.params)[1] / 2));
}

TEST_CASE("invalid configurations")
{
    SimConfig c;
    c.kind = SimKind::custom;
    CHECK_THROWS_AS(run_experiment(c), SimError);
    c.kind = SimKind::front;
    c.n = 4;
    CHECK_THROWS_AS(run_experiment(c), SimError);
    CHECK_THROWS_AS(run_experiment(SimConfig{.params = {0.6, 50, 1e-5}}), ModelError);
}
