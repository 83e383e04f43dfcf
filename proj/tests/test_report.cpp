#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fhn/report.hpp"

using namespace fhn;

namespace {

WaveSolution synthetic_wave(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(-1, 1);
    const auto g = WeightedGrid::lattice(-8, 3, 0.01);
    WaveSolution s;
    s.kind = WaveKind::front;
    s.c = 15.0 + U(rng);
    s.kappa = 1e-5 * s.c * s.c;
    s.J_value = 1e-13 * U(rng);
    s.el_residual = 3e-12;
    s.v_residual = 1e-15;
    s.newton_steps = 4;
    s.decay_fits = {-1.1 + 1e-3 * U(rng), 0.05 + 1e-4 * U(rng), -1.1, 0.05};
    s.far = {0.960849528, 0};
    s.u = Profile::sample(g, [&](double z) { return 0.96 / (1 + std::exp(z / 0.07)) + 1e-17 * U(rng); });
    s.v = Profile::sample(g, [&](double z) { return 0.0192 / (1 + std::exp(z)) * (1 + 0.3 * U(rng)); });
    return s;
}

}  // namespace

TEST_CASE("params reject invalid values on read")
{
    Json j = to_json(ModelParams{0.45, 50, 1e-5});
    CHECK(j.dump() == R"({"beta":0.45,"gamma":50.0,"d":1e-05})");
    j["beta"] = 0.7;
    CHECK_THROWS_AS(params_from_json(j), ModelError);
}

TEST_CASE("constants and regime keep a fixed key order")
{
    const ModelParams p{0.45, 50, 1e-5};
    const Json k = to_json(derive_constants(p));
    std::vector<std::string> keys;
    for (const auto& [key, val] : k.items()) keys.push_back(key);
    REQUIRE(keys.size() >= 3);
    CHECK(keys[0] == "mu2");
    CHECK(keys[1] == "mu3");
    const Json r = to_json(classify_regime(p));
    CHECK(r.begin().key() == "regime");
    CHECK(r["regime"] == "subcritical");
    CHECK(r["h1"] == true);
    CHECK(to_json(derive_constants(p)).dump() == k.dump());
}

TEST_CASE("wave report round trip")
{
    std::mt19937_64 rng(11);
    WaveReport w;
    w.params = {0.45, 50, 1e-5};
    w.solution = synthetic_wave(rng);
    w.validation.checks = {{"a", true, true, 0.5, 1.0}, {"b", false, false, 0, 0}, {"c", true, false, NAN, 2.0}};
    w.scan_grid = {26.8, 26.5, 26.1};
    w.curve.c_samples = {26.8, 26.5};
    w.curve.J_values = {0.1, -0.01};
    w.curve.converged = {false, true};
    w.curve.bracket = std::make_pair(26.5, 26.8);
    w.config = {{"beta", 0.45}, {"out", "run1"}};

    const Json j = to_json(w);
    std::ostringstream csv;
    write_pair_csv(csv, w.solution.u, w.solution.v);
    std::istringstream in(csv.str());
    auto [u, v] = read_pair_csv(in);
    const auto back = wave_report_from_json(Json::parse(j.dump()), u, v);

    CHECK(back.solution.u.values == w.solution.u.values);
    CHECK(back.solution.v.values == w.solution.v.values);
    CHECK(back.solution.u.grid == w.solution.u.grid);
    CHECK(to_json(back).dump() == j.dump());
    CHECK(std::isnan(back.validation.checks[2].measured));
    CHECK(j["candidate"] == true);
}

TEST_CASE("simulation report and snapshots round trip")
{
    SimReport r;
    r.kind = SimKind::reversed_front;
    r.params = {0.45, 50, 1e-5};
    r.outcome = Outcome::front_right;
    r.sigma_measured = 0.0816;
    r.sigma_predicted = 0.0828;
    r.relative_error = std::abs(r.sigma_measured - r.sigma_predicted) / r.sigma_predicted;
    r.level = 0.48;
    r.note = "ok, \"quoted\"";
    for (int k = 0; k < 30; ++k) r.level_track.push_back({5.0 * k, -100 + 0.0816 * 5 * k + 1e-3 / (k + 1)});
    const Json j = to_json(r);
    CHECK(to_json(sim_report_from_json(Json::parse(j.dump()))).dump() == j.dump());

    std::vector<Snapshot> snaps(3);
    for (int s = 0; s < 3; ++s) {
        snaps[s].tau = 0.1 * s + 1.0 / 3;
        for (int i = 0; i < 5; ++i) {
            snaps[s].y.push_back(-2 + i * 0.7);
            snaps[s].u.push_back(std::sin(i + s));
            snaps[s].v.push_back(1e-300 * i);
        }
    }
    std::ostringstream os;
    write_snapshots_csv(os, snaps);
    CHECK(os.str().rfind("tau,y,u,v\n", 0) == 0);
    std::istringstream is(os.str());
    const auto back = read_snapshots_csv(is);
    REQUIRE(back.size() == 3);
    for (int s = 0; s < 3; ++s) {
        CHECK(back[s].tau == snaps[s].tau);
        CHECK(back[s].y == snaps[s].y);
        CHECK(back[s].u == snaps[s].u);
        CHECK(back[s].v == snaps[s].v);
    }
}

TEST_CASE("sweep CSV")
{
    std::vector<SweepRow> rows(3);
    rows[0] = {1e-4, 3.68, 1e-4 * 3.68 * 3.68, 0.985, 0.0074, 0.27, true, ""};
    rows[1] = {3e-5, 0, 0, 0, 0, 0, false, "no negative bracket"};
    rows[2] = {1e-5, 17.97, 1e-5 * 17.97 * 17.97, 0.994, 0.0029, 0.096, true, ""};
    std::ostringstream os;
    write_sweep_csv(os, rows);
    CHECK(os.str().rfind("d,c,dc2,sup_u,v_at_zetaM\n", 0) == 0);
    std::istringstream is(os.str());
    const auto back = read_sweep_csv(is);
    REQUIRE(back.size() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(back[k].d == rows[k].d);
        CHECK(back[k].ok == rows[k].ok);
        CHECK(back[k].c == rows[k].c);
        CHECK(back[k].dc2 == rows[k].dc2);
        CHECK(back[k].sup_u == rows[k].sup_u);
        CHECK(back[k].v_at_zetaM == rows[k].v_at_zetaM);
    }
    std::istringstream bad("d,c\n1,2\n");
    CHECK_THROWS(read_sweep_csv(bad));
}
