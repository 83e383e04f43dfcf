#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <random>

#include "fhn/scalar_waves.hpp"

using namespace fhn;
using doctest::Approx;

namespace {

const ModelParams canon{0.45, 50.0, 1e-5};
const DerivedConstants K = derive_constants(canon);
const Cubic f = Cubic::fhn(0.45);

// logistic connection a -> c of delta w'' + delta w' + f(w) - f(c) = 0 (exists when b - (a+c)/2 = sqrt(delta/2))
double logistic(double x, double a, double c, double delta, double x0)
{
    const double k = (c - a) / std::sqrt(2 * delta);
    return a + (c - a) / (1 + std::exp(-k * (x - x0)));
}

bool strictly_monotone(const std::vector<double>& v, int sign, size_t from = 0, size_t to = 0)
{
    if (to == 0) to = v.size();
    for (size_t i = from + 1; i < to; ++i)
        if (!(sign * (v[i] - v[i - 1]) > 0)) return false;
    return true;
}

}  // namespace

TEST_CASE("analytic front")
{
    const auto H = analytic_front(0.45);
    CHECK(H(0) == Approx(K.beta1).epsilon(1e-13));
    CHECK(H(0) == Approx(0.781074521238999269).epsilon(1e-13));
    CHECK(H(-200) == Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(H(200)) < 1e-15);
    const auto g = WeightedGrid::uniform(-30, 30, 6001);
    const auto p = Profile::sample(g, H);
    CHECK(strictly_monotone(p.values, -1, 2700, 3300));
    CHECK(std::is_sorted(p.values.rbegin(), p.values.rend()));
    double r = 0;
    for (double z : g.nodes()) r = std::max(r, std::abs(K.delta0 * (H.second(z) + H.deriv(z)) + f(H(z))));
    CHECK(r <= 1e-12);
    CHECK(el_residual(p, K.delta0, f, 0.0) <= 1e-8);
    for (double beta : {0.1, 0.25, 0.4, 0.49}) {
        const auto Hb = analytic_front(beta);
        const auto Kb = derive_constants({beta, 50, 1e-5});
        CHECK(Hb(0) == Approx(Kb.beta1).epsilon(1e-12));
    }
    CHECK_THROWS_AS(analytic_front(0.5), ModelError);
}

TEST_CASE("shooting reproduces the analytic front")
{
    const ScalarWaveProblem pb{K.delta0, 0.0, f, 1.0, K.beta1, std::nullopt};
    const auto w = shoot_heteroclinic(pb);
    const auto H = analytic_front(0.45);
    double diff = 0;
    for (int i = 0; i < w.profile.size(); ++i) diff = std::max(diff, std::abs(w.profile[i] - H(w.profile.grid.z(i))));
    CHECK(diff <= 1e-6);
    CHECK(w.residual <= 1e-8);
    CHECK(w.profile[w.profile.grid.index_of(0.0)] == Approx(K.beta1).epsilon(1e-9));
    CHECK(w.profile.grid.z_right == 0.0);
    CHECK(std::abs(w.profile.values.front() - 1) <= 1e-8);
    CHECK(strictly_monotone(w.profile.values, -1));
    bool mono = false;
    CHECK(dissipation_defect(w, pb, &mono) <= 1e-6);
    CHECK(mono);
    // the endpoint 1 is the only one below F(beta1) = 0
    CHECK(f.potential(1.0) < 0);
    CHECK(f.potential(0.0) == 0);
    CHECK(f.potential(0.45) > 0);
}

TEST_CASE("W0 on the effective-diffusion range")
{
    for (double delta : {0.0024, 0.0035, K.delta0}) {
        const ScalarWaveProblem pb{delta, 0.0, f, 1.0, K.mu3, std::nullopt};
        const auto W = shoot_heteroclinic(pb);
        CHECK(W.residual <= 1e-8);
        CHECK(strictly_monotone(W.profile.values, -1));
        CHECK(std::abs(W.profile.values.front() - 1) <= 1e-8);
        CHECK(std::abs(W.profile.values.back() - K.mu3) <= 1e-9);
        bool mono = false;
        CHECK(dissipation_defect(W, pb, &mono) <= 1e-6);
        CHECK(mono);
        const auto c = Profile::sample(W.profile.grid, [&](double) { return K.mu3; });
        CHECK(half_line_functional(W.profile, HalfLineKind::I_delta, delta, f) <
              half_line_functional(c, HalfLineKind::I_delta, delta, f));
    }
}

TEST_CASE("reflection competitor beats trials that tend to zero")
{
    const auto g = WeightedGrid::lattice(-40, 0, 0.01);
    for (double delta : {0.0024, K.delta0})
        for (double k : {0.2, 1.0, 5.0, 20.0}) {
            const auto trial = Profile::sample(g, [&](double z) { return K.mu3 * std::exp(k * z); });
            const auto Wn = reflection_competitor(trial, K.mu3);
            CHECK(Wn[g.n - 1] == K.mu3);
            CHECK(half_line_functional(Wn, HalfLineKind::I_delta, delta, f) <
                  half_line_functional(trial, HalfLineKind::I_delta, delta, f));
        }
    for (int i = 1; i < 1000; ++i) {
        const double a = (1 - K.mu3) * i / 1000.0;
        CHECK(f.potential(K.mu3 + a) < f.potential(K.mu3 - a));
    }
    // no trajectory leaves 0 and reaches mu3
    const ScalarWaveProblem bad{K.delta0, 0.0, f, 0.0, K.mu3, std::nullopt};
    try {
        shoot_heteroclinic(bad);
        FAIL("expected no connection");
    } catch (const NoConnection& e) {
        CHECK(e.mode == NoConnection::Mode::undershoot);
    }
    const ScalarWaveProblem mid{K.delta0, 0.0, f, 0.45, K.mu3, std::nullopt};
    CHECK_THROWS_AS(shoot_heteroclinic(mid), NoConnection);
}

TEST_CASE("intersections")
{
    const auto r = intersections(29.0 / 30, f);
    CHECK(r.rho1 == Approx(-1.0 / 30).epsilon(1e-9));
    CHECK(r.rho2 == Approx(0.516666666666666667).epsilon(1e-9));
    CHECK(r.rho3 == Approx(29.0 / 30).epsilon(1e-12));
    CHECK(r.rho1 + r.rho2 == Approx(1.45 - 29.0 / 30).epsilon(1e-12));
    CHECK_FALSE(r.tangent);
    CHECK(K.mu3_star == Approx(29.0 / 30).epsilon(1e-14));

    const auto t = intersections(K.rho_hat, f);
    CHECK(t.tangent);
    CHECK(t.rho2 == Approx(K.rho_hat).epsilon(1e-7));

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(K.rho_hat, K.mu3_star);
    for (int k = 0; k < 100; ++k) {
        const double nu = u(rng);
        const auto s = intersections(nu, f);
        CHECK(s.rho1 < 0);
        CHECK(0 < K.mu2_star);
        CHECK(K.mu2_star < s.rho2);
        CHECK(s.rho2 < K.rho_hat);
        CHECK(K.rho_hat < s.rho3);
        CHECK(s.rho3 == nu);
        CHECK(nu <= K.mu3_star);
    }
    CHECK_THROWS_AS(intersections(1.5, f), ModelError);
}

TEST_CASE("half-line functionals")
{
    const auto g = WeightedGrid::lattice(-40, 0, 0.01);
    CHECK(half_line_functional(Profile::zeros(g), HalfLineKind::I_star, K.delta0, f) == 0);
    for (double nu : {0.9, 0.962, K.mu3_star}) {
        const auto c = Profile::sample(g, [&](double) { return nu; });
        CHECK(half_line_functional(c, HalfLineKind::K_nu, K.delta0, f, nu) ==
              Approx(f.potential(nu) + nu * f(nu)).epsilon(1e-13));
    }
    // a profile extending past 0: only z <= 0 counts for the half-line kinds
    const auto g2 = WeightedGrid::lattice(-40, 5, 0.01);
    const auto e = Profile::sample(g2, [](double z) { return z <= 0 ? 0.5 : 0.5 + z; });
    const auto e0 = Profile::sample(g, [](double) { return 0.5; });
    CHECK(half_line_functional(e, HalfLineKind::I_delta, K.delta0, f) ==
          Approx(half_line_functional(e0, HalfLineKind::I_delta, K.delta0, f)).epsilon(1e-13));
}

TEST_CASE("w_nu and the energy chain")
{
    const auto star = intersections(K.mu3_star, f);
    const ScalarWaveProblem full{K.delta0, f(K.mu3_star), f, star.rho1, std::nullopt, K.mu3_star};
    const auto Hf = shoot_heteroclinic(full);
    CHECK(Hf.residual <= 1e-8);
    CHECK(std::abs(Hf.profile.values.front() - star.rho1) <= 1e-8);
    CHECK(std::abs(Hf.profile.values.back() - K.mu3_star) <= 1e-8);
    CHECK(strictly_monotone(Hf.profile.values, 1));
    // the connection is a logistic with its midpoint at 0
    double diff = 0;
    for (int i = 0; i < Hf.profile.size(); ++i)
        diff = std::max(diff, std::abs(Hf.profile[i] - logistic(Hf.profile.grid.z(i), star.rho1, K.mu3_star, K.delta0, 0)));
    CHECK(diff <= 1e-6);
    bool mono = false;
    CHECK(dissipation_defect(Hf, full, &mono) <= 1e-6);
    CHECK(mono);

    for (double nu : {0.9615, 0.963, 0.965, 0.9665}) {
        const auto r = intersections(nu, f);
        const ScalarWaveProblem pb{K.delta0, f(nu), f, r.rho1, nu, std::nullopt};
        const auto w = shoot_heteroclinic(pb);
        CHECK(w.residual <= 1e-8);
        CHECK(strictly_monotone(w.profile.values, 1));
        CHECK(std::abs(w.profile.values.front() - r.rho1) <= 1e-8);
        CHECK(dissipation_defect(w, pb, &mono) <= 1e-6);
        CHECK(mono);

        // the mu3* connection translated so that it passes nu at 0
        const ScalarWaveProblem tr{K.delta0, f(K.mu3_star), f, star.rho1, nu, K.mu3_star};
        auto opt = ShootOptions{};
        opt.window_left = w.profile.grid.z_left;
        opt.window_right = 0;
        const auto H = shoot_heteroclinic(tr, opt);
        CHECK(H.profile[H.profile.grid.index_of(0.0)] == Approx(nu).epsilon(1e-9));
        const auto cst = Profile::sample(w.profile.grid, [&](double) { return nu; });
        const double kw = half_line_functional(w.profile, HalfLineKind::K_nu, K.delta0, f, nu);
        const double kh = half_line_functional(H.profile, HalfLineKind::K_nu, K.delta0, f, nu);
        const double kc = half_line_functional(cst, HalfLineKind::K_nu, K.delta0, f, nu);
        CHECK(kw < kh);
        CHECK(kh < kc);
    }
}
