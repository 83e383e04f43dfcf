// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "fhn/pde_sim.hpp"
#include "fhn/scalar_waves.hpp"
#include "fhn/wave_solver.hpp"

using namespace fhn;

namespace {

const ModelParams canon{0.45, 50, 1e-5};

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void criterion(int id, const char* title, double limit_s, const std::function<void(Verdict&)>& body)
{
    Verdict o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (t >= limit_s) {
        o.pass = false;
        o.detail << " [runtime over " << limit_s << " s]";
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %s:%s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.str().c_str(), t);
    std::fflush(stdout);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Profile random_bumps(const WeightedGrid& g, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> amp(-1, 1), ctr(-12, 12), wid(0.3, 3);
    double A[4], C[4], W[4];
    for (int k = 0; k < 4; ++k) {
        A[k] = amp(rng);
        C[k] = ctr(rng);
        W[k] = wid(rng);
    }
    return Profile::sample(g, [&](double z) {
        double s = 0;
        for (int k = 0; k < 4; ++k) s += A[k] * std::exp(-(z - C[k]) * (z - C[k]) / (W[k] * W[k]));
        return s;
    });
}

bool h2(const ModelParams& p)
{
    const double b = p.beta - p.d * p.gamma;
    return b * b - 4 * p.d > 0 && b > 0;
}

int sign_changes(const Profile& u)
{
    int n = 0, last = 0;
    for (double x : u.values) {
        const int s = (x > 0) - (x < 0);
        if (s != 0 && last != 0 && s != last) ++n;
        if (s != 0) last = s;
    }
    return n;
}

}  // namespace

int main()
{
    criterion(1, "closed-form constants", 1, [](Verdict& o) {
        const auto k = derive_constants(canon);
        const double gs = 9 / (0.1 * 1.55);
        o.detail << " delta0=" << k.delta0 << " gamma*=" << k.gamma_star << " mu3*=" << k.mu3_star
                 << " beta1=" << k.beta1;
        o.require(std::abs(k.delta0 - 0.005) <= 1e-15, "delta0");
        o.require(std::abs(k.gamma_star - gs) <= 1e-12, "gamma*");
        o.require(std::abs(k.mu3_star - 29.0 / 30) <= 1e-12, "mu3*");
        o.require(std::abs(k.beta1 - 0.781074) <= 1e-6, "beta1");
        const double L = energy_level(k.mu3_star, {0.45, gs, 1e-5});
        o.detail << " L(mu3*)=" << L;
        o.require(std::abs(L) <= 1e-10, "energy at gamma*");
    });

    criterion(2, "spectral orderings", 5, [](Verdict& o) {
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> ub(0.01, 0.49), ulg(std::log(0.5), std::log(500.0)),
            uld(std::log(1e-7), std::log(1e-1)), ulc(std::log(0.1), std::log(100.0));
        int checked = 0, violations = 0;
        while (checked < 1000) {
            ModelParams p{ub(rng), std::exp(ulg(rng)), std::exp(uld(rng))};
            if (!h2(p)) continue;
            const double c = std::exp(ulc(rng));
            const auto s = spectral_data(p, c, Equilibrium::origin);
            ++checked;
            const double mid = (p.gamma + s.slope / p.d) / 2;
            if (!(0 < p.gamma && p.gamma < s.lambda1 && s.lambda1 < mid && mid < s.lambda2 && s.lambda2 < s.slope / p.d))
                ++violations;
            if (!(s.s1 < s.s2 && s.s2 < -1 && 0 < s.s3 && s.s3 < s.s4)) ++violations;
            if (!(s.s1 < s.s2 && s.s2 < s.r1 && s.r1 < -1)) ++violations;
        }
        o.detail << " " << checked << " samples, " << violations << " violations";
        o.require(violations == 0, "orderings");
    });

    criterion(3, "nonlocal operator oracle", 30, [](Verdict& o) {
        const auto g = WeightedGrid::uniform(-30, 30, 6001);
        std::mt19937_64 rng(5);
        const double cs[] = {0.5, 2, 20}, gs[] = {1, 50};
        double agree = 0, adj = 0, cst = 0;
        bool positive = true, bounded = true;
        for (int t = 0; t < 50; ++t) {
            const double c = cs[t % 3], gam = gs[(t / 3) % 2];
            const auto u = random_bumps(g, rng), w = random_bumps(g, rng);
            const auto vt = apply_nonlocal(u, c, gam);
            agree = std::max(agree, sup_diff(vt.values, apply_nonlocal_green(u, c, gam).values));

            const NonlocalOperator op(g, c, gam);
            const double a = op.pairing(u.values, w.values), b = op.pairing(w.values, u.values);
            const double uu = op.pairing(u.values, u.values), ww = op.pairing(w.values, w.values);
            adj = std::max(adj, std::abs(a - b) / std::sqrt(uu * ww));
            positive = positive && uu >= 0 && ww >= 0;

            const auto gv = green_evaluate(u, c, gam, g.nodes());
            const double nu = weighted_norms(u).l2ex;
            bounded = bounded && weighted_norms(Profile(g, gv.v)).l2ex <= 4 / (c * c) * nu &&
                      weighted_norms(Profile(g, gv.dv)).l2ex <= 2 / (c * c) * nu;
            const auto [lo, hi] = std::minmax_element(u.values.begin(), u.values.end());
            for (double x : vt.values)
                bounded = bounded && x >= std::min(*lo, 0.0) / gam - 1e-8 && x <= std::max(*hi, 0.0) / gam + 1e-8;

            const auto one = Profile::sample(g, [](double) { return 1.0; });
            const auto v1 = apply_nonlocal(one, c, gam, {1, 1});
            for (double x : v1.values) cst = std::max(cst, std::abs(x - 1 / gam));
        }
        o.detail << " realizations " << agree << ", adjointness " << adj << ", constant rule " << cst;
        o.require(agree <= 1e-8, "realizations");
        o.require(adj <= 1e-10 && positive, "self-adjoint and positive");
        o.require(cst <= 1e-8, "constant rule");
        o.require(bounded, "operator bounds");
    });

    criterion(4, "scalar oracle", 60, [](Verdict& o) {
        const auto K = derive_constants(canon);
        const Cubic f = Cubic::fhn(0.45);
        const ScalarWaveProblem pb{K.delta0, 0.0, f, 1.0, K.beta1, std::nullopt};
        const auto w = shoot_heteroclinic(pb);
        const auto H = analytic_front(0.45);
        double diff = 0;
        for (int i = 0; i < w.profile.size(); ++i) diff = std::max(diff, std::abs(w.profile[i] - H(w.profile.grid.z(i))));
        const double diss = dissipation_defect(w, pb);
        o.detail << " shooting vs analytic " << diff << ", dissipation " << diss;
        o.require(diff <= 1e-6, "analytic front");
        o.require(diss <= 1e-6, "dissipation identity");

        const auto star = intersections(K.mu3_star, f);
        int strict = 0;
        for (int k = 1; k <= 10; ++k) {
            const double nu = K.mu3 + (K.mu3_star - K.mu3) * k / 11.0;
            const auto r = intersections(nu, f);
            const auto wn = shoot_heteroclinic({K.delta0, f(nu), f, r.rho1, nu, std::nullopt});
            ShootOptions opt;
            opt.window_left = wn.profile.grid.z_left;
            opt.window_right = 0;
            const auto Hn = shoot_heteroclinic({K.delta0, f(K.mu3_star), f, star.rho1, nu, K.mu3_star}, opt);
            const auto cst = Profile::sample(wn.profile.grid, [&](double) { return nu; });
            const double kw = half_line_functional(wn.profile, HalfLineKind::K_nu, K.delta0, f, nu);
            const double kh = half_line_functional(Hn.profile, HalfLineKind::K_nu, K.delta0, f, nu);
            const double kc = half_line_functional(cst, HalfLineKind::K_nu, K.delta0, f, nu);
            if (kw < kh && kh < kc) ++strict;
        }
        o.detail << ", K chain strict for " << strict << "/10";
        o.require(strict == 10, "K chain");
    });

    std::optional<SolveResult> front;
    criterion(5, "front at beta=0.45 gamma=50 d=1e-5", 120, [&](Verdict& o) {
        front = solve_front(canon);
        const auto& s = front->solution;
        const auto k = derive_constants(canon);
        o.detail << " c=" << s.c << " dc2=" << s.kappa << " EL residual " << s.el_residual << " decay errors "
                 << s.decay_fits.right_rel_error() << "/" << s.decay_fits.left_rel_error();
        o.require(s.el_residual <= 1e-10, "EL residual");
        o.require(s.kappa < k.delta0, "dc2 < delta0");
        o.require(s.c <= std::sqrt(k.delta0 / canon.d), "c bound");
        for (const auto& ch : front->report.checks) o.require(!ch.applicable || ch.pass, ch.name);
        for (const char* name : {"single_sign_change", "unique_max", "unique_min", "v_positive", "v_decreasing",
                                 "psi2_positive", "Psi2_negative", "measure_above_beta1", "zeta_beta_window",
                                 "decay_right", "decay_left"}) {
            const Check* ch = front->report.find(name);
            o.require(ch && ch->applicable && ch->pass, name);
        }
    });

    criterion(6, "d-sweep trend at beta=0.45 gamma=100", 600, [](Verdict& o) {
        const ModelParams base{0.45, 100, 1e-5};
        const auto rows = d_sweep(base, {1e-4, 3e-5, 1e-5});
        const double d0 = derive_constants(base).delta0;
        for (const auto& r : rows) {
            o.require(r.ok, "row d=" + std::to_string(r.d) + " " + r.error);
            o.detail << " d=" << r.d << ":dc2=" << r.dc2 << ",sup=" << r.sup_u << ",v(zM)=" << r.v_at_zetaM
                     << ",dist=" << r.dist_to_front;
        }
        if (!o.pass) return;
        for (size_t i = 0; i < rows.size(); ++i) {
            o.require(rows[i].dc2 < d0, "dc2 below delta0");
            o.require(rows[i].sup_u < 1, "sup u below 1");
            if (i == 0) continue;
            o.require(rows[i].dc2 > rows[i - 1].dc2, "dc2 increasing");
            o.require(rows[i].sup_u > rows[i - 1].sup_u, "sup u increasing");
            o.require(rows[i].v_at_zetaM < rows[i - 1].v_at_zetaM, "v(zeta_M) decreasing");
            o.require(rows[i].dist_to_front < rows[i - 1].dist_to_front, "distance to H decreasing");
        }
    });

    criterion(7, "pulse and front coexistence", 180, [&](Verdict& o) {
        const auto P = solve_pulse(canon);
        const double cf = front ? front->solution.c : solve_front(canon).solution.c;
        const int sc = sign_changes(P.solution.u);
        o.detail << " c_p=" << P.solution.c << " c_f=" << cf << " sign changes " << sc << " EL residual "
                 << P.solution.el_residual << " validation " << (P.report.all_pass() ? "pass" : "candidate");
        o.require(P.solution.el_residual <= 1e-10, "converged pulse");
        o.require(P.solution.c > cf, "c_p > c_f");
        o.require(sc == 2, "two sign changes");
    });

    criterion(8, "bidirectional propagation", 600, [&](Verdict& o) {
        const double cf = front ? front->solution.c : solve_front(canon).solution.c;
        const double cr = solve_reversed_front(canon).solution.c;
        SimConfig sc;
        sc.params = canon;
        sc.n = 1 << 14;
        sc.dtau = 0.1;
        sc.min_displacement_widths = 100;
        sc.sigma_predicted = std::sqrt(canon.d * cf * cf);
        const auto b = run_bidirectional(sc, cr * std::sqrt(canon.d));
        o.detail << " forward " << to_string(b.forward.outcome) << " sigma=" << b.forward.sigma_measured
                 << " (BVP " << b.forward.sigma_predicted << ", error " << b.forward.relative_error << "); reversed "
                 << to_string(b.reversed.outcome) << " sigma=" << b.reversed.sigma_measured << " (BVP "
                 << b.reversed.sigma_predicted << ")";
        o.require(b.both_invade, "both invasions advance");
        o.require(b.forward.relative_error <= 0.05, "forward speed within 5%");
    });

    criterion(9, "reversed front in the original system", 120, [](Verdict& o) {
        const auto R = solve_reversed_front(canon);
        const auto& s = R.solution;
        const auto res = bvp_residual(s.u, s.v, s.c, canon, Cubic::fhn(canon.beta), s.far);
        o.detail << " c=" << s.c << " residuals " << res.u_eq << "/" << res.v_eq;
        o.require(std::max(res.u_eq, res.v_eq) <= 1e-9, "original-system residual");
    });

    criterion(10, "projection vs enumeration", 5, [](Verdict& o) {
        const AdmissibleSpec specs[] = {{AdmissibleKind::front, -0.0397, 1.01, 0.96},
                                        {AdmissibleKind::pulse, -0.0397, 1.01, 0.96},
                                        {AdmissibleKind::single_sign_change, -0.0397, 1.01, 0.96}};
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> val(-0.3, 1.3);
        std::uniform_int_distribution<int> nn(3, 12);
        int mismatches = 0;
        for (int t = 0; t < 200; ++t) {
            const int n = nn(rng);
            std::vector<double> v(n);
            for (auto& x : v) x = val(rng);
            const Profile u(WeightedGrid::uniform(-3, 2, n), v);
            for (const auto& s : specs)
                if (project_admissible(u, s).values != project_admissible_bruteforce(u, s).u.values) ++mismatches;
        }
        o.detail << " 200 vectors x 3 classes, " << mismatches << " mismatches";
        o.require(mismatches == 0, "exact agreement");
    });

    return failures == 0 ? 0 : 1;
}
