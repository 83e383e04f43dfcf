#include "fhn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/Polynomials>

#include "roots.hpp"

namespace fhn {

namespace {

void require(bool ok, ModelError::Kind kind, const std::string& msg)
{
    if (!ok) throw ModelError(kind, msg);
}

// larger root of a x^2 + b x + c = 0 and its partner, without cancellation
std::array<double, 2> quadratic_roots(double a, double b, double c)
{
    const double disc = b * b - 4 * a * c;
    const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
    double x1 = q / a, x2 = c / q;
    if (x1 > x2) std::swap(x1, x2);
    return {x1, x2};
}

// roots of s^2 + s - lam/c^2 = 0
std::array<double, 2> decay_pair(double lam, double c)
{
    const double t = 4 * lam / (c * c);
    const double root = std::sqrt(1 + t);
    const double plus = t / (2 * (1 + root));
    return {-1 - plus, plus};
}

}  // namespace

void ModelParams::validate() const
{
    auto fail = [](const std::string& m) { throw ModelError(ModelError::Kind::invalid_params, m); };
    if (!std::isfinite(beta) || !std::isfinite(gamma) || !std::isfinite(d))
        fail("parameters must be finite");
    if (!(beta > 0 && beta < 0.5)) {
        std::ostringstream os;
        os << "beta=" << beta << " violates 0<beta<1/2";
        fail(os.str());
    }
    if (!(gamma > 0)) fail("gamma must be positive");
    if (!(d > 0)) fail("d must be positive");
}

Cubic Cubic::fhn(double beta)
{
    return Cubic{-1.0, 1.0 + beta, -beta, 0.0};
}

std::vector<double> Cubic::solve(double level) const
{
    Eigen::Vector4d coeff(a0 - level, a1, a2, a3);
    Eigen::PolynomialSolver<double, 3> solver(coeff);
    std::vector<double> out;
    bool real = false;
    const double thresh = 1e-7 * (1 + std::abs(a2 / a3));
    for (int i = 0; i < 3; ++i) {
        const auto z = solver.roots()[i];
        if (std::abs(z.imag()) > thresh) continue;
        double x = z.real();
        for (int k = 0; k < 8; ++k) {
            const double dp = deriv(x);
            if (dp == 0) break;
            const double dx = ((*this)(x) - level) / dp;
            x -= dx;
            if (std::abs(dx) < 1e-17 * (1 + std::abs(x))) break;
        }
        out.push_back(x);
        real = true;
    }
    (void)real;
    std::sort(out.begin(), out.end());
    return out;
}

Cubic Cubic::reflected(double s) const
{
    // p(s - U) = a3 (s-U)^3 + a2 (s-U)^2 + a1 (s-U) + a0
    Cubic q;
    q.a3 = -a3;
    q.a2 = 3 * a3 * s + a2;
    q.a1 = -(3 * a3 * s * s + 2 * a2 * s + a1);
    q.a0 = (*this)(s);
    return q;
}

Cubic Cubic::reversed(double s) const
{
    const Cubic r = reflected(s);
    return Cubic{-r.a3, -r.a2, -r.a1, (*this)(s) - r.a0};
}

const char* to_string(Regime r)
{
    switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
    case Regime::outside: return "outside";
    }
    return "outside";
}

const char* to_string(EnergyOrder o)
{
    switch (o) {
    case EnergyOrder::mu2_mu3_zero: return "L(mu2)>L(mu3)>L(0)";
    case EnergyOrder::mu2_zero_mu3: return "L(mu2)>L(0)>L(mu3)";
    case EnergyOrder::other: return "other";
    }
    return "other";
}

const char* to_string(Equilibrium e)
{
    return e == Equilibrium::origin ? "origin" : "mu3";
}

std::array<double, 2> equilibria(const ModelParams& p)
{
    p.validate();
    const double b = p.beta;
    require(p.gamma > 4 / ((1 - b) * (1 - b)), ModelError::Kind::regime,
            "gamma <= 4/(1-beta)^2: nullclines do not meet three times");
    // f(mu) = mu/gamma on mu != 0: mu^2 - (1+b) mu + b + 1/gamma = 0
    auto r = quadratic_roots(1.0, -(1 + b), b + 1 / p.gamma);
    // bisection polish on the cubic residual keeps f(mu)=mu/gamma at round-off
    const Cubic f = Cubic::fhn(b);
    auto g = [&](double u) { return f(u) - u / p.gamma; };
    const double mid = 0.5 * (1 + b);
    r[0] = detail::bisect(g, b, mid, 1e-15);
    r[1] = detail::bisect(g, mid, 1.0, 1e-15);
    return r;
}

double zero_speed_level(double beta)
{
    const double m = (1 + beta) / 3;
    return Cubic::fhn(beta)(m);
}

double truncation_lhs(double beta, double gamma)
{
    ModelParams p{beta, gamma, 1.0};
    const auto mu = equilibria(p);
    const Cubic f = Cubic::fhn(beta);
    const double mg = detail::bisect_expand([&](double m) { return f(-m) - 1 / gamma; }, 0.0, 1.0, 1e-15);
    return f(mu[1]) - f.deriv(mu[1]) * (mg + mu[1]);
}

DerivedConstants derive_constants(const ModelParams& p)
{
    p.validate();
    const double b = p.beta, g = p.gamma;
    const Cubic f = Cubic::fhn(b);
    DerivedConstants k;

    const auto mu = equilibria(p);
    k.mu2 = mu[0];
    k.mu3 = mu[1];
    k.rho_hat = (1 + b + std::sqrt(b * b - b + 1)) / 3;
    k.gamma_tilde1 = k.rho_hat / f(k.rho_hat);
    k.gamma_star = 9 / ((1 - 2 * b) * (2 - b));
    k.mu3_star = 2 * (1 + b) / 3;
    k.mu2_star = k.mu3_star / 2;
    k.delta0 = (1 - 2 * b) * (1 - 2 * b) / 2;
    k.c_lower = std::sqrt(24 / (1 - 2 * b));
    k.b0 = -2 * std::log(b / std::sqrt(2.0));

    auto F = [&](double x) { return f.potential(x); };
    k.beta1 = detail::bisect(F, b, 1.0, 1e-13);
    k.beta_tilde2 = detail::bisect_expand(F, 1.0, 2.0, 1e-13);

    k.beta0 = detail::bisect(
        [](double x) { return 2 * x * (1 + x) / 3 - (1 - 2 * x) * (1 - 2 * x) * (2 - x) / 27; }, 0.0, 0.5, 1e-13);

    // the truncation condition as a predicate in gamma; smallest passing gamma in (gamma_tilde1, gamma_star)
    auto passes = [&](double gg) { return truncation_lhs(b, gg) - 1 / gg > 0; };
    const double lo = k.gamma_tilde1, hi = k.gamma_star;
    if (b > k.beta0 && passes(hi * (1 - 1e-12))) {
        const int samples = 1000;
        double first_pass = hi;
        bool monotone = true, seen = false;
        for (int i = 1; i < samples; ++i) {
            const double gg = lo + (hi - lo) * i / samples;
            const bool ok = passes(gg);
            if (ok && !seen) { first_pass = gg; seen = true; }
            if (!ok && seen) monotone = false;
        }
        if (monotone) {
            double a = lo * (1 + 1e-12), c = first_pass;
            if (passes(a)) {
                k.gamma_tilde2 = a;
            } else {
                while (c - a > 1e-8) {
                    const double m = 0.5 * (a + c);
                    (passes(m) ? c : a) = m;
                }
                k.gamma_tilde2 = c;
            }
        } else {
            k.gamma_tilde2 = first_pass;
        }
    }

    k.M_gamma = detail::bisect_expand([&](double m) { return f(-m) - 1 / g; }, 0.0, 1.0, 1e-13);
    const double cap = std::min(k.beta_tilde2, 1 + b / 2);
    double th = std::min(0.01, (cap - 1) / 2);
    const double fm = f(k.mu3), dfm = f.deriv(k.mu3);
    for (int halving = 0; halving < 30; ++halving) {
        const double th2 = detail::bisect_expand(
            [&](double t) { return f(-k.M_gamma - t) - (1 + th) / g; }, 0.0, 1.0, 1e-13);
        const double M1 = k.M_gamma + th2, b2 = 1 + th;
        bool ok = true;
        const int n = 10000;
        for (int i = 0; i <= n && ok; ++i) {
            const double xi = -M1 + (b2 + M1) * i / n;
            ok = fm + dfm * (xi - k.mu3) >= f(xi);
        }
        k.theta1 = th;
        k.theta2 = th2;
        k.M1 = M1;
        k.beta2 = b2;
        k.theta1_halvings = halving;
        if (ok) {
            k.t2a_holds = true;
            break;
        }
        th /= 2;
    }
    return k;
}

double energy_level(double mu, const ModelParams& p)
{
    return mu * mu / (2 * p.gamma) + Cubic::fhn(p.beta).potential(mu);
}

RegimeReport classify_regime(const ModelParams& p)
{
    p.validate();
    RegimeReport r;
    const double b = p.beta, g = p.gamma, d = p.d;
    r.h2_holds = (b - d * g) * (b - d * g) - 4 * d > 0 && b > d * g;
    r.n1_holds = g > 4 / ((1 - b) * (1 - b));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (!r.n1_holds) {
        r.energy_levels = {nan, 0.0, nan};
        r.truncation_lhs = nan;
        return r;
    }
    const DerivedConstants k = derive_constants(p);
    const Cubic f = Cubic::fhn(b);
    r.n2_holds = g > k.gamma_tilde1;
    const double s = -f.deriv(k.mu3);
    r.h1_holds = (s - d * g) * (s - d * g) - 4 * d > 0 && s > d * g;
    r.truncation_lhs = truncation_lhs(b, g);
    r.truncation_holds = r.truncation_lhs > 1 / g;

    const double tol = 1e-12 * k.gamma_star;
    if (std::abs(g - k.gamma_star) <= tol)
        r.regime = Regime::critical;
    else if (g > k.gamma_star)
        r.regime = r.n2_holds ? Regime::supercritical : Regime::outside;
    else if (k.gamma_tilde2 && g > *k.gamma_tilde2 && r.n2_holds)
        r.regime = Regime::subcritical;
    else
        r.regime = Regime::outside;

    const double L2 = energy_level(k.mu2, p), L0 = 0.0, L3 = energy_level(k.mu3, p);
    r.energy_levels = {L2, L0, L3};
    if (L2 > L3 && L3 > L0)
        r.energy_order = EnergyOrder::mu2_mu3_zero;
    else if (L2 > L0 && L0 > L3)
        r.energy_order = EnergyOrder::mu2_zero_mu3;
    else
        r.energy_order = EnergyOrder::other;

    if (g > k.gamma_tilde1 && g <= k.gamma_star + tol && r.h1_holds && !r.h2_holds)
        r.implications_consistent = false;
    if (g >= k.gamma_star - tol && r.h2_holds && !r.h1_holds) r.implications_consistent = false;
    return r;
}

std::array<double, 2> kernel_exponents(double c, double gamma)
{
    const auto r = decay_pair(gamma, c);
    return {r[0], r[1]};
}

SpectralData spectral_data(const ModelParams& p, double c, Equilibrium eq)
{
    p.validate();
    SpectralData s;
    s.equilibrium = eq;
    s.c = c;
    const double d = p.d, g = p.gamma;
    if (eq == Equilibrium::origin) {
        s.slope = p.beta;
        require((s.slope - d * g) * (s.slope - d * g) - 4 * d > 0, ModelError::Kind::hypothesis,
                "(beta - d*gamma)^2 - 4d > 0 fails");
        require(s.slope > d * g, ModelError::Kind::hypothesis, "beta > d*gamma fails");
    } else {
        const auto mu = equilibria(p);
        s.slope = -Cubic::fhn(p.beta).deriv(mu[1]);
        require((s.slope - d * g) * (s.slope - d * g) - 4 * d > 0, ModelError::Kind::hypothesis,
                "(-f'(mu3) - d*gamma)^2 - 4d > 0 fails");
        require(s.slope > d * g, ModelError::Kind::hypothesis, "-f'(mu3) > d*gamma fails");
    }
    auto out = spectral_from_slope(s.slope, d, g, c);
    out.equilibrium = eq;
    return out;
}

SpectralData spectral_from_slope(double slope, double d, double gamma, double c)
{
    SpectralData s;
    s.slope = slope;
    s.c = c;
    const auto lam = quadratic_roots(d, -(slope + d * gamma), 1 + gamma * slope);
    s.lambda1 = lam[0];
    s.lambda2 = lam[1];
    // slope/d - lambda_i via the root sum, free of cancellation
    s.eta2 = s.lambda1 - gamma;
    s.eta1 = s.lambda2 - gamma;
    if (c > 0) {
        const auto a = decay_pair(s.lambda1, c);
        const auto b = decay_pair(s.lambda2, c);
        s.s1 = b[0];
        s.s2 = a[0];
        s.s3 = a[1];
        s.s4 = b[1];
        const auto r = kernel_exponents(c, gamma);
        s.r1 = r[0];
        s.r2 = r[1];
    }
    return s;
}

Cubic reversed_transform(const ModelParams& p)
{
    return Cubic::fhn(p.beta).reversed(equilibria(p)[1]);
}

}  // namespace fhn
