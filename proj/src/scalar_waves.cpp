#include "fhn/scalar_waves.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/numeric/odeint.hpp>

#include "series.hpp"

namespace fhn {

namespace odeint = boost::numeric::odeint;

AnalyticFront analytic_front(double beta)
{
    if (!(beta > 0 && beta < 0.5)) throw ModelError(ModelError::Kind::invalid_params, "analytic front needs 0 < beta < 1/2");
    // nontrivial zero of F below 1
    const double b1 = 2 * (1 + beta) / 3 - 2 * std::sqrt((1 + beta) * (1 + beta) / 9 - beta / 2);
    AnalyticFront a;
    a.beta = beta;
    a.width = 2 * (1 - 2 * beta);
    a.a_star = -a.width * std::atanh(1 - 2 * b1);
    return a;
}

double AnalyticFront::operator()(double x) const { return 0.5 - 0.5 * std::tanh((x - a_star) / width); }

double AnalyticFront::deriv(double x) const
{
    const double s = 1 / std::cosh((x - a_star) / width);
    return -0.5 * s * s / width;
}

double AnalyticFront::second(double x) const
{
    const double t = std::tanh((x - a_star) / width);
    const double s = 1 / std::cosh((x - a_star) / width);
    return s * s * t / (width * width);
}

namespace {

using State = std::array<double, 2>;

struct Rhs {
    double delta, level;
    Cubic f;
    void operator()(const State& y, State& dy, double) const
    {
        dy[0] = y[1];
        dy[1] = -y[1] - (f(y[0]) - level) / delta;
    }
};

// roots of delta l^2 + delta l + f'(s) = 0, (stable, unstable)
std::array<double, 2> saddle_exponents(double delta, double fp)
{
    const double disc = std::sqrt(1 - 4 * fp / delta);
    return {-0.5 * (1 + disc), 0.5 * (disc - 1)};
}

using Dense = odeint::dense_output_runge_kutta<odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<State>>>;

// last time in [a, b] (either order) where g changes sign, g(b) >= 0 assumed
template <class G>
double locate(Dense& st, double a, double b, G&& g)
{
    State s;
    for (int k = 0; k < 80 && std::abs(b - a) > 1e-15 * (1 + std::abs(b)); ++k) {
        const double m = 0.5 * (a + b);
        st.calc_state(m, s);
        (g(s) >= 0 ? b : a) = m;
    }
    return b;
}

enum class Fate { reached, turned, too_long };

// one branch of the connection: a trajectory started next to a saddle and run
// (forward or backward in x) until w reaches `stop`
struct Branch {
    State y0{};
    double sign = 1;  // direction of integration
    Fate fate = Fate::too_long;
    double x_stop = 0;
    State y_stop{};
};

class Integrator {
public:
    Integrator(const ScalarWaveProblem& p, const ShootOptions& o) : rhs_{p.delta, p.level, p.f}, o_(o) {}

    Dense start(const Branch& b, double scale) const
    {
        auto st = odeint::make_dense_output(o_.tol, o_.tol, odeint::runge_kutta_dopri5<State>());
        st.initialize(b.y0, 0.0, b.sign * 1e-3 * scale);
        return st;
    }

    std::pair<double, double> step(Dense& st) const { return st.do_step(std::cref(rhs_)); }

    // mono: +1 when w should increase along the integration direction
    void run(Branch& b, double stop, int mono, double scale) const
    {
        auto st = start(b, scale);
        while (std::abs(st.current_time()) < o_.max_length) {
            const auto [t0, t1] = step(st);
            const State& y = st.current_state();
            if (mono * (y[0] - stop) >= 0) {
                b.x_stop = locate(st, t0, t1, [&](const State& s) { return mono * (s[0] - stop); });
                st.calc_state(b.x_stop, b.y_stop);
                b.fate = Fate::reached;
                return;
            }
            // w' * sign is the rate along the integration direction
            if (mono * b.sign * y[1] < 0) {
                b.fate = Fate::turned;
                return;
            }
        }
    }

    // fills nodes x (absolute, in integration time) between the start and x_stop
    template <class Out>
    void sample(const Branch& b, const std::vector<double>& xs, double scale, Out&& out) const
    {
        auto st = start(b, scale);
        State s;
        size_t k = 0;
        while (k < xs.size()) {
            const auto [t0, t1] = step(st);
            const double lo = std::min(t0, t1), hi = std::max(t0, t1);
            while (k < xs.size() && xs[k] >= lo && xs[k] <= hi) {
                st.calc_state(xs[k], s);
                out(k, s);
                ++k;
            }
            if (std::abs(t1) > o_.max_length) break;
        }
    }

private:
    Rhs rhs_;
    const ShootOptions& o_;
};

const char* fate_name(Fate f) { return f == Fate::turned ? "turns back" : "does not arrive within the integration window"; }

// sixth-order central differences at node i
double d1_6(const std::vector<double>& w, size_t i, double h)
{
    return (45 * (w[i + 1] - w[i - 1]) - 9 * (w[i + 2] - w[i - 2]) + (w[i + 3] - w[i - 3])) / (60 * h);
}

// eighth order
double d1_8(const std::vector<double>& w, size_t i, double h)
{
    return (672 * (w[i + 1] - w[i - 1]) - 168 * (w[i + 2] - w[i - 2]) + 32 * (w[i + 3] - w[i - 3]) -
            3 * (w[i + 4] - w[i - 4])) /
           (840 * h);
}

double d2_6(const std::vector<double>& w, size_t i, double h)
{
    return (270 * (w[i + 1] + w[i - 1]) - 27 * (w[i + 2] + w[i - 2]) + 2 * (w[i + 3] + w[i - 3]) - 490 * w[i]) /
           (180 * h * h);
}

}  // namespace

Heteroclinic shoot_heteroclinic(const ScalarWaveProblem& p, const ShootOptions& o)
{
    if (!(p.delta > 0)) throw std::invalid_argument("shooting needs delta > 0");
    if (!p.boundary_value && !p.target) throw std::invalid_argument("shooting needs a boundary value or a target");
    const double fps = p.f.deriv(p.source);
    if (!(fps < 0)) throw NoConnection(NoConnection::Mode::not_saddle, "source is not a saddle of the shifted equation");
    const auto lam = saddle_exponents(p.delta, fps);
    std::array<double, 2> lam_t{};
    if (p.target) {
        const double fpt = p.f.deriv(*p.target);
        if (!(fpt < 0)) throw NoConnection(NoConnection::Mode::not_saddle, "target is not a saddle of the shifted equation");
        lam_t = saddle_exponents(p.delta, fpt);
    }
    const int dir = (p.target ? *p.target : *p.boundary_value) > p.source ? 1 : -1;
    const double tgt = p.target ? *p.target : 0;
    const double mid = p.target ? 0.5 * (p.source + tgt) : *p.boundary_value;
    const double scale = std::min(1.0, 1 / lam[1]);
    const Integrator integ(p, o);

    Branch fw, bw;
    double eps = 0, jump = 0;
    std::string failure = "integration window exhausted";
    NoConnection::Mode fail_mode = NoConnection::Mode::undershoot;
    for (double e : o.offsets) {
        fw = Branch{{p.source + dir * e, dir * e * lam[1]}, 1.0};
        integ.run(fw, mid, dir, scale);
        if (fw.fate != Fate::reached) {
            failure = std::string("the unstable manifold of the source ") + fate_name(fw.fate);
            continue;
        }
        if (p.target) {
            // stable manifold of the target, integrated backwards
            bw = Branch{{tgt - dir * e, -dir * e * lam_t[0]}, -1.0};
            integ.run(bw, mid, -dir, scale);
            if (bw.fate != Fate::reached) {
                failure = std::string("the stable manifold of the target ") + fate_name(bw.fate);
                continue;
            }
            jump = fw.y_stop[1] - bw.y_stop[1];
            if (std::abs(jump) > 1e-6 * std::max(1.0, std::abs(fw.y_stop[1]))) {
                failure = "the manifolds miss each other at the matching level";
                fail_mode = dir * jump > 0 ? NoConnection::Mode::overshoot : NoConnection::Mode::undershoot;
                continue;
            }
        }
        eps = e;
        break;
    }
    if (eps == 0) throw NoConnection(fail_mode, "no connection: " + failure);

    // absolute coordinate: x = 0 at the forward start; the backward branch is shifted by x_shift
    const double x_shift = p.target ? fw.x_stop - bw.x_stop : 0;
    double x0 = fw.x_stop;
    if (p.target && p.boundary_value) {
        const double b = *p.boundary_value;
        Branch probe = dir * (b - mid) <= 0 ? fw : bw;
        const bool forward = dir * (b - mid) <= 0;
        probe.fate = Fate::too_long;
        integ.run(probe, b, forward ? dir : -dir, scale);
        if (probe.fate != Fate::reached) throw NoConnection(NoConnection::Mode::undershoot, "boundary value not on the connection");
        x0 = forward ? probe.x_stop : probe.x_stop + x_shift;
    }

    const double zl = o.window_left ? *o.window_left : -x0 + std::log(std::min(1.0, o.tail_tol / eps)) / lam[1];
    double zr = 0;
    if (p.target)
        zr = o.window_right ? *o.window_right : (x_shift - x0) + std::log(std::min(1.0, o.tail_tol / eps)) / lam_t[0];
    else if (o.window_right)
        zr = std::min(*o.window_right, 0.0);
    const WeightedGrid g = WeightedGrid::lattice(zl, zr, o.h);
    std::vector<double> w(g.n), dw(g.n);

    std::vector<double> xf, xb;
    std::vector<int> idf, idb;
    for (int i = 0; i < g.n; ++i) {
        const double x = g.z(i) + x0;
        if (x <= 0) {
            const double e = std::exp(lam[1] * x);
            w[i] = p.source + dir * eps * e;
            dw[i] = dir * eps * lam[1] * e;
        } else if (!p.target || x <= fw.x_stop) {
            xf.push_back(x);
            idf.push_back(i);
        } else if (x < x_shift) {
            xb.push_back(x - x_shift);
            idb.push_back(i);
        } else {
            const double e = std::exp(lam_t[0] * (x - x_shift));
            w[i] = tgt - dir * eps * e;
            dw[i] = -dir * eps * lam_t[0] * e;
        }
    }
    integ.sample(fw, xf, scale, [&](size_t k, const State& s) {
        w[idf[k]] = s[0];
        dw[idf[k]] = s[1];
    });
    std::reverse(xb.begin(), xb.end());
    std::reverse(idb.begin(), idb.end());
    integ.sample(bw, xb, scale, [&](size_t k, const State& s) {
        w[idb[k]] = s[0];
        dw[idb[k]] = s[1];
    });

    Heteroclinic out;
    out.profile = Profile(g, std::move(w));
    out.derivative = Profile(g, std::move(dw));
    out.source = p.source;
    out.target = p.target ? tgt : *p.boundary_value;
    out.offset = eps;
    out.shoot_parameter = jump;
    out.residual = el_residual(out, p);
    return out;
}

double el_residual(const Heteroclinic& het, const ScalarWaveProblem& p)
{
    const auto& w = het.profile.values;
    const auto& dw = het.derivative.values;
    const double h = het.profile.grid.h;
    double r = 0;
    for (size_t i = 4; i + 4 < w.size(); ++i)
        r = std::max(r, std::abs(p.delta * d1_8(dw, i, h) + p.delta * dw[i] + p.f(w[i]) - p.level));
    return r;
}

double el_residual(const Profile& w, double delta, const Cubic& f, double level)
{
    const double h = w.grid.h;
    double r = 0;
    for (size_t i = 3; i + 3 < w.values.size(); ++i)
        r = std::max(r, std::abs(delta * d2_6(w.values, i, h) + delta * d1_6(w.values, i, h) + f(w[i]) - level));
    return r;
}

double dissipation_defect(const Heteroclinic& het, const ScalarWaveProblem& p, bool* monotone)
{
    const auto& w = het.profile.values;
    const auto& dw = het.derivative.values;
    const double h = het.profile.grid.h;
    auto Q = [&](size_t i) { return 0.5 * p.delta * dw[i] * dw[i] - p.f.potential(w[i]) - p.level * w[i]; };
    // (w'^2)' = 2 w' w'' with w'' from the equation
    auto dg = [&](size_t i) { return 2 * dw[i] * (-dw[i] - (p.f(w[i]) - p.level) / p.delta); };
    const double q0 = Q(0);
    long double integral = 0;
    double defect = 0, prev = q0;
    bool mono = true;
    for (size_t i = 1; i < w.size(); ++i) {
        // trapezoid with the Hermite end correction
        integral += h / 2 * (dw[i - 1] * dw[i - 1] + dw[i] * dw[i]) + h * h / 12 * (dg(i - 1) - dg(i));
        const double q = Q(i);
        defect = std::max(defect, std::abs((q - q0) + p.delta * static_cast<double>(integral)));
        if (q > prev + 1e-13) mono = false;
        prev = q;
    }
    if (monotone) *monotone = mono;
    return defect;
}

Intersections intersections(double nu, const Cubic& f)
{
    // deflate f(xi) - f(nu) by (xi - nu)
    const double a = f.a3, b = f.a2 + f.a3 * nu, c = f.a1 + f.a2 * nu + f.a3 * nu * nu;
    const double disc = b * b - 4 * a * c;
    if (disc < -1e-14 * (b * b + std::abs(4 * a * c)))
        throw ModelError(ModelError::Kind::hypothesis, "the level f(nu) meets the cubic only once");
    const double sq = std::sqrt(std::max(0.0, disc));
    const double q = -0.5 * (b + std::copysign(sq, b));
    const double x1 = q / a, x2 = q != 0 ? c / q : x1;
    std::array<double, 3> roots{x1, x2, nu};
    std::sort(roots.begin(), roots.end());
    Intersections r;
    r.rho1 = roots[0];
    r.rho2 = roots[1];
    r.rho3 = roots[2];
    const double tol = 1e-7;
    r.tangent = (r.rho2 - r.rho1 < tol) || (r.rho3 - r.rho2 < tol);
    return r;
}

double half_line_functional(const Profile& w, HalfLineKind kind, double delta, const Cubic& f, double nu)
{
    const auto& g = w.grid;
    const double fnu = kind == HalfLineKind::K_nu ? f(nu) : 0.0;
    auto G = [&](double x) { return f.potential(x) + fnu * x; };
    int last = g.n - 1;
    if (kind != HalfLineKind::I_star) {
        last = -1;
        for (int i = 0; i < g.n && g.z(i) <= 1e-9 * g.h; ++i) last = i;
        if (last < 1) throw std::invalid_argument("half-line functional needs nodes on z <= 0");
    }
    // exact e^x weights for piecewise-linear integrands
    const double h = g.h;
    const double p1 = detail::phi1(h), p2 = detail::phi2(h);
    long double s = std::exp(g.log_weight(0)) * G(w[0]);
    for (int i = 0; i < last; ++i) {
        const double e = std::exp(g.log_weight(i)) * h;
        const double d = (w[i + 1] - w[i]) / h;
        s += e * (0.5 * delta * d * d * p1 + G(w[i]) * (p1 - p2) + G(w[i + 1]) * p2);
    }
    return static_cast<double>(s);
}

Profile reflection_competitor(const Profile& W, double mu3)
{
    Profile out = W;
    for (auto& x : out.values) {
        if (x > mu3) continue;
        x = (x >= 2 * mu3 - 1) ? 2 * mu3 - x : 1.0;
    }
    return out;
}

}  // namespace fhn
