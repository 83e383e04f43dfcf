#include "fhn/weighted_space.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "series.hpp"

namespace fhn {

WeightedGrid WeightedGrid::uniform(double z_left, double z_right, int n)
{
    if (n < 3) throw std::invalid_argument("grid needs at least 3 nodes");
    if (!(z_left < z_right)) throw std::invalid_argument("grid needs z_left < z_right");
    WeightedGrid g;
    g.z_left = z_left;
    g.z_right = z_right;
    g.n = n;
    g.h = (z_right - z_left) / (n - 1);
    return g;
}

WeightedGrid WeightedGrid::lattice(double z_left, double z_right, double h)
{
    if (!(h > 0) || !(z_left <= 0) || !(z_right >= 0) || !(z_left < z_right))
        throw std::invalid_argument("lattice needs z_left <= 0 <= z_right, z_left < z_right, h > 0");
    const long il = static_cast<long>(std::floor(z_left / h + 1e-9));
    const long ir = static_cast<long>(std::ceil(z_right / h - 1e-9));
    WeightedGrid g;
    g.h = h;
    g.z_left = il * h;
    g.n = static_cast<int>(ir - il + 1);
    g.z_right = g.z(g.n - 1);
    return g;
}

double WeightedGrid::weight(int i) const
{
    return std::exp(log_weight(i));
}

double WeightedGrid::quad_weight(int i) const
{
    const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
    return w * weight(i);
}

std::vector<double> WeightedGrid::nodes() const
{
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = this->z(i);
    return z;
}

int WeightedGrid::index_of(double zz) const
{
    const long i = std::lround((zz - z_left) / h);
    return static_cast<int>(std::clamp<long>(i, 0, n - 1));
}

Profile::Profile(const WeightedGrid& g, std::vector<double> v, Frame f) : grid(g), values(std::move(v)), frame(f)
{
    if (static_cast<int>(values.size()) != g.n) throw std::invalid_argument("profile length differs from grid size");
}

Norms weighted_norms(const Profile& w)
{
    const auto& g = w.grid;
    long double l2 = 0, nn = 0;
    for (int i = 0; i < g.n; ++i) l2 += static_cast<long double>(g.quad_weight(i)) * w[i] * w[i];
    for (int i = 0; i + 1 < g.n; ++i) {
        const double dw = w[i + 1] - w[i];
        nn += static_cast<long double>(std::exp(g.log_weight(i) + 0.5 * g.h)) * dw * dw / g.h;
    }
    Norms r;
    r.l2ex = std::sqrt(static_cast<double>(l2));
    r.seminorm_N = static_cast<double>(nn);
    r.h1ex = std::sqrt(static_cast<double>(l2 + nn));
    return r;
}

double inner_ex(const Profile& a, const Profile& b)
{
    long double s = 0;
    for (int i = 0; i < a.grid.n; ++i) s += static_cast<long double>(a.grid.quad_weight(i)) * a[i] * b[i];
    return static_cast<double>(s);
}

// ---------------------------------------------------------------------------
// nonlocal operator, tridiagonal realization

NonlocalOperator::NonlocalOperator(const WeightedGrid& g, double c, double gamma) : g_(g), c_(c), gamma_(gamma)
{
    if (!(c > 0) || !(gamma > 0)) throw std::invalid_argument("nonlocal operator needs c > 0 and gamma > 0");
    const auto r = kernel_exponents(c, gamma);
    r1_ = r[0];
    r2_ = r[1];
    const double h = g.h, c2 = c * c;
    const double e1 = std::exp(r1_ * h), e2 = std::exp(r2_ * h);
    const double delta = e1 * std::expm1((r2_ - r1_) * h);

    // cell solutions of (e^t psi')' = (gamma/c^2) e^t psi on [0, h]
    auto psiL = [&](double t) { return (std::exp(r2_ * h + r1_ * t) - std::exp(r1_ * h + r2_ * t)) / delta; };
    auto psiR = [&](double t) { return (std::exp(r2_ * t) - std::exp(r1_ * t)) / delta; };
    const double dL0 = (r1_ * e2 - r2_ * e1) / delta;
    const double dRh = (r2_ * e2 - r1_ * e1) / delta;

    su_ = c2 * (r1_ - r2_) / delta;
    sl_ = -c2 * std::exp(-h) * (r2_ - r1_) / delta;
    sd_ = c2 * (dRh - dL0);
    sd0_ = c2 * (r2_ - dL0);
    sdn_ = c2 * (dRh - r1_);

    using Gauss = boost::math::quadrature::gauss<double, 12>;
    aL0_ = Gauss::integrate([&](double t) { return std::exp(t) * psiL(t) * (1 - t / h); }, 0.0, h);
    aL1_ = Gauss::integrate([&](double t) { return std::exp(t) * psiL(t) * (t / h); }, 0.0, h);
    aR0_ = Gauss::integrate([&](double t) { return std::exp(t) * psiR(t) * (1 - t / h); }, 0.0, h);
    aR1_ = Gauss::integrate([&](double t) { return std::exp(t) * psiR(t) * (t / h); }, 0.0, h);
    eh_ = std::exp(-h);
    tl_ = 1 / (1 + r2_);
    tr_ = 1 / r2_;
}

std::array<double, 3> NonlocalOperator::mass_row(int i) const
{
    const int n = g_.n;
    if (i == 0) return {0.0, aL0_, aL1_};
    if (i == n - 1) return {eh_ * aR0_, eh_ * aR1_, 0.0};
    return {eh_ * aR0_, eh_ * aR1_ + aL0_, aL1_};
}

std::vector<double> NonlocalOperator::rhs(const std::vector<double>& u, FarField ff) const
{
    const int n = g_.n;
    std::vector<double> b(n);
    b[0] = aL0_ * u[0] + aL1_ * u[1] + tl_ * ff.left;
    for (int i = 1; i < n - 1; ++i) b[i] = eh_ * (aR0_ * u[i - 1] + aR1_ * u[i]) + aL0_ * u[i] + aL1_ * u[i + 1];
    b[n - 1] = eh_ * (aR0_ * u[n - 2] + aR1_ * u[n - 1]) + tr_ * ff.right;
    return b;
}

std::vector<double> NonlocalOperator::solve(const std::vector<double>& b) const
{
    const int n = g_.n;
    std::vector<double> cp(n), x(n);
    double den = sd0_;
    cp[0] = su_ / den;
    x[0] = b[0] / den;
    for (int i = 1; i < n; ++i) {
        const double di = (i == n - 1) ? sdn_ : sd_;
        den = di - sl_ * cp[i - 1];
        cp[i] = su_ / den;
        x[i] = (b[i] - sl_ * x[i - 1]) / den;
    }
    for (int i = n - 2; i >= 0; --i) x[i] -= cp[i] * x[i + 1];
    return x;
}

std::vector<double> NonlocalOperator::apply(const std::vector<double>& u, FarField ff) const
{
    return solve(rhs(u, ff));
}

std::vector<double> NonlocalOperator::adjoint(const std::vector<double>& v) const
{
    const int n = g_.n;
    const double h = g_.h;
    std::vector<double> out(n);
    for (int j = 0; j < n; ++j) {
        double s = 0;
        if (j > 0) s += eh_ * aL1_ * v[j - 1];
        s += mass_row(j)[1] * v[j];
        if (j < n - 1) s += aR0_ * v[j + 1];
        const double w = (j == 0 || j == n - 1) ? 0.5 * h : h;
        out[j] = s / w;
    }
    return out;
}

double NonlocalOperator::energy(const std::vector<double>& b, const std::vector<double>& v) const
{
    long double s = 0;
    for (int i = 0; i < g_.n; ++i) s += static_cast<long double>(g_.weight(i)) * b[i] * v[i];
    return static_cast<double>(0.5L * s);
}

double NonlocalOperator::pairing(const std::vector<double>& u, const std::vector<double>& w) const
{
    const auto bu = rhs(u), vw = apply(w);
    return 2 * energy(bu, vw);
}

Profile apply_nonlocal(const Profile& u, double c, double gamma, FarField ff)
{
    NonlocalOperator op(u.grid, c, gamma);
    return Profile(u.grid, op.apply(u.values, ff), u.frame);
}

// ---------------------------------------------------------------------------
// Green's kernel realization

namespace {

struct Sweeps {
    std::vector<double> P, Q;
    double r1, r2, K1;
};

Sweeps green_sweeps(const Profile& u, double c, double gamma, FarField ff)
{
    if (!(c > 0) || !(gamma > 0)) throw std::invalid_argument("Green's kernel needs c > 0 and gamma > 0");
    const auto& g = u.grid;
    const int n = g.n;
    const double h = g.h;
    Sweeps s;
    const auto r = kernel_exponents(c, gamma);
    s.r1 = r[0];
    s.r2 = r[1];
    s.K1 = 1 / (c * std::sqrt(c * c + 4 * gamma));
    s.P.assign(n, 0.0);
    s.Q.assign(n, 0.0);
    const double a1 = s.r1 * h, a2 = -s.r2 * h;
    const double p1 = detail::phi1(a1), p2 = detail::phi2(a1);
    const double q1 = detail::phi1(a2), q2 = detail::phi2(a2);
    const double E1 = std::exp(a1), E2 = std::exp(a2);
    s.P[0] = ff.left / (-s.r1);
    for (int i = 0; i + 1 < n; ++i) s.P[i + 1] = E1 * s.P[i] + h * (p2 * u[i] + (p1 - p2) * u[i + 1]);
    s.Q[n - 1] = ff.right / s.r2;
    for (int i = n - 2; i >= 0; --i) s.Q[i] = E2 * s.Q[i + 1] + h * ((q1 - q2) * u[i] + q2 * u[i + 1]);
    return s;
}

}  // namespace

Profile apply_nonlocal_green(const Profile& u, double c, double gamma, FarField ff)
{
    const auto s = green_sweeps(u, c, gamma, ff);
    std::vector<double> v(u.grid.n);
    for (int i = 0; i < u.grid.n; ++i) v[i] = s.K1 * (s.P[i] + s.Q[i]);
    return Profile(u.grid, std::move(v), u.frame);
}

GreenValues green_evaluate(const Profile& u, double c, double gamma, const std::vector<double>& z, FarField ff)
{
    const auto s = green_sweeps(u, c, gamma, ff);
    const auto& g = u.grid;
    GreenValues out;
    out.v.resize(z.size());
    out.dv.resize(z.size());
    for (size_t k = 0; k < z.size(); ++k) {
        int i = static_cast<int>(std::floor((z[k] - g.z_left) / g.h));
        i = std::clamp(i, 0, g.n - 2);
        const double t = z[k] - g.z(i), rest = g.h - t;
        const double slope = (u[i + 1] - u[i]) / g.h;
        const double uz = u[i] + slope * t;
        const double P = std::exp(s.r1 * t) * s.P[i] +
                         t * (uz * detail::phi1(s.r1 * t) - slope * t * detail::phi2(s.r1 * t));
        const double Q = std::exp(-s.r2 * rest) * s.Q[i + 1] +
                         rest * (uz * detail::phi1(-s.r2 * rest) + slope * rest * detail::phi2(-s.r2 * rest));
        out.v[k] = s.K1 * (P + Q);
        out.dv[k] = s.K1 * (s.r1 * P + s.r2 * Q);
    }
    return out;
}

// ---------------------------------------------------------------------------
// functional

Functional::Functional(const WeightedGrid& g, const FunctionalSetup& s) : s_(s), op_(g, s.c, s.gamma) {}

double Functional::seminorm(const std::vector<double>& u) const
{
    const auto& g = grid();
    long double nn = 0;
    for (int i = 0; i + 1 < g.n; ++i) {
        const double dw = u[i + 1] - u[i];
        nn += static_cast<long double>(std::exp(g.log_weight(i) + 0.5 * g.h)) * dw * dw / g.h;
    }
    return static_cast<double>(nn);
}

JParts Functional::parts(const std::vector<double>& u) const
{
    const auto& g = grid();
    JParts p;
    p.gradient = 0.5 * s_.kappa * seminorm(u);
    const auto b = op_.rhs(u, s_.far);
    const auto v = op_.solve(b);
    p.nonlocal = op_.energy(b, v);
    long double pot = 0;
    for (int i = 0; i < g.n; ++i) pot += static_cast<long double>(g.quad_weight(i)) * s_.f.potential(u[i]);
    if (s_.far.left != 0) pot += static_cast<long double>(g.weight(0)) * s_.f.potential(s_.far.left);
    p.potential = static_cast<double>(pot);
    return p;
}

std::vector<double> Functional::weighted_laplacian(const std::vector<double>& u) const
{
    const auto& g = grid();
    const int n = g.n;
    const double h = g.h, em = std::exp(-0.5 * h), ep = std::exp(0.5 * h);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        double s = 0;
        if (i > 0) s += em * (u[i] - u[i - 1]);
        if (i < n - 1) s -= ep * (u[i + 1] - u[i]);
        const double w = (i == 0 || i == n - 1) ? 0.5 * h : h;
        out[i] = s / (h * w);
    }
    return out;
}

std::vector<double> Functional::gradient(const std::vector<double>& u) const
{
    const auto v = op_.apply(u, s_.far);
    const auto adj = op_.adjoint(v);
    auto lap = weighted_laplacian(u);
    for (size_t i = 0; i < u.size(); ++i) lap[i] = s_.kappa * lap[i] + adj[i] - s_.f(u[i]);
    return lap;
}

double Functional::normalized(const std::vector<double>& u) const
{
    const double N = seminorm(u);
    if (!(N >= 1e-14)) throw std::domain_error("degenerate profile: N(u) < 1e-14");
    return 2 * parts(u).total() / N;
}

double Functional::normalized_with_gradient(const std::vector<double>& u, std::vector<double>& grad) const
{
    const auto& g = grid();
    const double N = seminorm(u);
    if (!(N >= 1e-14)) throw std::domain_error("degenerate profile: N(u) < 1e-14");
    const auto b = op_.rhs(u, s_.far);
    const auto v = op_.solve(b);
    long double pot = 0;
    for (int i = 0; i < g.n; ++i) pot += static_cast<long double>(g.quad_weight(i)) * s_.f.potential(u[i]);
    if (s_.far.left != 0) pot += static_cast<long double>(g.weight(0)) * s_.f.potential(s_.far.left);
    const double J = 0.5 * s_.kappa * N + op_.energy(b, v) + static_cast<double>(pot);
    const double Jh = 2 * J / N;
    const auto adj = op_.adjoint(v);
    grad = weighted_laplacian(u);
    const double scale = 2 / N;
    for (size_t i = 0; i < u.size(); ++i) grad[i] = scale * ((s_.kappa - Jh) * grad[i] + adj[i] - s_.f(u[i]));
    return Jh;
}

JParts evaluate_J(const Profile& u, double c, double kappa, const Cubic& f, double gamma, FarField ff)
{
    return Functional(u.grid, {c, kappa, gamma, f, ff}).parts(u.values);
}

Profile gradient_J(const Profile& u, double c, double kappa, const Cubic& f, double gamma, FarField ff)
{
    return Profile(u.grid, Functional(u.grid, {c, kappa, gamma, f, ff}).gradient(u.values), u.frame);
}

double normalized_J(const Profile& u, double c, double kappa, const Cubic& f, double gamma, FarField ff)
{
    return Functional(u.grid, {c, kappa, gamma, f, ff}).normalized(u.values);
}

// ---------------------------------------------------------------------------
// CSV

void write_profile_csv(std::ostream& os, const Profile& p)
{
    os << "z,value\n" << std::setprecision(17);
    for (int i = 0; i < p.grid.n; ++i) os << p.grid.z(i) << ',' << p[i] << '\n';
}

void write_pair_csv(std::ostream& os, const Profile& u, const Profile& v)
{
    if (!(u.grid == v.grid)) throw std::invalid_argument("pair CSV needs profiles on one grid");
    os << "z,u,v\n" << std::setprecision(17);
    for (int i = 0; i < u.grid.n; ++i) os << u.grid.z(i) << ',' << u[i] << ',' << v[i] << '\n';
}

namespace {

std::vector<std::vector<double>> read_columns(std::istream& is, const std::string& header, int ncol)
{
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty CSV input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw std::runtime_error("unexpected CSV header '" + line + "', expected '" + header + "'");
    std::vector<std::vector<double>> cols(ncol);
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        std::istringstream ls(line);
        std::string cell;
        for (int k = 0; k < ncol; ++k) {
            if (!std::getline(ls, cell, ',')) throw std::runtime_error("short CSV row: " + line);
            double x = 0;
            const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), x);
            if (ec != std::errc() || end != cell.data() + cell.size()) throw std::runtime_error("bad CSV number '" + cell + "'");
            cols[k].push_back(x);
        }
    }
    return cols;
}

// recovers the exact lattice spacing used when the file was written
WeightedGrid grid_from_nodes(const std::vector<double>& z)
{
    const int n = static_cast<int>(z.size());
    if (n < 3) throw std::runtime_error("CSV profile needs at least 3 rows");
    double h = (z.back() - z.front()) / (n - 1);
    for (int k = 0; k < 8; ++k) {
        bool ok = true;
        for (int i = 0; i < n && ok; ++i) ok = (z.front() + i * h) == z[i];
        if (ok) break;
        const double diff = z.back() - (z.front() + (n - 1) * h);
        h = std::nextafter(h, diff > 0 ? INFINITY : -INFINITY);
    }
    WeightedGrid g;
    g.z_left = z.front();
    g.n = n;
    g.h = h;
    g.z_right = g.z(n - 1);
    for (int i = 0; i < n; ++i)
        if (std::abs(g.z(i) - z[i]) > 1e-9 * (1 + std::abs(z[i]))) throw std::runtime_error("CSV nodes are not uniform");
    return g;
}

}  // namespace

Profile read_profile_csv(std::istream& is)
{
    auto cols = read_columns(is, "z,value", 2);
    return Profile(grid_from_nodes(cols[0]), std::move(cols[1]));
}

std::pair<Profile, Profile> read_pair_csv(std::istream& is)
{
    auto cols = read_columns(is, "z,u,v", 3);
    const auto g = grid_from_nodes(cols[0]);
    return {Profile(g, std::move(cols[1])), Profile(g, std::move(cols[2]))};
}

}  // namespace fhn
