#include "fhn/pde_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fhn {

double transition_width() { return 2 * std::sqrt(2.0) * std::log(9.0); }

SimGrid SimGrid::centered(double widths, int n)
{
    double half = 0.5 * widths * transition_width();
    return {-half, half, n};
}

const char* to_string(SimKind k)
{
    switch (k) {
    case SimKind::front: return "front";
    case SimKind::reversed_front: return "reversed_front";
    case SimKind::pulse: return "pulse";
    case SimKind::custom: return "custom";
    }
    return "?";
}

const char* to_string(Outcome o)
{
    switch (o) {
    case Outcome::front_right: return "front_right";
    case Outcome::front_left: return "front_left";
    case Outcome::pulse: return "pulse";
    case Outcome::collapsed: return "collapsed";
    case Outcome::undetermined: return "undetermined";
    }
    return "?";
}

SimState init_state(SimKind kind, const ModelParams& p, const SimGrid& g, const InitOptions& o)
{
    p.validate();
    SimState s;
    s.grid = g;
    s.params = p;
    s.u.assign(g.n, 0.0);
    s.v.assign(g.n, 0.0);
    if (kind == SimKind::custom) return s;

    const double mu3 = equilibria(p)[1];
    const double w = 5 * g.h();
    const double y0 = g.y_left + o.at * (g.y_right - g.y_left);
    const double lag = o.v_lag_widths * transition_width();
    auto H = [&](double y) { return 0.5 * (1 - std::tanh(y / w)); };  // 1 on the left
    for (int i = 0; i < g.n; ++i) {
        double y = g.y(i);
        double e = 0, ev = 0;
        switch (kind) {
        case SimKind::front:
            e = H(y - y0);
            ev = H(y - y0 + lag);
            break;
        case SimKind::reversed_front:
            e = 1 - H(y - y0);
            ev = 1 - H(y - y0 + lag);
            break;
        case SimKind::pulse: {
            double half = 0.5 * o.bump_widths * transition_width();
            s.u[i] = H(y - y0 - half) - H(y - y0 + half);
            continue;
        }
        case SimKind::custom: break;
        }
        s.u[i] = mu3 * e;
        s.v[i] = mu3 / p.gamma * ev;
    }
    return s;
}

Stepper::Stepper(const SimGrid& g, double dtau) : g_(g), dt_(dtau)
{
    if (!(dtau > 0)) throw SimError("step size must be positive");
    const int n = g.n;
    r_ = dtau / (g.h() * g.h());
    // I - (dt/2) Lap with mirrored ghosts: off-diagonals -r/2, doubled at the ends
    cp_.assign(n, 0.0);
    inv_.assign(n, 0.0);
    const double a = -0.5 * r_, b = 1 + r_;
    double denom = b;
    double up = 2 * a;
    inv_[0] = 1 / denom;
    cp_[0] = up / denom;
    for (int i = 1; i < n; ++i) {
        double lo = (i == n - 1) ? 2 * a : a;
        denom = b - lo * cp_[i - 1];
        inv_[i] = 1 / denom;
        cp_[i] = (i < n - 1) ? a / denom : 0.0;
    }
}

void Stepper::step(SimState& s) const
{
    const int n = g_.n;
    const double a = -0.5 * r_;
    const ModelParams& p = s.params;
    const Cubic f = Cubic::fhn(p.beta);
    std::vector<double> ru(n), rv(n);
    for (int i = 0; i < n; ++i) {
        int l = i == 0 ? 1 : i - 1, r = i == n - 1 ? n - 2 : i + 1;
        double lu = s.u[l] - 2 * s.u[i] + s.u[r];
        double lv = s.v[l] - 2 * s.v[i] + s.v[r];
        ru[i] = s.u[i] + 0.5 * r_ * lu;
        rv[i] = s.v[i] + 0.5 * r_ * lv;
        if (reaction) {
            ru[i] += dt_ * (f(s.u[i]) - s.v[i]);
            rv[i] += dt_ * p.d * (s.u[i] - p.gamma * s.v[i]);
        }
    }
    auto solve = [&](std::vector<double>& x) {
        x[0] *= inv_[0];
        for (int i = 1; i < n; ++i) {
            double lo = (i == n - 1) ? 2 * a : a;
            x[i] = (x[i] - lo * x[i - 1]) * inv_[i];
        }
        for (int i = n - 2; i >= 0; --i) x[i] -= cp_[i] * x[i + 1];
    };
    solve(ru);
    solve(rv);
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(ru[i]) || !std::isfinite(rv[i]))
            throw SimError("non-finite field at y = " + std::to_string(g_.y(i)) +
                           ", tau = " + std::to_string(s.tau + dt_));
    }
    s.u.swap(ru);
    s.v.swap(rv);
    s.tau += dt_;
    s.dtau_max = std::max(s.dtau_max, dt_);
}

void step(SimState& s, double dtau) { Stepper(s.grid, dtau).step(s); }

double total_mass(const std::vector<double>& w, const SimGrid& g)
{
    double m = 0;
    for (int i = 0; i < g.n; ++i) m += (i == 0 || i == g.n - 1 ? 0.5 : 1.0) * w[i];
    return m * g.h();
}

SpeedFit measure_speed(const std::vector<TrackPoint>& track)
{
    if (track.size() < 20) throw SimError("speed fit needs at least 20 track points");
    const size_t k0 = track.size() / 2;
    const size_t m = track.size() - k0;
    double st = 0, sy = 0;
    for (size_t k = k0; k < track.size(); ++k) {
        st += track[k].tau;
        sy += track[k].y;
    }
    st /= m;
    sy /= m;
    double stt = 0, sty = 0;
    for (size_t k = k0; k < track.size(); ++k) {
        double dt = track[k].tau - st;
        stt += dt * dt;
        sty += dt * (track[k].y - sy);
    }
    SpeedFit fit;
    fit.sigma = stt > 0 ? sty / stt : 0.0;
    double ss = 0;
    for (size_t k = k0; k < track.size(); ++k) {
        double e = track[k].y - (sy + fit.sigma * (track[k].tau - st));
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / m);
    fit.displacement = std::abs(track.back().y - track[k0].y);
    return fit;
}

std::optional<double> level_position(const SimState& s, SimKind kind, double level)
{
    const auto& u = s.u;
    const int n = s.grid.n;
    auto at = [&](int i) {
        double t = (level - u[i]) / (u[i + 1] - u[i]);
        return s.grid.y(i) + t * s.grid.h();
    };
    if (kind == SimKind::reversed_front) {
        for (int i = n - 2; i >= 0; --i)
            if (u[i] < level && u[i + 1] >= level) return at(i);
        return std::nullopt;
    }
    // rightmost downward crossing
    for (int i = n - 2; i >= 0; --i)
        if (u[i] >= level && u[i + 1] < level) return at(i);
    return std::nullopt;
}

namespace {

int crossings(const std::vector<double>& u, double level, size_t from)
{
    int k = 0;
    for (size_t i = std::max<size_t>(from, 1); i < u.size(); ++i)
        if ((u[i - 1] - level) * (u[i] - level) < 0) ++k;
    return k;
}

Snapshot snapshot(const SimState& s, int stride)
{
    Snapshot sn;
    sn.tau = s.tau;
    for (int i = 0; i < s.grid.n; i += stride) {
        sn.y.push_back(s.grid.y(i));
        sn.u.push_back(s.u[i]);
        sn.v.push_back(s.v[i]);
    }
    return sn;
}

}  // namespace

SimReport run_experiment(const SimConfig& cfg)
{
    if (cfg.kind == SimKind::custom) throw SimError("custom initial data needs a caller-built state");
    if (cfg.n < 16 || !(cfg.widths > 0) || !(cfg.tau_max > 0) || cfg.track_every < 1)
        throw SimError("invalid simulation configuration");
    const double mu3 = equilibria(cfg.params)[1];
    const double W = transition_width();
    SimGrid g = SimGrid::centered(cfg.widths, cfg.n);

    InitOptions io;
    io.v_lag_widths = cfg.v_lag_widths;
    // leave room ahead of the interface in the direction of travel
    if (cfg.kind != SimKind::pulse) io.at = 0.35;
    SimState s = init_state(cfg.kind, cfg.params, g, io);
    Stepper stepper(g, cfg.dtau);

    SimReport rep;
    rep.kind = cfg.kind;
    rep.params = cfg.params;
    rep.dtau = cfg.dtau;
    rep.h = g.h();
    const bool pulse = cfg.kind == SimKind::pulse;
    auto level_now = [&] {
        return pulse ? 0.5 * *std::max_element(s.u.begin(), s.u.end()) : 0.5 * mu3;
    };

    const double margin = 2 * W;
    std::optional<double> y_start;
    bool left_grid = false;
    long it = 0;
    const long max_steps = static_cast<long>(std::ceil(cfg.tau_max / cfg.dtau));
    for (; it <= max_steps; ++it) {
        if (it % cfg.track_every == 0) {
            double lev = level_now();
            auto y = level_position(s, cfg.kind, lev);
            if (!y || *y < g.y_left + margin || *y > g.y_right - margin) {
                left_grid = true;
                break;
            }
            rep.level_track.push_back({s.tau, *y});
            rep.level = lev;
            if (!y_start) y_start = *y;
            if (std::abs(*y - *y_start) >= cfg.min_displacement_widths * W && rep.level_track.size() >= 20) break;
        }
        if (cfg.snapshot_every > 0 && it % cfg.snapshot_every == 0)
            rep.snapshots.push_back(snapshot(s, cfg.snapshot_stride));
        stepper.step(s);
    }
    rep.tau_end = s.tau;
    if (cfg.snapshot_every > 0) rep.snapshots.push_back(snapshot(s, cfg.snapshot_stride));

    const double sup = *std::max_element(s.u.begin(), s.u.end());
    const double inf = *std::min_element(s.u.begin(), s.u.end());
    if (pulse && sup < cfg.params.beta) {
        rep.outcome = Outcome::collapsed;
        rep.note = "excitation decayed below beta";
    } else if (cfg.kind != SimKind::pulse && (sup - inf) < 0.25 * mu3) {
        rep.outcome = Outcome::collapsed;
        rep.note = "interface dissolved";
    } else if (rep.level_track.size() < 20) {
        rep.outcome = Outcome::undetermined;
        rep.note = left_grid ? "level set left the grid before 20 track points" : "too few track points";
    } else {
        SpeedFit fit = measure_speed(rep.level_track);
        rep.sigma_measured = fit.sigma;
        rep.fit_residual = fit.residual;
        if (fit.residual > 0.1 * fit.displacement || fit.displacement == 0) {
            rep.outcome = Outcome::undetermined;
            rep.note = "fit residual exceeds 10% of the displacement";
        } else if (pulse && crossings(s.u, rep.level, g.n / 2) >= 2) {
            // the right-moving excitation has grown a back
            rep.outcome = Outcome::pulse;
        } else {
            rep.outcome = fit.sigma > 0 ? Outcome::front_right : Outcome::front_left;
        }
        if (left_grid) rep.note = "level set reached the grid margin; fit uses the track up to there";
    }
    if (cfg.sigma_predicted) {
        rep.sigma_predicted = *cfg.sigma_predicted;
        rep.relative_error = std::abs(rep.sigma_measured - rep.sigma_predicted) / std::abs(rep.sigma_predicted);
    }
    return rep;
}

Bidirectional run_bidirectional(SimConfig cfg, std::optional<double> sigma_reversed)
{
    Bidirectional b;
    cfg.kind = SimKind::front;
    b.forward = run_experiment(cfg);
    cfg.kind = SimKind::reversed_front;
    cfg.sigma_predicted = sigma_reversed;
    b.reversed = run_experiment(cfg);
    // forward: mu3 on the left invades 0; reversed: 0 on the left invades mu3; both move right
    b.both_invade = b.forward.outcome == Outcome::front_right && b.forward.sigma_measured > 0 &&
                    b.reversed.outcome == Outcome::front_right && b.reversed.sigma_measured > 0;
    return b;
}

}  // namespace fhn
