#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fhn/model.hpp"

namespace fhn {

// Rescaled lab frame: y = x / sqrt(d), tau = t / d, so that
//   u_tau = u_yy + f(u) - v,   v_tau = v_yy + d (u - gamma v).
// A wave with moving-frame speed c travels at sigma = c sqrt(d) in y.

// 10%-90% width of the balanced Nagumo front, the length unit of the simulator
double transition_width();

struct SimGrid {
    double y_left = 0, y_right = 0;
    int n = 0;
    double h() const { return (y_right - y_left) / (n - 1); }
    double y(int i) const { return y_left + i * h(); }

    // centered window of `widths` transition widths
    static SimGrid centered(double widths, int n);
};

struct SimState {
    SimGrid grid;
    std::vector<double> u, v;
    double tau = 0;
    ModelParams params;
    double dtau_max = 0;  // largest step taken so far
};

class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SimKind { front, reversed_front, pulse, custom };
const char* to_string(SimKind k);

struct InitOptions {
    // interface location as a fraction of the window
    double at = 0.5;
    // pulse bump length in transition widths
    double bump_widths = 8;
    // the v step sits this many transition widths left of the u step (fronts only)
    double v_lag_widths = 0;
};

SimState init_state(SimKind kind, const ModelParams& p, const SimGrid& g, const InitOptions& o = {});

// Crank-Nicolson diffusion, explicit reaction, zero flux at both ends
class Stepper {
public:
    Stepper(const SimGrid& g, double dtau);
    void step(SimState& s) const;
    double dtau() const { return dt_; }
    // drop the reaction terms (diffusion-only check)
    bool reaction = true;

private:
    SimGrid g_;
    double dt_, r_;
    std::vector<double> cp_, inv_;  // Thomas factors of I - dt/2 Lap
};

void step(SimState& s, double dtau);

// trapezoid sum of a field, conserved by the zero-flux diffusion operator
double total_mass(const std::vector<double>& w, const SimGrid& g);

struct TrackPoint {
    double tau = 0, y = 0;
};

struct SpeedFit {
    double sigma = 0;
    double residual = 0;      // rms deviation from the fitted line
    double displacement = 0;  // |y_last - y_first| over the fitted half
};

// least-squares slope over the final half of the track; needs >= 20 points
SpeedFit measure_speed(const std::vector<TrackPoint>& track);

enum class Outcome { front_right, front_left, pulse, collapsed, undetermined };
const char* to_string(Outcome o);

struct SimConfig {
    ModelParams params;
    SimKind kind = SimKind::front;
    double widths = 400;
    int n = 1 << 14;
    double dtau = 0.1;
    double tau_max = 2e4;
    double min_displacement_widths = 20;
    double v_lag_widths = 8;
    int track_every = 50;
    // 0 disables snapshots
    int snapshot_every = 0;
    int snapshot_stride = 16;
    std::optional<double> sigma_predicted;
};

struct Snapshot {
    double tau = 0;
    std::vector<double> y, u, v;
};

struct SimReport {
    SimKind kind = SimKind::front;
    ModelParams params;
    double level = 0;
    std::vector<TrackPoint> level_track;
    double sigma_measured = 0;
    double fit_residual = 0;
    double sigma_predicted = 0;  // 0 when no prediction was supplied
    double relative_error = 0;
    Outcome outcome = Outcome::undetermined;
    double tau_end = 0;
    double dtau = 0, h = 0;
    std::string note;
    std::vector<Snapshot> snapshots;
};

// crossing of `level` by u: fronts track the single crossing, pulses the leading edge
std::optional<double> level_position(const SimState& s, SimKind kind, double level);

SimReport run_experiment(const SimConfig& cfg);

struct Bidirectional {
    SimReport forward, reversed;
    // each invader overtook the state it replaces
    bool both_invade = false;
};

Bidirectional run_bidirectional(SimConfig cfg, std::optional<double> sigma_reversed = std::nullopt);

}  // namespace fhn
