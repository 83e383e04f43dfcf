#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fhn/model.hpp"
#include "fhn/weighted_space.hpp"

namespace fhn {

enum class WaveKind { front, reversed_front, pulse };

const char* to_string(WaveKind k);

class SolverError : public std::runtime_error {
public:
    enum class Stage { setup, minimize, no_bracket, newton_diverged, singular_jacobian };
    SolverError(Stage s, const std::string& msg) : std::runtime_error(msg), stage_(s) {}
    Stage stage() const { return stage_; }

private:
    Stage stage_;
};

const char* to_string(SolverError::Stage s);

struct WindowOptions {
    // default left end depends on the kind: the reversed front leaves its left state slowly
    std::optional<double> z_left;
    double z_right = 20;
    double h = 0.01;
};

// Everything the solver sees. For the reversed front this is the transformed
// problem U = mu3 - u, V = mu3/gamma - v, itself a front from mu3 to 0.
struct WaveProblem {
    ModelParams params;
    WaveKind kind = WaveKind::front;
    DerivedConstants constants;
    Cubic f;
    double u_left = 0;  // state at -inf (0 at +inf always)
    AdmissibleSpec spec;
    FarField far;
    double phase_level = 0;
    WeightedGrid grid;
    // -f' at the left state and at 0
    double slope_left = 0, slope_right = 0;
};

WaveProblem make_problem(const ModelParams& p, WaveKind kind, const WindowOptions& w = {});
Profile initial_guess(const WaveProblem& pb);
Functional make_functional(const WaveProblem& pb, double c);

struct MinimizeOptions {
    double tol = 1e-9;
    int max_iter = 100000;
    // hand over to Newton on the Euler-Lagrange system once the gradient is this small
    double polish_below = 1e-5;
    int polish_every = 200;
    bool polish = true;
    bool record_history = false;
};

struct MinimizeResult {
    Profile u;
    double J_hat = 0;
    double grad_norm = 0;
    int iterations = 0;
    bool converged = false;
    bool polished = false;
    std::vector<double> history;
};

// projected-gradient norm at u, in the N(u) = 2 normalization
double projected_gradient_norm(const Functional& F, const AdmissibleSpec& spec, const Profile& u);

// throws SolverError(minimize) unless converged
MinimizeResult minimize_over_class(double c, const WaveProblem& pb, const Profile& init,
                                   const MinimizeOptions& opt = {});
// same, reporting non-convergence in the result instead of throwing
MinimizeResult descend(double c, const WaveProblem& pb, const Profile& init, const MinimizeOptions& opt = {});

struct SpeedCurve {
    std::vector<double> c_samples, J_values;
    // scan points may stop early; a negative value is conclusive either way
    std::vector<bool> converged;
    std::optional<std::pair<double, double>> bracket;
};

struct SpeedOptions {
    int samples = 60;
    double top_factor = 1.2;  // c_top = top_factor * sqrt(delta0 / d)
    // grid ends at min(c_lower, c_top / 2), then continues down to floor_factor times that
    double floor_factor = 0.5;
    double bracket_rel = 1e-3;
    // stop when |J| <= zero_rel * d c^2
    double zero_rel = 1e-8;
    MinimizeOptions minimize;
    // iteration cap at scan points above the bracket
    int scan_max_iter = 400;
    std::optional<Profile> init;
};

struct SpeedResult {
    double c0 = 0;
    Profile u0;
    double J_at_c0 = 0;
    SpeedCurve curve;
    std::vector<double> scan_grid;
};

SpeedResult find_speed(const WaveProblem& pb, const SpeedOptions& opt = {});

struct DecayFits {
    double right_rate = 0, left_rate = 0;
    double right_expected = 0, left_expected = 0;
    double right_rel_error() const;
    double left_rel_error() const;
};

struct WaveSolution {
    WaveKind kind = WaveKind::front;
    double c = 0;
    double kappa = 0;
    Profile u, v;
    double J_value = 0;
    double el_residual = 0;
    double v_residual = 0;  // max |v - L_c u| through the Green sweeps
    int newton_steps = 0;
    DecayFits decay_fits;
    FarField far;
};

struct RefineOptions {
    double tol = 1e-10;
    int max_steps = 30;
};

// the problem's own variables (transformed ones for the reversed front)
WaveSolution refine_bvp(double c_init, const Profile& u_init, const WaveProblem& pb, const RefineOptions& opt = {});
// residual of both traveling-wave equations with the given far field
struct BvpResidual {
    double u_eq = 0, v_eq = 0;
};
BvpResidual bvp_residual(const Profile& u, const Profile& v, double c, const ModelParams& p, const Cubic& f,
                         FarField far);

struct Check {
    std::string name;
    bool applicable = true;
    bool pass = false;
    double measured = 0, bound = 0;
};

struct ValidationReport {
    std::vector<Check> checks;
    bool all_pass() const;
    const Check* find(const std::string& name) const;
};

struct ProfileFeatures {
    double zeta0 = 0, zetaM = 0, zetam = 0, zeta_beta = 0;
    double sup_u = 0, inf_u = 0, v_at_zetaM = 0;
    int sign_changes = 0;
};

ProfileFeatures profile_features(const WaveSolution& s, double beta1);
ValidationReport validate_profile(const WaveSolution& s, const ModelParams& p);

// map a transformed reversed-front solution back to u, v
WaveSolution map_reversed(const WaveSolution& s, const ModelParams& p);

struct SolveResult {
    WaveSolution solution;
    ValidationReport report;
    SpeedResult speed;
    bool candidate() const { return !report.all_pass(); }
};

SolveResult solve_wave(const ModelParams& p, WaveKind kind, const SpeedOptions& opt = {},
                       const WindowOptions& w = {});
SolveResult solve_front(const ModelParams& p);
SolveResult solve_reversed_front(const ModelParams& p);
SolveResult solve_pulse(const ModelParams& p);

struct SweepRow {
    double d = 0, c = 0, dc2 = 0, sup_u = 0, v_at_zetaM = 0;
    double dist_to_front = 0;  // sup |u(zeta_beta + x) - H(x)| on [-5, 5]
    bool ok = false;
    std::string error;
};

std::vector<SweepRow> d_sweep(const ModelParams& base, const std::vector<double>& d_list,
                              const SpeedOptions& opt = {});

}  // namespace fhn
