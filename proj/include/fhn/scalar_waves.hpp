#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "fhn/model.hpp"
#include "fhn/weighted_space.hpp"

namespace fhn {

// H(x) = 1/2 - 1/2 tanh((x - a_star) / (2 (1 - 2 beta))), the front 1 -> 0 of
// delta0 H'' + delta0 H' + f(H) = 0 with H(0) = beta1
struct AnalyticFront {
    double beta = 0.45;
    double a_star = 0;
    double width = 0;  // 2 (1 - 2 beta)

    double operator()(double x) const;
    double deriv(double x) const;
    double second(double x) const;
};

AnalyticFront analytic_front(double beta);

// delta w'' + delta w' + f(w) - level = 0, leaving the saddle `source` as x -> -inf
struct ScalarWaveProblem {
    double delta = 0;
    double level = 0;
    Cubic f;
    double source = 1;
    // w(0) = boundary_value; the profile then lives on (-inf, 0] unless a target is set
    std::optional<double> boundary_value;
    // saddle reached as x -> +inf (full-line connection)
    std::optional<double> target;
};

struct ShootOptions {
    double h = 0.01;
    double tol = 1e-12;
    // offsets along the unstable eigenvector, tried in order
    std::vector<double> offsets{1e-8, 1e-7, 1e-6, 1e-5, 1e-4};
    // window ends are placed where the linear tails are this close to the equilibria
    double tail_tol = 1e-10;
    double max_length = 2000;
    std::optional<double> window_left, window_right;
};

struct Heteroclinic {
    Profile profile;
    Profile derivative;
    double source = 0, target = 0;
    double offset = 0;  // initial distance from the saddles along their eigenvectors
    // jump in w' where the source and target manifolds are spliced (0 for half-line problems)
    double shoot_parameter = 0;
    double residual = 0;
};

class NoConnection : public std::runtime_error {
public:
    enum class Mode { overshoot, undershoot, not_saddle };
    NoConnection(Mode m, const std::string& what) : std::runtime_error(what), mode(m) {}
    Mode mode;
};

Heteroclinic shoot_heteroclinic(const ScalarWaveProblem& p, const ShootOptions& opt = {});

// sup of |delta w'' + delta w' + f(w) - level| over interior nodes, w'' from
// eighth-order differences of the stored derivative
double el_residual(const Heteroclinic& w, const ScalarWaveProblem& p);
// same with both derivatives taken from the sampled values
double el_residual(const Profile& w, double delta, const Cubic& f, double level);

// Q = delta/2 w'^2 - F(w) - level w; returns the largest deviation of Q(x) - Q(x0)
// from -delta int w'^2 and sets `monotone` when Q never increases beyond rounding
double dissipation_defect(const Heteroclinic& w, const ScalarWaveProblem& p, bool* monotone = nullptr);

struct Intersections {
    double rho1 = 0, rho2 = 0, rho3 = 0;
    bool tangent = false;
};

// the three roots of f(xi) = f(nu), sorted; nu is the largest
Intersections intersections(double nu, const Cubic& f);

enum class HalfLineKind { I_star, I_delta, K_nu };

// int e^x {delta/2 w'^2 + G(w)} with G = F (I_*, I_delta) or F(w) + f(nu) w (K_nu);
// I_* runs over the whole window, the others over z <= 0. The constant left
// value is continued to -inf.
double half_line_functional(const Profile& w, HalfLineKind kind, double delta, const Cubic& f, double nu = 0);

// reflection competitor: 2 mu3 - W where 2 mu3 - 1 <= W <= mu3, 1 below, W above mu3
Profile reflection_competitor(const Profile& W, double mu3);

}  // namespace fhn
