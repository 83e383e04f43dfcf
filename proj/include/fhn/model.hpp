#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fhn {

class ModelError : public std::runtime_error {
public:
    enum class Kind { invalid_params, regime, hypothesis, bracket };
    ModelError(Kind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct ModelParams {
    double beta = 0.45;
    double gamma = 50.0;
    double d = 1e-5;

    // throws ModelError::invalid_params naming the violated bound
    void validate() const;
};

// p(u) = a3 u^3 + a2 u^2 + a1 u + a0, potential P(x) = -int_0^x p
struct Cubic {
    double a3 = 0, a2 = 0, a1 = 0, a0 = 0;

    static Cubic fhn(double beta);

    double operator()(double u) const { return ((a3 * u + a2) * u + a1) * u + a0; }
    double deriv(double u) const { return (3 * a3 * u + 2 * a2) * u + a1; }
    double second(double u) const { return 6 * a3 * u + 2 * a2; }
    double potential(double x) const {
        return -(((a3 / 4 * x + a2 / 3) * x + a1 / 2) * x + a0) * x;
    }

    // real roots of p(u) = level, ascending, Newton-polished
    std::vector<double> solve(double level) const;
    // q(U) = p(s - U) expanded
    Cubic reflected(double s) const;
    // q(U) = p(s) - p(s - U)
    Cubic reversed(double s) const;
};

struct DerivedConstants {
    double mu2 = 0, mu3 = 0;
    double rho_hat = 0;
    double gamma_tilde1 = 0;
    double gamma_star = 0;
    double mu2_star = 0, mu3_star = 0;
    double beta1 = 0, beta_tilde2 = 0;
    double delta0 = 0;
    double beta0 = 0;
    std::optional<double> gamma_tilde2;  // exists only for beta > beta0
    double M_gamma = 0, theta1 = 0, theta2 = 0, M1 = 0, beta2 = 0;
    bool t2a_holds = false;
    int theta1_halvings = 0;
    double c_lower = 0;
    double b0 = 0;
};

enum class Regime { subcritical, critical, supercritical, outside };
enum class EnergyOrder { mu2_mu3_zero, mu2_zero_mu3, other };

struct RegimeReport {
    bool n1_holds = false, n2_holds = false;
    Regime regime = Regime::outside;
    bool h1_holds = false, h2_holds = false;
    bool truncation_holds = false;
    double truncation_lhs = 0;
    std::array<double, 3> energy_levels{};  // L(mu2), L(0), L(mu3)
    EnergyOrder energy_order = EnergyOrder::other;
    bool implications_consistent = true;
};

enum class Equilibrium { origin, mu3 };

struct SpectralData {
    Equilibrium equilibrium = Equilibrium::origin;
    double slope = 0;
    double lambda1 = 0, lambda2 = 0;
    double eta1 = 0, eta2 = 0;
    double c = 0;
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
    double r1 = 0, r2 = 0;
};

const char* to_string(Regime r);
const char* to_string(EnergyOrder o);
const char* to_string(Equilibrium e);

// nonzero equilibria (mu2, mu3); throws regime error when gamma <= 4/(1-beta)^2
std::array<double, 2> equilibria(const ModelParams& p);
DerivedConstants derive_constants(const ModelParams& p);
RegimeReport classify_regime(const ModelParams& p);
double energy_level(double mu, const ModelParams& p);
SpectralData spectral_data(const ModelParams& p, double c, Equilibrium eq);
// same exponents for an equilibrium with -f' = slope, no hypothesis checks
SpectralData spectral_from_slope(double slope, double d, double gamma, double c);
// exponents r1 < -1 < 0 < r2 of c^2 r^2 + c^2 r - gamma = 0
std::array<double, 2> kernel_exponents(double c, double gamma);
Cubic reversed_transform(const ModelParams& p);

// left side of the tangent-line truncation condition at mu3
double truncation_lhs(double beta, double gamma);
double zero_speed_level(double beta);

}  // namespace fhn
