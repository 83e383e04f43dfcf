#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "fhn/model.hpp"

namespace fhn {

struct WeightedGrid {
    double z_left = -30, z_right = 30;
    int n = 6001;
    double h = 0.01;
    // weights are e^{z - log_shift}
    double log_shift = 0;

    static WeightedGrid uniform(double z_left, double z_right, int n);
    // spacing h with z = 0 on a node; ends rounded outward to the lattice
    static WeightedGrid lattice(double z_left, double z_right, double h);

    double z(int i) const { return z_left + i * h; }
    double log_weight(int i) const { return z(i) - log_shift; }
    double weight(int i) const;
    // trapezoid weight times e^{z}
    double quad_weight(int i) const;
    std::vector<double> nodes() const;
    // nearest node to z
    int index_of(double z) const;
    bool operator==(const WeightedGrid&) const = default;
};

enum class Frame { moving_z, lab_x };

struct Profile {
    WeightedGrid grid;
    std::vector<double> values;
    Frame frame = Frame::moving_z;

    Profile() = default;
    Profile(const WeightedGrid& g, std::vector<double> v, Frame f = Frame::moving_z);
    static Profile zeros(const WeightedGrid& g) { return Profile(g, std::vector<double>(g.n, 0.0)); }
    template <class Fn>
    static Profile sample(const WeightedGrid& g, Fn fn)
    {
        std::vector<double> v(g.n);
        for (int i = 0; i < g.n; ++i) v[i] = fn(g.z(i));
        return Profile(g, std::move(v));
    }
    int size() const { return static_cast<int>(values.size()); }
    double operator[](int i) const { return values[i]; }
    double& operator[](int i) { return values[i]; }
};

// constant values of u beyond the window ends
struct FarField {
    double left = 0, right = 0;
};

struct Norms {
    double l2ex = 0, seminorm_N = 0, h1ex = 0;
};

Norms weighted_norms(const Profile& w);
// sum_i quad_weight(i) a_i b_i
double inner_ex(const Profile& a, const Profile& b);

// Exact realization of v = L_c u for piecewise-linear u (plus constant far field):
// Galerkin rows against the cellwise homogeneous adjoint solutions, scaled by e^{-z_i}.
class NonlocalOperator {
public:
    NonlocalOperator(const WeightedGrid& g, double c, double gamma);

    const WeightedGrid& grid() const { return g_; }
    double c() const { return c_; }
    double gamma() const { return gamma_; }
    double r1() const { return r1_; }
    double r2() const { return r2_; }

    std::vector<double> rhs(const std::vector<double>& u, FarField ff = {}) const;
    std::vector<double> solve(const std::vector<double>& rhs) const;
    std::vector<double> apply(const std::vector<double>& u, FarField ff = {}) const;
    // (M^T v)_j / quad_weight(j): the L2_ex gradient of the nonlocal energy
    std::vector<double> adjoint(const std::vector<double>& v) const;
    // 1/2 <u, L u> from a precomputed rhs and v
    double energy(const std::vector<double>& rhs, const std::vector<double>& v) const;
    double pairing(const std::vector<double>& u, const std::vector<double>& w) const;

    // scaled stiffness: row i is lower*v_{i-1} + diag*v_i + upper*v_{i+1}
    double lower() const { return sl_; }
    double diag() const { return sd_; }
    double upper() const { return su_; }
    double diag_first() const { return sd0_; }
    double diag_last() const { return sdn_; }
    // scaled mass: row i couples u_{i-1}, u_i, u_{i+1}
    std::array<double, 3> mass_row(int i) const;
    double tail_left() const { return tl_; }
    double tail_right() const { return tr_; }

private:
    WeightedGrid g_;
    double c_, gamma_, r1_, r2_;
    double sl_, sd_, su_, sd0_, sdn_;
    double aL0_, aL1_, aR0_, aR1_;
    double tl_, tr_;
    double eh_;
};

Profile apply_nonlocal(const Profile& u, double c, double gamma, FarField ff = {});

// Independent realization through the Green's kernel: two exact exponential sweeps.
struct GreenValues {
    std::vector<double> v, dv;
};
Profile apply_nonlocal_green(const Profile& u, double c, double gamma, FarField ff = {});
// v and v' of L_c u at arbitrary points inside the window (u piecewise linear)
GreenValues green_evaluate(const Profile& u, double c, double gamma, const std::vector<double>& z,
                           FarField ff = {});

struct FunctionalSetup {
    double c = 1;
    double kappa = 0;
    double gamma = 1;
    Cubic f;
    FarField far;
};

struct JParts {
    double gradient = 0, nonlocal = 0, potential = 0;
    double total() const { return gradient + nonlocal + potential; }
};

class Functional {
public:
    Functional(const WeightedGrid& g, const FunctionalSetup& s);

    const FunctionalSetup& setup() const { return s_; }
    const NonlocalOperator& op() const { return op_; }
    const WeightedGrid& grid() const { return op_.grid(); }

    JParts parts(const std::vector<double>& u) const;
    double seminorm(const std::vector<double>& u) const;
    // L2_ex gradient of J
    std::vector<double> gradient(const std::vector<double>& u) const;
    // normalized value 2J/N and its L2_ex gradient
    double normalized(const std::vector<double>& u) const;
    double normalized_with_gradient(const std::vector<double>& u, std::vector<double>& grad) const;
    // -(e^z u')' e^{-z} with the quadrature-weight boundary rows
    std::vector<double> weighted_laplacian(const std::vector<double>& u) const;

private:
    FunctionalSetup s_;
    NonlocalOperator op_;
};

JParts evaluate_J(const Profile& u, double c, double kappa, const Cubic& f, double gamma, FarField ff = {});
Profile gradient_J(const Profile& u, double c, double kappa, const Cubic& f, double gamma, FarField ff = {});
// throws std::domain_error when N(u) < 1e-14
double normalized_J(const Profile& u, double c, double kappa, const Cubic& f, double gamma, FarField ff = {});

enum class AdmissibleKind { front, pulse, single_sign_change };

struct AdmissibleSpec {
    AdmissibleKind kind = AdmissibleKind::front;
    double lower = 0, upper = 0, mu3 = 0;
};

struct Projection {
    Profile u;
    int k1 = 0, k2 = 0;  // first node of the second and third segments
    long double cost = 0;
};

Projection project_admissible_detail(const Profile& u, const AdmissibleSpec& spec);
Profile project_admissible(const Profile& u, const AdmissibleSpec& spec);
// exhaustive minimum over all segment boundaries
Projection project_admissible_bruteforce(const Profile& u, const AdmissibleSpec& spec);
bool is_admissible(const Profile& u, const AdmissibleSpec& spec);

void write_profile_csv(std::ostream& os, const Profile& p);
void write_pair_csv(std::ostream& os, const Profile& u, const Profile& v);
Profile read_profile_csv(std::istream& is);
std::pair<Profile, Profile> read_pair_csv(std::istream& is);

}  // namespace fhn
