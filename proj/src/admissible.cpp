#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fhn/weighted_space.hpp"

namespace fhn {

namespace {

struct Box {
    double lo, hi;
};

// three consecutive boxes; for single_sign_change the middle segment is empty
std::array<Box, 3> boxes(const AdmissibleSpec& s)
{
    switch (s.kind) {
    case AdmissibleKind::front: return {Box{s.mu3, s.upper}, Box{0.0, s.mu3}, Box{s.lower, 0.0}};
    case AdmissibleKind::pulse: return {Box{s.lower, 0.0}, Box{0.0, s.upper}, Box{s.lower, 0.0}};
    case AdmissibleKind::single_sign_change: return {Box{0.0, s.upper}, Box{0.0, s.upper}, Box{s.lower, 0.0}};
    }
    throw std::invalid_argument("unknown admissible kind");
}

long double penalty(const Profile& u, int i, const Box& b)
{
    const double x = u[i];
    const double d = x - std::clamp(x, b.lo, b.hi);
    return static_cast<long double>(u.grid.quad_weight(i)) * d * d;
}

Profile assemble(const Profile& u, const std::array<Box, 3>& bx, int k1, int k2)
{
    Profile out = u;
    for (int i = 0; i < u.grid.n; ++i) {
        const Box& b = i < k1 ? bx[0] : (i < k2 ? bx[1] : bx[2]);
        out[i] = std::clamp(u[i], b.lo, b.hi);
    }
    return out;
}

void check_spec(const AdmissibleSpec& s)
{
    if (!(s.lower < 0 && s.upper > 0)) throw std::invalid_argument("admissible spec needs lower < 0 < upper");
    if (s.kind == AdmissibleKind::front && !(s.mu3 > 0 && s.mu3 < s.upper))
        throw std::invalid_argument("front spec needs 0 < mu3 < upper");
}

}  // namespace

Projection project_admissible_detail(const Profile& u, const AdmissibleSpec& spec)
{
    check_spec(spec);
    const auto bx = boxes(spec);
    const int n = u.grid.n;
    // prefix sums of the first two box penalties, suffix sums of the last
    std::vector<long double> P0(n + 1, 0), P1(n + 1, 0), S2(n + 1, 0);
    for (int i = 0; i < n; ++i) {
        P0[i + 1] = P0[i] + penalty(u, i, bx[0]);
        P1[i + 1] = P1[i] + penalty(u, i, bx[1]);
    }
    for (int i = n - 1; i >= 0; --i) S2[i] = S2[i + 1] + penalty(u, i, bx[2]);

    Projection best;
    best.cost = std::numeric_limits<long double>::infinity();
    if (spec.kind == AdmissibleKind::single_sign_change) {
        for (int k = 0; k <= n; ++k) {
            const long double cost = P0[k] + S2[k];
            if (cost < best.cost) {
                best.cost = cost;
                best.k1 = best.k2 = k;
            }
        }
    } else {
        // cost(k1, k2) = P0[k1] - P1[k1] + P1[k2] + S2[k2], k1 <= k2
        long double run = std::numeric_limits<long double>::infinity();
        int arg = 0;
        for (int k2 = 0; k2 <= n; ++k2) {
            const long double cand = P0[k2] - P1[k2];
            if (cand < run) {
                run = cand;
                arg = k2;
            }
            const long double cost = run + P1[k2] + S2[k2];
            if (cost < best.cost) {
                best.cost = cost;
                best.k1 = arg;
                best.k2 = k2;
            }
        }
    }
    best.u = assemble(u, bx, best.k1, best.k2);
    return best;
}

Profile project_admissible(const Profile& u, const AdmissibleSpec& spec)
{
    return project_admissible_detail(u, spec).u;
}

Projection project_admissible_bruteforce(const Profile& u, const AdmissibleSpec& spec)
{
    check_spec(spec);
    const auto bx = boxes(spec);
    const int n = u.grid.n;
    Projection best;
    best.cost = std::numeric_limits<long double>::infinity();
    const bool single = spec.kind == AdmissibleKind::single_sign_change;
    for (int k1 = 0; k1 <= n; ++k1) {
        for (int k2 = single ? k1 : k1; k2 <= (single ? k1 : n); ++k2) {
            long double cost = 0;
            for (int i = 0; i < n; ++i) cost += penalty(u, i, i < k1 ? bx[0] : (i < k2 ? bx[1] : bx[2]));
            if (cost < best.cost) {
                best.cost = cost;
                best.k1 = k1;
                best.k2 = k2;
            }
        }
    }
    best.u = assemble(u, bx, best.k1, best.k2);
    return best;
}

bool is_admissible(const Profile& u, const AdmissibleSpec& spec)
{
    return project_admissible_detail(u, spec).cost == 0;
}

}  // namespace fhn
