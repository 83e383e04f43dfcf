#pragma once

#include <cmath>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "fhn/model.hpp"

namespace fhn::detail {

template <class Fn>
double bisect(Fn fn, double a, double b, double tol)
{
    const double fa = fn(a), fb = fn(b);
    if (fa == 0) return a;
    if (fb == 0) return b;
    if ((fa > 0) == (fb > 0)) {
        std::ostringstream os;
        os << "root not bracketed on [" << a << ", " << b << "]";
        throw ModelError(ModelError::Kind::bracket, os.str());
    }
    auto done = [tol](double lo, double hi) { return std::abs(hi - lo) <= tol; };
    auto r = boost::math::tools::bisect(fn, a, b, done);
    return 0.5 * (r.first + r.second);
}

// widens [a, b] to the right until the sign changes
template <class Fn>
double bisect_expand(Fn fn, double a, double b, double tol)
{
    const double fa = fn(a);
    for (int i = 0; i < 60; ++i) {
        if ((fn(b) > 0) != (fa > 0)) return bisect(fn, a, b, tol);
        b = a + 2 * (b - a);
    }
    throw ModelError(ModelError::Kind::bracket, "no sign change found while widening the bracket");
}

}  // namespace fhn::detail
