#pragma once

#include <cmath>

namespace fhn::detail {

// phi1(x) = (e^x - 1)/x
inline double phi1(double x)
{
    if (std::abs(x) < 1e-5) return 1 + x / 2 + x * x / 6;
    return std::expm1(x) / x;
}

// phi2(x) = (e^x (x - 1) + 1)/x^2 = int_0^1 s e^{xs} ds
inline double phi2(double x)
{
    if (std::abs(x) < 0.25) {
        double term = 1, sum = 0;
        for (int k = 0; k < 30; ++k) {
            sum += term / (k + 2);
            term *= x / (k + 1);
        }
        return sum;
    }
    return (x * std::expm1(x) - (std::expm1(x) - x)) / (x * x);
}

}  // namespace fhn::detail
