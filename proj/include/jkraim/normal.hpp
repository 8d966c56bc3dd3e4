#pragma once

#include <cmath>
#include <limits>

#include <unsupported/Eigen/SpecialFunctions>

namespace jkraim {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

// lower CDF, accurate deep in the left tail
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

// upper tail P(Z > x)
inline double norm_sf(double x) { return 0.5 * std::erfc(x * kInvSqrt2); }

// x such that P(Z < x) = p
inline double norm_ppf(double p)
{
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    double x = Eigen::numext::ndtri(p);
    // one Newton step on the side with the smaller probability
    if (p < 0.5) {
        double f = norm_cdf(x) - p;
        double d = norm_pdf(x);
        if (d > 0) x -= f / d;
    } else {
        double f = norm_sf(x) - (1.0 - p);
        double d = norm_pdf(x);
        if (d > 0) x += f / d;
    }
    return x;
}

// x such that P(Z > x) = q (the Q^-1 of the integrity literature)
inline double norm_isf(double q) { return -norm_ppf(q); }

} // namespace jkraim
