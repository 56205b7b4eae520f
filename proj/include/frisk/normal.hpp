#pragma once

#include <cmath>
#include <limits>

namespace frisk {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684;
inline constexpr double kSqrt2 = 1.4142135623730950488016887242096980786;

inline double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// Upper tail P(Z > x), accurate far into the tail.
inline double norm_sf(double x) { return 0.5 * std::erfc(x / kSqrt2); }

// Inverse standard normal CDF. Abramowitz-Stegun 26.2.23 start, polished with
// Newton steps on the tail probability (erfc based), good to ~1e-15 over
// p in (1e-300, 1-1e-16).
inline double norm_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (p == 0.5) return 0.0;
    const bool lower = p < 0.5;
    const double q = lower ? p : 1.0 - p; // tail probability, in (0, 0.5]
    const double t = std::sqrt(-2.0 * std::log(q));
    double x = t - (2.30753 + 0.27061 * t) / (1.0 + 0.99229 * t + 0.04481 * t * t);
    // Newton on norm_sf(x) = q; norm_sf' = -pdf
    for (int it = 0; it < 4; ++it) {
        const double err = norm_sf(x) - q;
        const double d = norm_pdf(x);
        if (d <= 0.0) break;
        x += err / d;
    }
    return lower ? -x : x;
}

} // namespace frisk
