#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace frisk {

inline double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Unbiased sample variance (two-pass).
inline double variance_of(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (const double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double covariance_of(std::span<const double> u, std::span<const double> v) {
    const std::size_t n = u.size();
    if (n < 2) return 0.0;
    const double mu = mean_of(u);
    const double mv = mean_of(v);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (u[i] - mu) * (v[i] - mv);
    return s / static_cast<double>(n - 1);
}

// Type-7 sample quantile (the R default) of an already sorted sample.
inline double quantile_type7_sorted(std::span<const double> sorted, double q) {
    const std::size_t n = sorted.size();
    if (n == 0) return std::nan("");
    if (n == 1) return sorted[0];
    const double h = static_cast<double>(n - 1) * q;
    const std::size_t k = static_cast<std::size_t>(std::clamp(std::floor(h), 0.0,
                                                              static_cast<double>(n - 1)));
    const std::size_t k1 = std::min(k + 1, n - 1);
    const double g = h - static_cast<double>(k);
    return sorted[k] + g * (sorted[k1] - sorted[k]);
}

inline double quantile_type7(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    return quantile_type7_sorted(v, q);
}

// Pool-adjacent-violators: least-squares non-decreasing fit.
inline std::vector<double> isotonic_non_decreasing(std::span<const double> y) {
    const std::size_t n = y.size();
    std::vector<double> level(n);
    std::vector<double> weight(n);
    std::vector<std::size_t> count(n);
    std::size_t blocks = 0;
    for (std::size_t i = 0; i < n; ++i) {
        level[blocks] = y[i];
        weight[blocks] = 1.0;
        count[blocks] = 1;
        ++blocks;
        while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
            const double w = weight[blocks - 2] + weight[blocks - 1];
            level[blocks - 2] =
                (level[blocks - 2] * weight[blocks - 2] + level[blocks - 1] * weight[blocks - 1]) / w;
            weight[blocks - 2] = w;
            count[blocks - 2] += count[blocks - 1];
            --blocks;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < blocks; ++b)
        for (std::size_t k = 0; k < count[b]; ++k) out.push_back(level[b]);
    return out;
}

// Trapezoid rule over an increasing grid.
inline double trapezoid(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        s += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    return s;
}

} // namespace frisk
