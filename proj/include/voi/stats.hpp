#ifndef VOI_STATS_HPP
#define VOI_STATS_HPP

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace voi {

inline double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Unbiased sample variance, divisor n-1. A constant column is exactly 0,
// with no accumulation residue.
inline double variance(std::span<const double> v) {
    if (v.size() < 2) throw std::invalid_argument("variance: need >= 2 values");
    bool all_equal = true;
    for (double x : v)
        if (x != v.front()) {
            all_equal = false;
            break;
        }
    if (all_equal) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double sd(std::span<const double> v) { return std::sqrt(variance(v)); }

// Type-7 sample quantile (linear interpolation of order statistics).
inline double sample_quantile(std::vector<double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - static_cast<double>(i);
    return sorted[i] * (1.0 - frac) + sorted[i + 1] * frac;
}

} // namespace voi

#endif // VOI_STATS_HPP
