#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace cqm {

using Vec = std::vector<double>;

// Summation runs in ascending index order everywhere; reduction order is
// part of the determinism contract.
inline double squared_distance(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline double distance(const Vec& a, const Vec& b) { return std::sqrt(squared_distance(a, b)); }

inline double squared_norm(const Vec& a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return s;
}

inline void add_scaled(Vec& dst, const Vec& src, double scale) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

inline void scale(Vec& v, double s) {
    for (double& x : v) x *= s;
}

inline bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

} // namespace cqm
