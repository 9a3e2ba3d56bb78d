#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "rdmix/error.hpp"
#include "rdmix/mesh.hpp"

namespace rdmix {

/// Highest mass-field order the library supports.
inline constexpr int kOrderMax = 8;
/// Highest quadrature degree in the rule tables.
inline constexpr int kMaxQuadratureDegree = 2 * kOrderMax + 4;

enum class QuadDomain { Triangle, Segment };

/// Quadrature on the reference triangle (0,0),(1,0),(0,1) or the reference segment [0,1].
/// Segment points use the x coordinate only.
struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;
    int exact_degree = 0;

    std::size_t size() const { return weights.size(); }
};

namespace detail {

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // recompute the derivative at the converged node
        double p0 = 1.0, p1 = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

inline QuadratureRule build_rule(QuadDomain domain, int degree) {
    QuadratureRule rule;
    std::vector<double> x, w;
    if (domain == QuadDomain::Segment) {
        const int n = degree / 2 + 1;
        gauss_legendre(n, x, w);
        for (int i = 0; i < n; ++i) {
            rule.points.push_back({0.5 * (x[i] + 1.0), 0.0});
            rule.weights.push_back(0.5 * w[i]);
        }
        rule.exact_degree = 2 * n - 1;
        return rule;
    }
    // Collapsed (Duffy) product rule: x = u, y = v (1 - u), jacobian (1 - u).
    const int n = (degree + 2 + 1) / 2;
    gauss_legendre(n, x, w);
    for (int i = 0; i < n; ++i) {
        const double u = 0.5 * (x[i] + 1.0);
        for (int j = 0; j < n; ++j) {
            const double v = 0.5 * (x[j] + 1.0);
            rule.points.push_back({u, v * (1.0 - u)});
            rule.weights.push_back(0.25 * w[i] * w[j] * (1.0 - u));
        }
    }
    rule.exact_degree = 2 * n - 2;
    return rule;
}

} // namespace detail

/// Returns a cached rule exact for polynomials of total degree <= degree.
inline const QuadratureRule& quadrature_rule(QuadDomain domain, int degree) {
    RDMIX_REQUIRE(degree >= 0, Error, "quadrature_rule: negative degree");
    RDMIX_REQUIRE(degree <= kMaxQuadratureDegree, Error,
                  "quadrature_rule: degree " + std::to_string(degree) +
                      " exceeds the supported cap " + std::to_string(kMaxQuadratureDegree));
    static std::mutex mutex;
    static std::map<std::pair<int, int>, QuadratureRule> cache;
    std::lock_guard lock(mutex);
    const auto key = std::make_pair(static_cast<int>(domain), degree);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, detail::build_rule(domain, degree)).first;
    return it->second;
}

} // namespace rdmix
