#pragma once

#include <vector>

namespace rdmix::poly {

/// Legendre polynomials P_0..P_n at x.
inline std::vector<double> legendre(int n, double x) {
    std::vector<double> p(static_cast<std::size_t>(n + 1), 1.0);
    if (n >= 1) p[1] = x;
    for (int k = 2; k <= n; ++k) p[k] = ((2.0 * k - 1.0) * x * p[k - 1] - (k - 1.0) * p[k - 2]) / k;
    return p;
}

/// Scaled Legendre polynomials t2^k P_k(t1/t2), k = 0..n, with partial derivatives.
struct ScaledLegendre {
    std::vector<double> value, d1, d2;
};

inline ScaledLegendre scaled_legendre(int n, double t1, double t2) {
    ScaledLegendre s;
    const auto sz = static_cast<std::size_t>(n + 1);
    s.value.assign(sz, 0.0);
    s.d1.assign(sz, 0.0);
    s.d2.assign(sz, 0.0);
    s.value[0] = 1.0;
    if (n >= 1) {
        s.value[1] = t1;
        s.d1[1] = 1.0;
    }
    const double t22 = t2 * t2;
    for (int k = 2; k <= n; ++k) {
        const double a = 2.0 * k - 1.0;
        const double b = k - 1.0;
        s.value[k] = (a * t1 * s.value[k - 1] - b * t22 * s.value[k - 2]) / k;
        s.d1[k] = (a * (s.value[k - 1] + t1 * s.d1[k - 1]) - b * t22 * s.d1[k - 2]) / k;
        s.d2[k] = (a * t1 * s.d2[k - 1] - b * (2.0 * t2 * s.value[k - 2] + t22 * s.d2[k - 2])) / k;
    }
    return s;
}

/// Scaled integrated Legendre t2^n Lhat_n(t1/t2), Lhat_n(s) = int_{-1}^{s} P_{n-1}, n >= 2.
/// The scaled form carries the factor (t2^2 - t1^2).
struct ValueGrad2 {
    double value = 0.0, d1 = 0.0, d2 = 0.0;
};

inline ValueGrad2 scaled_integrated_legendre(int n, const ScaledLegendre& s, double t2) {
    const double c = 1.0 / (2.0 * n - 1.0);
    const double t22 = t2 * t2;
    return {c * (s.value[n] - t22 * s.value[n - 2]), c * (s.d1[n] - t22 * s.d1[n - 2]),
            c * (s.d2[n] - 2.0 * t2 * s.value[n - 2] - t22 * s.d2[n - 2])};
}

/// Jacobi polynomial P_n^{(a,b)}(x).
inline double jacobi(int n, double a, double b, double x) {
    if (n == 0) return 1.0;
    double p0 = 1.0;
    double p1 = 0.5 * ((a + b + 2.0) * x + (a - b));
    for (int k = 2; k <= n; ++k) {
        const double c = 2.0 * k + a + b;
        const double a1 = 2.0 * k * (k + a + b) * (c - 2.0);
        const double a2 = (c - 1.0) * (c * (c - 2.0) * x + a * a - b * b);
        const double a3 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        const double p2 = (a2 * p1 - a3 * p0) / a1;
        p0 = p1;
        p1 = p2;
    }
    return p1;
}

inline double jacobi_derivative(int n, double a, double b, double x) {
    if (n == 0) return 0.0;
    return 0.5 * (n + a + b + 1.0) * jacobi(n - 1, a + 1.0, b + 1.0, x);
}

} // namespace rdmix::poly
