#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "rdmix/assembly.hpp"
#include "rdmix/error.hpp"
#include "rdmix/mesh.hpp"

namespace rdmix {

// ---------------------------------------------------------------------------------------
// Pointwise kinetics
// ---------------------------------------------------------------------------------------

inline double fisher(double m) { return m * (1.0 - m); }

/// f_i = m_i (1 - sum_j a_ij m_j)
inline std::vector<double> competition(const std::vector<double>& m, const std::vector<std::vector<double>>& a) {
    const std::size_t n = m.size();
    RDMIX_REQUIRE(a.size() == n, Error, "competition: interaction matrix does not match species count");
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
        RDMIX_REQUIRE(a[i].size() == n, Error, "competition: interaction matrix is not square");
        double s = 1.0;
        for (std::size_t j = 0; j < n; ++j) s -= a[i][j] * m[j];
        f[i] = m[i] * s;
    }
    return f;
}

struct AlievPanfilovParams {
    double alpha = 0.01;
    double gamma = 0.002;
    double b = 0.15;
    double c = 8.0;
    double mu1 = 0.2;
    double mu2 = 0.3;
};

/// Returns (f, dr/dtau).
inline std::pair<double, double> aliev_panfilov(double m, double r, const AlievPanfilovParams& p) {
    RDMIX_REQUIRE(p.mu2 + m != 0.0, Error, "aliev_panfilov: mu2 + m vanishes");
    const double f = p.c * m * (m - p.alpha) * (1.0 - m) - r * m;
    const double dr = (p.gamma + p.mu1 * r / (p.mu2 + m)) * (-r - p.c * m * (m - p.b - 1.0));
    return {f, dr};
}

/// Transmembrane potential in mV.
inline double potential_map(double m) { return 100.0 * m - 80.0; }
/// Physical time in ms of the dimensionless time tau.
inline double time_map(double tau) { return 12.9 * tau; }

/// Reaction kinetics for n species with optional internal (non-diffusing) states.
class Kinetics {
public:
    virtual ~Kinetics() = default;
    virtual int species() const = 0;
    virtual int internal_dim() const { return 0; }
    /// f[i] for species values m and internal states s.
    virtual void rates(const double* m, const double* s, double* f) const = 0;
    virtual void internal_rates(const double* /*m*/, const double* /*s*/, double* /*ds*/) const {}
    virtual std::vector<double> initial_internal() const { return {}; }
};

class NoKinetics : public Kinetics {
public:
    explicit NoKinetics(int n = 1) : n_(n) {}
    int species() const override { return n_; }
    void rates(const double*, const double*, double* f) const override {
        for (int i = 0; i < n_; ++i) f[i] = 0.0;
    }

private:
    int n_;
};

/// f = rate * m (1 - m)
class FisherKinetics : public Kinetics {
public:
    explicit FisherKinetics(double rate = 1.0) : rate_(rate) {}
    int species() const override { return 1; }
    void rates(const double* m, const double*, double* f) const override { f[0] = rate_ * fisher(m[0]); }

private:
    double rate_;
};

class CompetitionKinetics : public Kinetics {
public:
    explicit CompetitionKinetics(std::vector<std::vector<double>> a) : a_(std::move(a)) {
        RDMIX_REQUIRE(!a_.empty(), Error, "competition: empty interaction matrix");
        for (const auto& row : a_)
            RDMIX_REQUIRE(row.size() == a_.size(), Error, "competition: interaction matrix is not square");
    }
    int species() const override { return static_cast<int>(a_.size()); }
    void rates(const double* m, const double*, double* f) const override {
        const std::size_t n = a_.size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = 1.0;
            for (std::size_t j = 0; j < n; ++j) s -= a_[i][j] * m[j];
            f[i] = m[i] * s;
        }
    }
    const std::vector<std::vector<double>>& matrix() const { return a_; }

private:
    std::vector<std::vector<double>> a_;
};

class AlievPanfilovKinetics : public Kinetics {
public:
    explicit AlievPanfilovKinetics(AlievPanfilovParams p = {}) : p_(p) {}
    int species() const override { return 1; }
    int internal_dim() const override { return 1; }
    void rates(const double* m, const double* s, double* f) const override {
        f[0] = aliev_panfilov(m[0], s[0], p_).first;
    }
    void internal_rates(const double* m, const double* s, double* ds) const override {
        ds[0] = aliev_panfilov(m[0], s[0], p_).second;
    }
    std::vector<double> initial_internal() const override { return {0.0}; }
    const AlievPanfilovParams& params() const { return p_; }

private:
    AlievPanfilovParams p_;
};

/// Parameters of the segregation benchmark.
inline std::vector<std::vector<double>> segregation_matrix() { return {{1, 3, 3}, {3, 1, 3}, {3, 3, 1}}; }
/// Parameters of the cyclic-interaction benchmark.
inline std::vector<std::vector<double>> cyclic_matrix() { return {{1, 2, 7}, {7, 1, 2}, {2, 7, 1}}; }

/// Explicit RK2 (Heun) for the spatially homogeneous kinetics m' = f(m).
inline std::vector<double> integrate_homogeneous(const Kinetics& kin, std::vector<double> m, double t_end, double dt) {
    const int n = kin.species();
    RDMIX_REQUIRE(static_cast<int>(m.size()) == n, Error, "integrate_homogeneous: wrong state size");
    std::vector<double> s = kin.initial_internal();
    const int ns = kin.internal_dim();
    std::vector<double> f1(n), f2(n), m1(n), d1(ns), d2(ns), s1(ns);
    const int steps = static_cast<int>(std::ceil(t_end / dt - 1e-12));
    const double h = t_end / steps;
    for (int it = 0; it < steps; ++it) {
        kin.rates(m.data(), s.data(), f1.data());
        kin.internal_rates(m.data(), s.data(), d1.data());
        for (int i = 0; i < n; ++i) m1[i] = m[i] + h * f1[i];
        for (int i = 0; i < ns; ++i) s1[i] = s[i] + h * d1[i];
        kin.rates(m1.data(), s1.data(), f2.data());
        kin.internal_rates(m1.data(), s1.data(), d2.data());
        for (int i = 0; i < n; ++i) m[i] += 0.5 * h * (f1[i] + f2[i]);
        for (int i = 0; i < ns; ++i) s[i] += 0.5 * h * (d1[i] + d2[i]);
    }
    return m;
}

// ---------------------------------------------------------------------------------------
// Manufactured solutions m(x, t) = phi(t) g(x)
// ---------------------------------------------------------------------------------------

struct SpatialProfile {
    std::function<double(Point)> value;
    std::function<Point(Point)> grad;
    /// Hessian (xx, xy, yy).
    std::function<std::array<double, 3>(Point)> hessian;
};

struct ManufacturedCase {
    std::string name;
    double t_star = 1.0;
    Tensor2 d = Tensor2::isotropic(1.0);
    SpatialProfile g;
    std::function<double(double)> phi, phi_dot;

    double m(Point x, double t) const { return phi(t) * g.value(x); }
    Point grad_m(Point x, double t) const { return phi(t) * g.grad(x); }
    /// h = -D grad m
    Point h(Point x, double t) const { return -1.0 * d.apply(grad_m(x, t)); }
    double div_h(Point x, double t) const {
        const auto hs = g.hessian(x);
        return -phi(t) * (d.xx * hs[0] + 2.0 * d.xy * hs[1] + d.yy * hs[2]);
    }
    /// f = dm/dt - div(D grad m)
    double source(Point x, double t) const { return phi_dot(t) * g.value(x) + div_h(x, t); }
};

inline SpatialProfile smooth_profile() {
    constexpr double w = 2.0 * std::numbers::pi;
    SpatialProfile g;
    g.value = [](Point p) { return 1.0 + std::sin(w * p.x) * std::sin(w * p.y); };
    g.grad = [](Point p) {
        return Point{w * std::cos(w * p.x) * std::sin(w * p.y), w * std::sin(w * p.x) * std::cos(w * p.y)};
    };
    g.hessian = [](Point p) {
        const double sx = std::sin(w * p.x), cx = std::cos(w * p.x), sy = std::sin(w * p.y), cy = std::cos(w * p.y);
        return std::array<double, 3>{-w * w * sx * sy, w * w * cx * cy, -w * w * sx * sy};
    };
    return g;
}

/// exp(-rho^2 / (r^2 - rho^2)) inside the disc of radius r, zero outside.
inline SpatialProfile bump_profile(double r) {
    SpatialProfile g;
    const double r2 = r * r;
    g.value = [r2](Point p) {
        const double q = p.x * p.x + p.y * p.y;
        return q < r2 ? std::exp(-q / (r2 - q)) : 0.0;
    };
    // g = exp(u(q)), u = -q / (r2 - q), u' = -r2 / (r2 - q)^2, u'' = -2 r2 / (r2 - q)^3
    g.grad = [r2](Point p) {
        const double q = p.x * p.x + p.y * p.y;
        if (q >= r2) return Point{0.0, 0.0};
        const double s = r2 - q;
        const double gv = std::exp(-q / s);
        const double du = -r2 / (s * s);
        return Point{gv * du * 2.0 * p.x, gv * du * 2.0 * p.y};
    };
    g.hessian = [r2](Point p) {
        const double q = p.x * p.x + p.y * p.y;
        if (q >= r2) return std::array<double, 3>{0.0, 0.0, 0.0};
        const double s = r2 - q;
        const double gv = std::exp(-q / s);
        const double du = -r2 / (s * s);
        const double ddu = -2.0 * r2 / (s * s * s);
        // d2g/dxi dxj = g [ (u'' + u'^2) 4 xi xj + 2 u' delta_ij ]
        const double a = (ddu + du * du) * 4.0;
        return std::array<double, 3>{gv * (a * p.x * p.x + 2.0 * du), gv * a * p.x * p.y,
                                     gv * (a * p.y * p.y + 2.0 * du)};
    };
    return g;
}

/// sum_{i+j<=k} c_ij x^i y^j with fixed nonzero coefficients; total degree exactly k.
inline SpatialProfile polynomial_profile(int k) {
    auto coeff = [](int i, int j) { return 1.0 / (1.0 + i + 2.0 * j) * ((i + j) % 2 == 0 ? 1.0 : -1.0); };
    auto pw = [](double x, int n) { return n < 0 ? 0.0 : std::pow(x, n); };
    SpatialProfile g;
    g.value = [=](Point p) {
        double s = 0.0;
        for (int i = 0; i <= k; ++i)
            for (int j = 0; i + j <= k; ++j) s += coeff(i, j) * pw(p.x, i) * pw(p.y, j);
        return s;
    };
    g.grad = [=](Point p) {
        Point s{0.0, 0.0};
        for (int i = 0; i <= k; ++i)
            for (int j = 0; i + j <= k; ++j) {
                s.x += coeff(i, j) * i * pw(p.x, i - 1) * pw(p.y, j);
                s.y += coeff(i, j) * j * pw(p.x, i) * pw(p.y, j - 1);
            }
        return s;
    };
    g.hessian = [=](Point p) {
        std::array<double, 3> s{0.0, 0.0, 0.0};
        for (int i = 0; i <= k; ++i)
            for (int j = 0; i + j <= k; ++j) {
                const double c = coeff(i, j);
                s[0] += c * i * (i - 1) * pw(p.x, i - 2) * pw(p.y, j);
                s[1] += c * i * j * pw(p.x, i - 1) * pw(p.y, j - 1);
                s[2] += c * j * (j - 1) * pw(p.x, i) * pw(p.y, j - 2);
            }
        return s;
    };
    return g;
}

/// Named manufactured cases:
///   smooth      g = 1 + sin(2 pi x) sin(2 pi y), phi = t before t_star and 1 after
///   bump        bump of radius `radius`, same time profile
///   smooth_time g as smooth, phi = 1 + sin(2 t) / 2 (for temporal convergence)
///   poly<k>     steady polynomial of total degree k, phi = 1
inline ManufacturedCase manufactured_case(const std::string& name, double t_star = 1.0, double d = 1.0,
                                          double radius = 0.75) {
    ManufacturedCase c;
    c.name = name;
    c.t_star = t_star;
    c.d = Tensor2::isotropic(d);
    auto ramp = [t_star](double t) { return t < t_star ? t : 1.0; };
    auto ramp_dot = [t_star](double t) { return t < t_star ? 1.0 : 0.0; };
    if (name == "smooth") {
        c.g = smooth_profile();
        c.phi = ramp;
        c.phi_dot = ramp_dot;
    } else if (name == "bump") {
        c.g = bump_profile(radius);
        c.phi = ramp;
        c.phi_dot = ramp_dot;
    } else if (name == "smooth_time") {
        c.g = smooth_profile();
        c.phi = [](double t) { return 1.0 + 0.5 * std::sin(2.0 * t); };
        c.phi_dot = [](double t) { return std::cos(2.0 * t); };
    } else if (name.rfind("poly", 0) == 0 && name.size() > 4) {
        const int k = std::stoi(name.substr(4));
        RDMIX_REQUIRE(k >= 0 && k <= kOrderMax, Error, "manufactured_case: polynomial degree out of range");
        c.g = polynomial_profile(k);
        c.phi = [](double) { return 1.0; };
        c.phi_dot = [](double) { return 0.0; };
    } else {
        throw Error("manufactured_case: unknown case '" + name + "'");
    }
    return c;
}

} // namespace rdmix
