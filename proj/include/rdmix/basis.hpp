#pragma once

#include <array>
#include <cmath>
#include <mutex>
#include <string>
#include <vector>

#include "rdmix/error.hpp"
#include "rdmix/mesh.hpp"
#include "rdmix/polynomials.hpp"
#include "rdmix/quadrature.hpp"

namespace rdmix {

/// Dimension of P_k in two variables.
constexpr int dim_p(int k) { return k < 0 ? 0 : (k + 1) * (k + 2) / 2; }
/// Dimension of [P_p]^2.
constexpr int dim_vector_p(int p) { return (p + 1) * (p + 2); }
/// Interior (zero normal trace) part of [P_p]^2.
constexpr int dim_interior(int p) { return (p + 1) * (p - 1); }

// ---------------------------------------------------------------------------------------
// L2 scalar basis
// ---------------------------------------------------------------------------------------

/// Orthogonal (Dubiner) basis of P_k on the reference triangle, ordered by total degree so
/// that the first dim_p(j) functions span P_j. Gradients are with respect to reference
/// coordinates.
inline void l2_basis(int order, Point ref, std::vector<double>& values, std::vector<Point>* grads) {
    RDMIX_REQUIRE(order >= 0, Error, "l2_basis: negative order");
    const int n = dim_p(order);
    values.resize(static_cast<std::size_t>(n));
    if (grads) grads->resize(static_cast<std::size_t>(n));
    const double t1 = 2.0 * ref.x + ref.y - 1.0;
    const double t2 = 1.0 - ref.y;
    const double eta = 2.0 * ref.y - 1.0;
    const auto leg = poly::scaled_legendre(order, t1, t2);
    int idx = 0;
    for (int d = 0; d <= order; ++d) {
        for (int q = 0; q <= d; ++q, ++idx) {
            const int p = d - q;
            const double a = 2.0 * p + 1.0;
            const double jv = poly::jacobi(q, a, 0.0, eta);
            values[idx] = leg.value[p] * jv;
            if (grads) {
                const double jd = 2.0 * poly::jacobi_derivative(q, a, 0.0, eta);
                (*grads)[idx] = {2.0 * leg.d1[p] * jv,
                                 (leg.d1[p] - leg.d2[p]) * jv + leg.value[p] * jd};
            }
        }
    }
}

inline std::vector<double> l2_basis(int order, Point ref) {
    std::vector<double> v;
    l2_basis(order, ref, v, nullptr);
    return v;
}

// ---------------------------------------------------------------------------------------
// H(div) hierarchical basis
// ---------------------------------------------------------------------------------------

namespace detail {

inline constexpr std::array<Point, 3> kRefVertices{Point{0.0, 0.0}, Point{1.0, 0.0},
                                                   Point{0.0, 1.0}};
inline constexpr std::array<Point, 3> kRefBaryGrad{Point{-1.0, -1.0}, Point{1.0, 0.0},
                                                   Point{0.0, 1.0}};

inline std::array<double, 3> barycentric(Point r) { return {1.0 - r.x - r.y, r.x, r.y}; }
inline Point rot(Point v) { return {v.y, -v.x}; }

/// One interior function: either the curl of the cubic bubble times a Dubiner function,
/// or the product of an edge bubble, the edge tangent and a Dubiner function.
struct InteriorFunction {
    enum Kind { Curl, Tangent } kind;
    int edge;     // Tangent only
    int dubiner;  // index into the Dubiner basis
};

inline void eval_interior(const InteriorFunction& f, Point r, const std::vector<double>& psi,
                          const std::vector<Point>& dpsi, Point& value, double& div) {
    const auto lam = barycentric(r);
    const double s = psi[f.dubiner];
    const Point ds = dpsi[f.dubiner];
    if (f.kind == InteriorFunction::Curl) {
        const double b = lam[0] * lam[1] * lam[2];
        const Point db = lam[1] * lam[2] * kRefBaryGrad[0] + lam[0] * lam[2] * kRefBaryGrad[1] +
                         lam[0] * lam[1] * kRefBaryGrad[2];
        value = rot(s * db + b * ds);
        div = 0.0;
        return;
    }
    const int a = (f.edge + 1) % 3;
    const int bb = (f.edge + 2) % 3;
    const Point t = kRefVertices[bb] - kRefVertices[a];
    const double eb = lam[a] * lam[bb];
    const Point deb = lam[bb] * kRefBaryGrad[a] + lam[a] * kRefBaryGrad[bb];
    value = (eb * s) * t;
    div = dot(t, s * deb + eb * ds);
}

/// Interior functions grouped by level (polynomial degree). Level l >= 2 contributes
/// 2l - 1 functions; together with the edge functions up to degree p they span [P_p]^2.
/// Selection is a greedy rank test over a fixed candidate list, so it is deterministic.
class InteriorTable {
public:
    static const InteriorTable& instance() {
        static const InteriorTable table;
        return table;
    }

    /// Functions of all levels <= p, in level order.
    std::vector<InteriorFunction> up_to(int p) const {
        std::vector<InteriorFunction> out;
        for (int l = 2; l <= p; ++l) out.insert(out.end(), levels_[l].begin(), levels_[l].end());
        return out;
    }

    int max_level() const { return static_cast<int>(levels_.size()) - 1; }

private:
    InteriorTable() {
        const int pmax = kOrderMax + 1;
        levels_.resize(static_cast<std::size_t>(pmax + 1));
        const auto& rule = quadrature_rule(QuadDomain::Triangle, 2 * pmax + 2);
        const std::size_t nq = rule.size();
        std::vector<std::vector<double>> psi(nq);
        std::vector<std::vector<Point>> dpsi(nq);
        for (std::size_t q = 0; q < nq; ++q) l2_basis(pmax, rule.points[q], psi[q], &dpsi[q]);
        std::vector<std::vector<double>> accepted;  // orthonormal samples
        auto sample = [&](const InteriorFunction& f) {
            std::vector<double> v(2 * nq);
            for (std::size_t q = 0; q < nq; ++q) {
                Point val;
                double div;
                eval_interior(f, rule.points[q], psi[q], dpsi[q], val, div);
                const double sw = std::sqrt(rule.weights[q]);
                v[2 * q] = sw * val.x;
                v[2 * q + 1] = sw * val.y;
            }
            return v;
        };
        auto inner = [](const std::vector<double>& a, const std::vector<double>& b) {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
            return s;
        };
        for (int l = 2; l <= pmax; ++l) {
            std::vector<InteriorFunction> candidates;
            for (int j = dim_p(l - 3); j < dim_p(l - 2); ++j)
                candidates.push_back({InteriorFunction::Curl, -1, j});
            for (int e = 0; e < 3; ++e)
                for (int j = dim_p(l - 3); j < dim_p(l - 2); ++j)
                    candidates.push_back({InteriorFunction::Tangent, e, j});
            const int need = 2 * l - 1;
            for (const auto& c : candidates) {
                if (static_cast<int>(levels_[l].size()) == need) break;
                auto v = sample(c);
                const double n0 = std::sqrt(inner(v, v));
                for (int pass = 0; pass < 2; ++pass)
                    for (const auto& qv : accepted) {
                        const double proj = inner(v, qv);
                        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * qv[i];
                    }
                const double n1 = std::sqrt(inner(v, v));
                if (n1 > 1e-7 * n0) {
                    for (auto& x : v) x /= n1;
                    accepted.push_back(std::move(v));
                    levels_[l].push_back(c);
                }
            }
            RDMIX_REQUIRE(static_cast<int>(levels_[l].size()) == need, Error,
                          "hdiv_basis: interior candidates do not span level " +
                              std::to_string(l));
        }
    }

    std::vector<std::vector<InteriorFunction>> levels_;
};

} // namespace detail

/// Per-element description of the local flux space: element flux order p (>= 1), the
/// order of each local edge (>= p under the maximum rule, any >= 0 is accepted), and whether
/// each local edge runs against its canonical direction.
struct HdivLayout {
    int order = 1;
    std::array<int, 3> edge_order{1, 1, 1};
    std::array<bool, 3> flipped{false, false, false};

    int num_edge_functions(int i) const { return edge_order[i] + 1; }
    int num_interior() const { return dim_interior(order); }
    int size() const {
        return num_edge_functions(0) + num_edge_functions(1) + num_edge_functions(2) +
               num_interior();
    }
    int max_degree() const {
        return std::max({order, edge_order[0], edge_order[1], edge_order[2]});
    }
};

inline HdivLayout make_layout(const Mesh& mesh, int k, int order,
                              const std::array<int, 3>& edge_order) {
    HdivLayout lay;
    lay.order = order;
    lay.edge_order = edge_order;
    for (int i = 0; i < 3; ++i) lay.flipped[i] = mesh.element(k).signs[i] < 0;
    return lay;
}

/// Values and divergences of the local flux basis in reference coordinates. Local order:
/// edge 0 levels 0..q0, edge 1, edge 2, then interior functions by level.
inline void hdiv_reference(const HdivLayout& lay, Point r, std::vector<Point>& values,
                           std::vector<double>& divs) {
    RDMIX_REQUIRE(lay.order >= 1 && lay.max_degree() <= kOrderMax + 1, Error,
                  "hdiv_basis: unsupported order " + std::to_string(lay.max_degree()));
    const int n = lay.size();
    values.resize(static_cast<std::size_t>(n));
    divs.resize(static_cast<std::size_t>(n));
    const auto lam = detail::barycentric(r);
    const auto& g = detail::kRefBaryGrad;
    int idx = 0;
    for (int i = 0; i < 3; ++i) {
        int c0 = (i + 1) % 3, c1 = (i + 2) % 3;
        if (lay.flipped[i]) std::swap(c0, c1);
        values[idx] = lam[c0] * detail::rot(g[c1]) - lam[c1] * detail::rot(g[c0]);
        divs[idx] = 2.0 * cross(g[c0], g[c1]);
        ++idx;
        const int q = lay.edge_order[i];
        if (q >= 1) {
            const double t1 = lam[c1] - lam[c0];
            const double t2 = lam[c0] + lam[c1];
            const auto leg = poly::scaled_legendre(q + 1, t1, t2);
            const Point dt1 = g[c1] - g[c0];
            const Point dt2 = g[c0] + g[c1];
            for (int j = 1; j <= q; ++j, ++idx) {
                const auto w = poly::scaled_integrated_legendre(j + 1, leg, t2);
                values[idx] = detail::rot(w.d1 * dt1 + w.d2 * dt2);
                divs[idx] = 0.0;
            }
        }
    }
    if (lay.order >= 2) {
        const auto& table = detail::InteriorTable::instance();
        std::vector<double> psi;
        std::vector<Point> dpsi;
        l2_basis(lay.order - 2, r, psi, &dpsi);
        for (const auto& f : table.up_to(lay.order)) {
            detail::eval_interior(f, r, psi, dpsi, values[idx], divs[idx]);
            ++idx;
        }
    }
}

/// Affine element map x = x0 + J r.
struct ElementGeometry {
    Point origin;
    double j00 = 1, j01 = 0, j10 = 0, j11 = 1;  // columns: v1 - v0, v2 - v0
    double det = 1;

    static ElementGeometry of(const Mesh& mesh, int k) {
        const auto c = mesh.corners(k);
        ElementGeometry g;
        g.origin = c[0];
        g.j00 = c[1].x - c[0].x;
        g.j10 = c[1].y - c[0].y;
        g.j01 = c[2].x - c[0].x;
        g.j11 = c[2].y - c[0].y;
        g.det = g.j00 * g.j11 - g.j01 * g.j10;
        return g;
    }

    Point map(Point r) const {
        return {origin.x + j00 * r.x + j01 * r.y, origin.y + j10 * r.x + j11 * r.y};
    }
    /// Contravariant Piola transform of a reference vector.
    Point piola(Point v) const { return {(j00 * v.x + j01 * v.y) / det, (j10 * v.x + j11 * v.y) / det}; }
    /// Reference gradient to physical gradient (J^{-T} g).
    Point grad(Point g) const { return {(j11 * g.x - j10 * g.y) / det, (-j01 * g.x + j00 * g.y) / det}; }
};

/// Physical basis data at one point of an element.
struct BasisEval {
    std::vector<double> mass;          // scalar L2 basis values
    std::vector<Point> mass_grad;      // physical gradients
    std::vector<Point> flux;           // Piola-mapped vector basis values
    std::vector<double> flux_div;      // physical divergences
    double det_j = 1.0;
};

inline void hdiv_basis(const HdivLayout& lay, const ElementGeometry& geo, Point r,
                       std::vector<Point>& values, std::vector<double>& divs) {
    hdiv_reference(lay, r, values, divs);
    for (auto& v : values) v = geo.piola(v);
    for (auto& d : divs) d /= geo.det;
}

inline BasisEval evaluate_basis(int mass_order, const HdivLayout& lay, const ElementGeometry& geo,
                                Point r) {
    BasisEval e;
    e.det_j = geo.det;
    l2_basis(mass_order, r, e.mass, &e.mass_grad);
    for (auto& gv : e.mass_grad) gv = geo.grad(gv);
    hdiv_basis(lay, geo, r, e.flux, e.flux_div);
    return e;
}

/// Reference coordinates of the point at parameter s in [0,1] along local edge i, measured
/// in the local traversal direction.
inline Point edge_point(int i, double s) {
    const Point a = detail::kRefVertices[(i + 1) % 3];
    const Point b = detail::kRefVertices[(i + 2) % 3];
    return a + s * (b - a);
}

} // namespace rdmix
