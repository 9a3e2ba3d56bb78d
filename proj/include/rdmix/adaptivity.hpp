#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rdmix/assembly.hpp"
#include "rdmix/basis.hpp"
#include "rdmix/dofs.hpp"
#include "rdmix/error.hpp"
#include "rdmix/mesh.hpp"

namespace rdmix {

/// Estimator components. `jump` is indexed by edge and is zero on boundary edges.
struct ErrorField {
    std::vector<double> r1, r2;  // per element
    std::vector<double> jump;    // per edge
    std::vector<double> eta;     // per element
    double global = 0.0;
    double max = 0.0;
};

struct ElementResiduals {
    double r1 = 0.0;
    double r2 = 0.0;
};

/// eta_{K,R,1} = ||h + D grad m||_K and eta_{K,R,2} = ||sigma m + div h - g||_K, with g given
/// at the points of the element's field rule.
inline ElementResiduals element_residuals(const Mesh& mesh, const DofMap& dofs, int k, const Vector& m,
                                          const Vector& h, const std::vector<double>& g, double sigma,
                                          const Tensor2& d) {
    const int degree = field_quadrature_degree(dofs.mass_order(k));
    const auto& tab = reference_tab(dofs.mass_order(k), dofs.layout(k), degree);
    RDMIX_REQUIRE(g.size() == tab.rule->size(), Error, "element_residuals: source sampled on the wrong rule");
    const auto geo = ElementGeometry::of(mesh, k);
    const auto idx = dofs.element_flux_dofs(k);
    const int off = dofs.mass_offset(k), nm = dofs.mass_count(k);
    ElementResiduals res;
    for (std::size_t q = 0; q < tab.rule->size(); ++q) {
        double mv = 0.0;
        Point gm{0.0, 0.0};
        for (int j = 0; j < nm; ++j) {
            mv += m[off + j] * tab.psi[q][j];
            gm = gm + m[off + j] * geo.grad(tab.dpsi[q][j]);
        }
        Point hv{0.0, 0.0};
        double dv = 0.0;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            hv = hv + h[idx[j]] * tab.phi[q][j];
            dv += h[idx[j]] * tab.div[q][j];
        }
        hv = geo.piola(hv);
        dv /= geo.det;
        const double w = tab.rule->weights[q] * std::abs(geo.det);
        const Point c = hv + d.apply(gm);
        res.r1 += w * dot(c, c);
        const double b = sigma * mv + dv - g[q];
        res.r2 += w * b * b;
    }
    res.r1 = std::sqrt(res.r1);
    res.r2 = std::sqrt(res.r2);
    return res;
}

/// Reference coordinates in element elements[side] of the point at canonical parameter u on
/// edge e.
inline Point edge_reference_point(const Mesh& mesh, int e, int side, double u) {
    const auto& ed = mesh.edge(e);
    const int k = ed.elements[side], i = ed.local_index[side];
    const bool agrees = mesh.element(k).signs[i] > 0;
    return edge_point(i, agrees ? u : 1.0 - u);
}

/// eta_{e,J} = |e|^{-1/2} ||[m]||_e on an interior edge.
inline double jump_error(const Mesh& mesh, const DofMap& dofs, int e, const Vector& m) {
    const auto& ed = mesh.edge(e);
    RDMIX_REQUIRE(!ed.is_boundary(), Error, "jump_error: edge " + std::to_string(e) + " is a boundary edge");
    const int k0 = ed.elements[0], k1 = ed.elements[1];
    const int deg = std::min(2 * std::max(dofs.mass_order(k0), dofs.mass_order(k1)) + 2, kMaxQuadratureDegree);
    const auto& rule = quadrature_rule(QuadDomain::Segment, deg);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double u = rule.points[q].x;
        const double j = eval_mass(dofs, m, k0, edge_reference_point(mesh, e, 0, u)) -
                         eval_mass(dofs, m, k1, edge_reference_point(mesh, e, 1, u));
        s += rule.weights[q] * j * j;
    }
    // |e|^{-1/2} (|e| sum w j^2)^{1/2}
    return std::sqrt(s);
}

/// Local and global totals from the components.
inline ErrorField aggregate(const Mesh& mesh, std::vector<double> r1, std::vector<double> r2,
                            std::vector<double> jump) {
    RDMIX_REQUIRE(static_cast<int>(r1.size()) == mesh.num_elements() &&
                      static_cast<int>(r2.size()) == mesh.num_elements() &&
                      static_cast<int>(jump.size()) == mesh.num_edges(),
                  Error, "aggregate: component sizes do not match the mesh");
    ErrorField f;
    f.r1 = std::move(r1);
    f.r2 = std::move(r2);
    f.jump = std::move(jump);
    f.eta.assign(f.r1.size(), 0.0);
    double g2 = 0.0;
    for (int k = 0; k < mesh.num_elements(); ++k) {
        double s = f.r1[k] * f.r1[k] + f.r2[k] * f.r2[k];
        g2 += s;
        for (int e : mesh.element(k).edges) s += f.jump[e] * f.jump[e];
        f.eta[k] = std::sqrt(s);
    }
    for (int e = 0; e < mesh.num_edges(); ++e) g2 += f.jump[e] * f.jump[e];
    f.global = std::sqrt(g2);
    f.max = f.eta.empty() ? 0.0 : *std::max_element(f.eta.begin(), f.eta.end());
    return f;
}

/// Estimator for one species.
inline ErrorField estimate(const Mesh& mesh, const DofMap& dofs, const Vector& m, const Vector& h,
                           const QuadField& g, double sigma, const DiffusivityField& d) {
    std::vector<double> r1(static_cast<std::size_t>(mesh.num_elements())), r2(r1.size());
    std::vector<double> jump(static_cast<std::size_t>(mesh.num_edges()), 0.0);
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const auto r = element_residuals(mesh, dofs, k, m, h, g.values[k], sigma, d.at(mesh.element(k).region));
        r1[k] = r.r1;
        r2[k] = r.r2;
    }
    for (int e = 0; e < mesh.num_edges(); ++e)
        if (!mesh.edge(e).is_boundary()) jump[e] = jump_error(mesh, dofs, e, m);
    return aggregate(mesh, std::move(r1), std::move(r2), std::move(jump));
}

/// Species estimators combined by summing squared components.
inline ErrorField combine(const Mesh& mesh, const std::vector<ErrorField>& fields) {
    RDMIX_REQUIRE(!fields.empty(), Error, "combine: no estimator fields");
    std::vector<double> r1(fields[0].r1.size(), 0.0), r2(r1.size(), 0.0), jump(fields[0].jump.size(), 0.0);
    for (const auto& f : fields) {
        for (std::size_t k = 0; k < r1.size(); ++k) {
            r1[k] += f.r1[k] * f.r1[k];
            r2[k] += f.r2[k] * f.r2[k];
        }
        for (std::size_t e = 0; e < jump.size(); ++e) jump[e] += f.jump[e] * f.jump[e];
    }
    for (auto& x : r1) x = std::sqrt(x);
    for (auto& x : r2) x = std::sqrt(x);
    for (auto& x : jump) x = std::sqrt(x);
    return aggregate(mesh, std::move(r1), std::move(r2), std::move(jump));
}

struct AdaptParams {
    double theta_min = 0.02;
    double theta_max = 0.8;
    int order_min = 1;
    int order_max = kOrderMax;
    int cadence = 5;

    void validate() const {
        RDMIX_REQUIRE(theta_min >= 0.0 && theta_min < theta_max && theta_max <= 1.0, Error,
                      "adapt: require 0 <= theta_min < theta_max <= 1");
        RDMIX_REQUIRE(order_min >= 0 && order_min <= order_max && order_max <= kOrderMax, Error,
                      "adapt: order bounds outside [0, " + std::to_string(kOrderMax) + "]");
        RDMIX_REQUIRE(cadence >= 1, Error, "adapt: cadence must be >= 1");
    }
};

/// Stage 1: mark and raise/lower by one relative to eta_MAX.
inline std::vector<int> mark_orders(const ErrorField& err, const AdaptParams& params, std::vector<int> order) {
    if (!(err.max > 0.0)) return order;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (err.eta[k] >= params.theta_max * err.max) {
            if (order[k] < params.order_max) ++order[k];
        } else if (err.eta[k] <= params.theta_min * err.max) {
            order[k] = std::max(order[k] - 1, params.order_min);
        }
    }
    return order;
}

/// Stage 2: neighbours may differ by at most one; the lower is raised to (higher - 1),
/// repeated until nothing changes.
inline void smooth_orders(const Mesh& mesh, std::vector<int>& order) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (int e = 0; e < mesh.num_edges(); ++e) {
            const auto& ed = mesh.edge(e);
            if (ed.is_boundary()) continue;
            int& a = order[ed.elements[0]];
            int& b = order[ed.elements[1]];
            if (a < b - 1) {
                a = b - 1;
                changed = true;
            } else if (b < a - 1) {
                b = a - 1;
                changed = true;
            }
        }
    }
}

/// Three-stage p-adaptation: marking, smoothing, interface orders (maximum rule).
inline OrderMap adapt_orders(const ErrorField& err, const AdaptParams& params, const OrderMap& orders,
                             const Mesh& mesh) {
    params.validate();
    RDMIX_REQUIRE(static_cast<int>(err.eta.size()) == mesh.num_elements() &&
                      static_cast<int>(orders.element.size()) == mesh.num_elements(),
                  Error, "adapt_orders: estimator or orders do not match the mesh");
    OrderMap out;
    out.element = mark_orders(err, params, orders.element);
    smooth_orders(mesh, out.element);
    out.apply_edge_max_rule(mesh);
    return out;
}

/// Largest order difference across interior edges.
inline int max_neighbour_gap(const Mesh& mesh, const OrderMap& orders) {
    int gap = 0;
    for (const auto& ed : mesh.edges())
        if (!ed.is_boundary())
            gap = std::max(gap, std::abs(orders.element[ed.elements[0]] - orders.element[ed.elements[1]]));
    return gap;
}

/// True when every edge order is the maximum of its neighbours' flux orders.
inline bool edge_orders_follow_max_rule(const Mesh& mesh, const OrderMap& orders) {
    OrderMap expected = orders;
    expected.apply_edge_max_rule(mesh);
    return expected.edge == orders.edge;
}

} // namespace rdmix
