#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "rdmix/basis.hpp"
#include "rdmix/error.hpp"
#include "rdmix/mesh.hpp"

namespace rdmix {

/// Polynomial orders per mesh entity. `element` holds the mass order k of each element
/// (its flux order is k + 1); `edge` holds the flux order of each edge.
struct OrderMap {
    std::vector<int> element;
    std::vector<int> edge;

    static OrderMap uniform(const Mesh& mesh, int k) {
        OrderMap o;
        o.element.assign(static_cast<std::size_t>(mesh.num_elements()), k);
        o.edge.assign(static_cast<std::size_t>(mesh.num_edges()), k + 1);
        return o;
    }

    int flux_order(int k) const { return element[k] + 1; }

    /// Edge orders from the maximum rule: each edge takes the largest flux order of its
    /// neighbours.
    void apply_edge_max_rule(const Mesh& mesh) {
        edge.assign(static_cast<std::size_t>(mesh.num_edges()), 0);
        for (int e = 0; e < mesh.num_edges(); ++e) {
            const auto& ed = mesh.edge(e);
            int q = flux_order(ed.elements[0]);
            if (!ed.is_boundary()) q = std::max(q, flux_order(ed.elements[1]));
            edge[e] = q;
        }
    }

    bool operator==(const OrderMap&) const = default;
};

inline void validate_orders(const Mesh& mesh, const OrderMap& orders, int order_min = 0,
                            int order_max = kOrderMax) {
    RDMIX_REQUIRE(static_cast<int>(orders.element.size()) == mesh.num_elements() &&
                      static_cast<int>(orders.edge.size()) == mesh.num_edges(),
                  Error, "order map does not match the mesh");
    for (int k = 0; k < mesh.num_elements(); ++k)
        RDMIX_REQUIRE(orders.element[k] >= order_min && orders.element[k] <= order_max, Error,
                      "order map: element " + std::to_string(k) + " order " +
                          std::to_string(orders.element[k]) + " outside [" +
                          std::to_string(order_min) + ", " + std::to_string(order_max) + "]");
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto& ed = mesh.edge(e);
        for (int s = 0; s < 2; ++s) {
            if (ed.elements[s] < 0) continue;
            RDMIX_REQUIRE(orders.edge[e] >= orders.flux_order(ed.elements[s]), Error,
                          "order map: edge " + std::to_string(e) +
                              " order below the flux order of an adjacent element");
        }
        RDMIX_REQUIRE(orders.edge[e] <= kOrderMax + 1, Error,
                      "order map: edge " + std::to_string(e) + " order above the supported cap");
    }
}

/// Global numbering. Flux dofs: every edge's hierarchical levels (edge index, then level),
/// followed by every element's interior functions. Mass dofs: element by element.
class DofMap {
public:
    DofMap() = default;

    DofMap(const Mesh& mesh, const OrderMap& orders) : orders_(orders) {
        validate_orders(mesh, orders);
        const int ne = mesh.num_edges();
        const int nk = mesh.num_elements();
        edge_offset_.resize(static_cast<std::size_t>(ne));
        interior_offset_.resize(static_cast<std::size_t>(nk));
        mass_offset_.resize(static_cast<std::size_t>(nk));
        int off = 0;
        for (int e = 0; e < ne; ++e) {
            edge_offset_[e] = off;
            off += orders.edge[e] + 1;
        }
        for (int k = 0; k < nk; ++k) {
            interior_offset_[k] = off;
            off += dim_interior(orders.flux_order(k));
        }
        n_flux_ = off;
        off = 0;
        for (int k = 0; k < nk; ++k) {
            mass_offset_[k] = off;
            off += dim_p(orders.element[k]);
        }
        n_mass_ = off;
        layouts_.resize(static_cast<std::size_t>(nk));
        for (int k = 0; k < nk; ++k) {
            const auto& el = mesh.element(k);
            layouts_[k] = make_layout(mesh, k, orders.flux_order(k),
                                      {orders.edge[el.edges[0]], orders.edge[el.edges[1]],
                                       orders.edge[el.edges[2]]});
        }
        element_edges_.resize(static_cast<std::size_t>(nk));
        for (int k = 0; k < nk; ++k) element_edges_[k] = mesh.element(k).edges;
    }

    int num_flux() const { return n_flux_; }
    int num_mass() const { return n_mass_; }
    const OrderMap& orders() const { return orders_; }

    int edge_offset(int e) const { return edge_offset_[e]; }
    int edge_count(int e) const { return orders_.edge[e] + 1; }
    int interior_offset(int k) const { return interior_offset_[k]; }
    int interior_count(int k) const { return dim_interior(orders_.flux_order(k)); }
    int mass_offset(int k) const { return mass_offset_[k]; }
    int mass_count(int k) const { return dim_p(orders_.element[k]); }
    int mass_order(int k) const { return orders_.element[k]; }
    const HdivLayout& layout(int k) const { return layouts_[k]; }

    /// Global flux dofs of element k in local basis order.
    std::vector<int> element_flux_dofs(int k) const {
        std::vector<int> dofs;
        dofs.reserve(static_cast<std::size_t>(layouts_[k].size()));
        for (int i = 0; i < 3; ++i) {
            const int e = element_edges_[k][i];
            for (int j = 0; j < edge_count(e); ++j) dofs.push_back(edge_offset_[e] + j);
        }
        for (int j = 0; j < interior_count(k); ++j) dofs.push_back(interior_offset_[k] + j);
        return dofs;
    }

private:
    OrderMap orders_;
    int n_flux_ = 0;
    int n_mass_ = 0;
    std::vector<int> edge_offset_, interior_offset_, mass_offset_;
    std::vector<HdivLayout> layouts_;
    std::vector<std::array<int, 3>> element_edges_;
};

inline DofMap build_dof_map(const Mesh& mesh, const OrderMap& orders) { return DofMap(mesh, orders); }

/// Re-expresses flux coefficients in a new layout: hierarchical levels present in both are
/// copied, new levels start at zero, dropped levels are truncated.
inline std::vector<double> transfer_flux(const DofMap& from, const DofMap& to,
                                         const std::vector<double>& coeffs) {
    RDMIX_REQUIRE(static_cast<int>(coeffs.size()) == from.num_flux(), Error,
                  "transfer_flux: coefficient vector does not match the source layout");
    RDMIX_REQUIRE(from.orders().edge.size() == to.orders().edge.size() &&
                      from.orders().element.size() == to.orders().element.size(),
                  Error, "transfer_flux: layouts belong to different meshes");
    std::vector<double> out(static_cast<std::size_t>(to.num_flux()), 0.0);
    for (std::size_t e = 0; e < from.orders().edge.size(); ++e) {
        const int n = std::min(from.edge_count(static_cast<int>(e)), to.edge_count(static_cast<int>(e)));
        for (int j = 0; j < n; ++j)
            out[to.edge_offset(static_cast<int>(e)) + j] = coeffs[from.edge_offset(static_cast<int>(e)) + j];
    }
    for (std::size_t k = 0; k < from.orders().element.size(); ++k) {
        const int kk = static_cast<int>(k);
        const int n = std::min(from.interior_count(kk), to.interior_count(kk));
        for (int j = 0; j < n; ++j) out[to.interior_offset(kk) + j] = coeffs[from.interior_offset(kk) + j];
    }
    return out;
}

/// Mass coefficients: the basis is orthogonal, so truncation is the L2 projection.
inline std::vector<double> transfer_mass(const DofMap& from, const DofMap& to,
                                         const std::vector<double>& coeffs) {
    RDMIX_REQUIRE(static_cast<int>(coeffs.size()) == from.num_mass(), Error,
                  "transfer_mass: coefficient vector does not match the source layout");
    RDMIX_REQUIRE(from.orders().element.size() == to.orders().element.size(), Error,
                  "transfer_mass: layouts belong to different meshes");
    std::vector<double> out(static_cast<std::size_t>(to.num_mass()), 0.0);
    for (std::size_t k = 0; k < from.orders().element.size(); ++k) {
        const int kk = static_cast<int>(k);
        const int n = std::min(from.mass_count(kk), to.mass_count(kk));
        for (int j = 0; j < n; ++j) out[to.mass_offset(kk) + j] = coeffs[from.mass_offset(kk) + j];
    }
    return out;
}

} // namespace rdmix
