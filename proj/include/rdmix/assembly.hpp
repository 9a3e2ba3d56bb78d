#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "rdmix/basis.hpp"
#include "rdmix/dofs.hpp"
#include "rdmix/error.hpp"
#include "rdmix/linalg.hpp"
#include "rdmix/mesh.hpp"
#include "rdmix/quadrature.hpp"
#include "rdmix/sparse.hpp"

namespace rdmix {

using SpaceTimeFn = std::function<double(Point, double)>;

/// Symmetric 2x2 tensor.
struct Tensor2 {
    double xx = 1.0, xy = 0.0, yy = 1.0;

    static Tensor2 isotropic(double d) { return {d, 0.0, d}; }

    double det() const { return xx * yy - xy * xy; }
    bool is_spd() const { return xx > 0.0 && det() > 0.0 && std::isfinite(det()); }
    Tensor2 inverse() const {
        const double d = det();
        RDMIX_REQUIRE(d != 0.0 && std::isfinite(d), Error, "diffusivity tensor is singular");
        return {yy / d, -xy / d, xx / d};
    }
    Point apply(Point v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
    Tensor2 scaled(double s) const { return {s * xx, s * xy, s * yy}; }
    bool operator==(const Tensor2&) const = default;
};

/// Region tag to diffusivity tensor. Regions without an entry use the default.
class DiffusivityField {
public:
    DiffusivityField() = default;
    explicit DiffusivityField(Tensor2 fallback) : fallback_(fallback) { check(fallback_, "default"); }

    void set(int region, Tensor2 d) {
        check(d, "region " + std::to_string(region));
        by_region_[region] = d;
    }
    void set_default(Tensor2 d) {
        check(d, "default");
        fallback_ = d;
    }
    const Tensor2& at(int region) const {
        const auto it = by_region_.find(region);
        return it == by_region_.end() ? fallback_ : it->second;
    }
    DiffusivityField scaled(double s) const {
        DiffusivityField out(fallback_.scaled(s));
        for (const auto& [r, d] : by_region_) out.by_region_[r] = d.scaled(s);
        return out;
    }
    bool operator==(const DiffusivityField&) const = default;

private:
    static void check(const Tensor2& d, const std::string& where) {
        RDMIX_REQUIRE(d.is_spd(), Error, "diffusivity for " + where + " is not symmetric positive definite");
    }

    Tensor2 fallback_;
    std::map<int, Tensor2> by_region_;
};

// ---------------------------------------------------------------------------------------
// Reference tabulation cache
// ---------------------------------------------------------------------------------------

/// Reference-element basis values at the points of one quadrature rule.
struct ReferenceTab {
    const QuadratureRule* rule = nullptr;
    int n_mass = 0;
    int n_flux = 0;
    std::vector<std::vector<double>> psi;   // [qp][mass fn]
    std::vector<std::vector<Point>> dpsi;   // reference gradients
    std::vector<std::vector<Point>> phi;    // reference flux values
    std::vector<std::vector<double>> div;   // reference divergences
};

/// Quadrature degree used on an element: 2 (highest flux degree) + 2.
inline int element_quadrature_degree(const HdivLayout& lay) {
    return std::min(2 * lay.max_degree() + 2, kMaxQuadratureDegree);
}

/// Degree of the rule carrying pointwise fields (kinetics, internal states) on an element of
/// mass order k.
inline int field_quadrature_degree(int k) { return std::min(2 * k + 4, kMaxQuadratureDegree); }

inline const ReferenceTab& reference_tab(int mass_order, const HdivLayout& lay, int degree) {
    using Key = std::tuple<int, int, int, int, int, int, int, int, int>;
    static std::mutex mutex;
    static std::map<Key, ReferenceTab> cache;
    const Key key{mass_order, lay.order, lay.edge_order[0], lay.edge_order[1], lay.edge_order[2],
                  lay.flipped[0], lay.flipped[1], lay.flipped[2], degree};
    std::lock_guard lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    ReferenceTab tab;
    tab.rule = &quadrature_rule(QuadDomain::Triangle, degree);
    const std::size_t nq = tab.rule->size();
    tab.psi.resize(nq);
    tab.dpsi.resize(nq);
    tab.phi.resize(nq);
    tab.div.resize(nq);
    for (std::size_t q = 0; q < nq; ++q) {
        l2_basis(mass_order, tab.rule->points[q], tab.psi[q], &tab.dpsi[q]);
        hdiv_reference(lay, tab.rule->points[q], tab.phi[q], tab.div[q]);
    }
    tab.n_mass = dim_p(mass_order);
    tab.n_flux = lay.size();
    return cache.emplace(key, std::move(tab)).first->second;
}

// ---------------------------------------------------------------------------------------
// Element and global matrices
// ---------------------------------------------------------------------------------------

struct ElementMatrices {
    Eigen::MatrixXd K, B, M;
    std::vector<int> flux_dofs, mass_dofs;
};

inline ElementMatrices element_matrices(const Mesh& mesh, const DofMap& dofs, int k, const Tensor2& d) {
    RDMIX_REQUIRE(d.is_spd(), Error, "element_matrices: diffusivity is not symmetric positive definite");
    const Tensor2 dinv = d.inverse();
    const auto& lay = dofs.layout(k);
    const auto geo = ElementGeometry::of(mesh, k);
    const auto& tab = reference_tab(dofs.mass_order(k), lay, element_quadrature_degree(lay));
    const int nf = tab.n_flux, nm = tab.n_mass;
    ElementMatrices em;
    em.K = Eigen::MatrixXd::Zero(nf, nf);
    em.B = Eigen::MatrixXd::Zero(nf, nm);
    em.M = Eigen::MatrixXd::Zero(nm, nm);
    std::vector<Point> phys(static_cast<std::size_t>(nf)), dphys(static_cast<std::size_t>(nf));
    for (std::size_t q = 0; q < tab.rule->size(); ++q) {
        const double w = tab.rule->weights[q] * std::abs(geo.det);
        for (int i = 0; i < nf; ++i) {
            phys[i] = geo.piola(tab.phi[q][i]);
            dphys[i] = dinv.apply(phys[i]);
        }
        for (int i = 0; i < nf; ++i)
            for (int j = i; j < nf; ++j) em.K(i, j) += w * dot(phys[i], dphys[j]);
        for (int i = 0; i < nf; ++i) {
            const double dv = tab.div[q][i] / geo.det;
            for (int l = 0; l < nm; ++l) em.B(i, l) -= w * dv * tab.psi[q][l];
        }
        for (int a = 0; a < nm; ++a)
            for (int b = a; b < nm; ++b) em.M(a, b) += w * tab.psi[q][a] * tab.psi[q][b];
    }
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < i; ++j) em.K(i, j) = em.K(j, i);
    for (int a = 0; a < nm; ++a)
        for (int b = 0; b < a; ++b) em.M(a, b) = em.M(b, a);
    em.flux_dofs = dofs.element_flux_dofs(k);
    em.mass_dofs.resize(static_cast<std::size_t>(nm));
    for (int l = 0; l < nm; ++l) em.mass_dofs[l] = dofs.mass_offset(k) + l;
    return em;
}

struct GlobalMatrices {
    SparseMatrix K, B, M;
    std::vector<int> mass_blocks;
};

inline std::vector<int> mass_block_offsets(const DofMap& dofs, int num_elements) {
    std::vector<int> blocks(static_cast<std::size_t>(num_elements) + 1);
    for (int k = 0; k < num_elements; ++k) blocks[k] = dofs.mass_offset(k);
    blocks.back() = dofs.num_mass();
    return blocks;
}

inline GlobalMatrices assemble_global(const Mesh& mesh, const DofMap& dofs, const DiffusivityField& d) {
    std::vector<Triplet> tk, tb, tm;
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const auto em = element_matrices(mesh, dofs, k, d.at(mesh.element(k).region));
        const auto nf = em.flux_dofs.size(), nm = em.mass_dofs.size();
        for (std::size_t i = 0; i < nf; ++i) {
            RDMIX_REQUIRE(em.flux_dofs[i] >= 0 && em.flux_dofs[i] < dofs.num_flux(), Error,
                          "assemble_global: flux dof index out of range");
            for (std::size_t j = 0; j < nf; ++j)
                tk.push_back({em.flux_dofs[i], em.flux_dofs[j], em.K(static_cast<Eigen::Index>(i),
                                                                      static_cast<Eigen::Index>(j))});
            for (std::size_t l = 0; l < nm; ++l)
                tb.push_back({em.flux_dofs[i], em.mass_dofs[l],
                              em.B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l))});
        }
        for (std::size_t a = 0; a < nm; ++a)
            for (std::size_t b = 0; b < nm; ++b)
                tm.push_back({em.mass_dofs[a], em.mass_dofs[b],
                              em.M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))});
    }
    GlobalMatrices g;
    g.K = SparseMatrix::from_triplets(dofs.num_flux(), dofs.num_flux(), std::move(tk));
    g.B = SparseMatrix::from_triplets(dofs.num_flux(), dofs.num_mass(), std::move(tb));
    g.M = SparseMatrix::from_triplets(dofs.num_mass(), dofs.num_mass(), std::move(tm));
    g.mass_blocks = mass_block_offsets(dofs, mesh.num_elements());
    return g;
}

// ---------------------------------------------------------------------------------------
// Boundary conditions
// ---------------------------------------------------------------------------------------

/// Boundary data by edge tag. `natural` prescribes the concentration m on Gamma_N,
/// `essential` the inward normal flux hbar = -h.n on Gamma_E. Boundary edges whose tag is in
/// neither map carry hbar = 0.
struct BoundaryConditions {
    std::map<int, SpaceTimeFn> natural;
    std::map<int, SpaceTimeFn> essential;

    bool is_natural(int tag) const { return natural.count(tag) > 0; }
};

/// Normal traces of the functions of local edge i at a point of that edge: tau_j . n for the
/// edge's own functions (the remaining functions vanish there).
inline void edge_normal_traces(const Mesh& mesh, const DofMap& dofs, int k, int i, double s,
                               std::vector<double>& traces, Point& x) {
    const auto& lay = dofs.layout(k);
    const auto geo = ElementGeometry::of(mesh, k);
    const Point r = edge_point(i, s);
    std::vector<Point> v;
    std::vector<double> dv;
    hdiv_basis(lay, geo, r, v, dv);
    const Point n = mesh.outward_normal(k, i);
    int first = 0;
    for (int j = 0; j < i; ++j) first += lay.num_edge_functions(j);
    traces.resize(static_cast<std::size_t>(lay.num_edge_functions(i)));
    for (int j = 0; j < lay.num_edge_functions(i); ++j) traces[j] = dot(v[first + j], n);
    x = geo.map(r);
}

inline int edge_quadrature_degree(int q) { return std::min(2 * q + 4, kMaxQuadratureDegree); }

/// F_I = -(tau_I . n, mbar)_{Gamma_N}
inline Vector assemble_F(const Mesh& mesh, const DofMap& dofs, const BoundaryConditions& bc, double t) {
    Vector f(static_cast<std::size_t>(dofs.num_flux()), 0.0);
    std::vector<double> tr;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto& ed = mesh.edge(e);
        if (!ed.is_boundary() || !bc.is_natural(ed.tag)) continue;
        const auto& mbar = bc.natural.at(ed.tag);
        const int k = ed.elements[0], i = ed.local_index[0];
        const auto& rule = quadrature_rule(QuadDomain::Segment, edge_quadrature_degree(dofs.edge_count(e) - 1));
        const double len = mesh.edge_length(e);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            Point x;
            edge_normal_traces(mesh, dofs, k, i, rule.points[q].x, tr, x);
            const double val = mbar(x, t);
            for (std::size_t j = 0; j < tr.size(); ++j)
                f[dofs.edge_offset(e) + static_cast<int>(j)] -= rule.weights[q] * len * tr[j] * val;
        }
    }
    return f;
}

/// Prescribed flux dofs on Gamma_E.
struct EssentialBC {
    std::vector<int> dofs;
    std::vector<double> values;
};

/// L2 edge projection of the prescribed normal trace -hbar onto each Gamma_E edge's traces.
inline EssentialBC essential_flux_values(const Mesh& mesh, const DofMap& dofs, const BoundaryConditions& bc,
                                         double t) {
    for (const auto& [tag, fn] : bc.essential) {
        bool found = false;
        for (const auto& ed : mesh.edges()) found = found || (ed.is_boundary() && ed.tag == tag);
        RDMIX_REQUIRE(found, Error, "essential boundary tag " + std::to_string(tag) + " is absent from the mesh");
    }
    EssentialBC out;
    std::vector<double> tr;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto& ed = mesh.edge(e);
        if (!ed.is_boundary() || bc.is_natural(ed.tag)) continue;
        const int n = dofs.edge_count(e);
        const auto it = bc.essential.find(ed.tag);
        if (it == bc.essential.end()) {
            for (int j = 0; j < n; ++j) {
                out.dofs.push_back(dofs.edge_offset(e) + j);
                out.values.push_back(0.0);
            }
            continue;
        }
        const int k = ed.elements[0], i = ed.local_index[0];
        const auto& rule = quadrature_rule(QuadDomain::Segment, edge_quadrature_degree(n - 1));
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            Point x;
            edge_normal_traces(mesh, dofs, k, i, rule.points[q].x, tr, x);
            const double target = -it->second(x, t);
            for (int a = 0; a < n; ++a) {
                rhs(a) += rule.weights[q] * tr[a] * target;
                for (int b = 0; b < n; ++b) gram(a, b) += rule.weights[q] * tr[a] * tr[b];
            }
        }
        const Eigen::VectorXd c = gram.ldlt().solve(rhs);
        for (int j = 0; j < n; ++j) {
            out.dofs.push_back(dofs.edge_offset(e) + j);
            out.values.push_back(c(j));
        }
    }
    return out;
}

/// Constrained flux operators: rows/columns of prescribed dofs are replaced by the identity
/// in K and zeroed in B. The couplings needed to move prescribed values to the right-hand
/// side are kept so the same operators serve every time step.
struct ConstrainedOperators {
    SparseMatrix K, B;
    std::vector<char> constrained;
};

inline ConstrainedOperators constrain_operators(const SparseMatrix& k, const SparseMatrix& b,
                                                const std::vector<int>& dofs) {
    ConstrainedOperators c;
    c.constrained.assign(static_cast<std::size_t>(k.rows()), 0);
    for (int d : dofs) c.constrained[d] = 1;
    std::vector<Triplet> tk, tb;
    for (const auto& t : k.triplets())
        if (!c.constrained[t.row] && !c.constrained[t.col]) tk.push_back(t);
    for (int d : dofs) tk.push_back({d, d, 1.0});
    for (const auto& t : b.triplets())
        if (!c.constrained[t.row]) tb.push_back(t);
    c.K = SparseMatrix::from_triplets(k.rows(), k.cols(), std::move(tk));
    c.B = SparseMatrix::from_triplets(b.rows(), b.cols(), std::move(tb));
    return c;
}

/// Moves the prescribed values to the right-hand sides: F_free -= K_fc H_c, F_c = H_c,
/// G -= B_c^T H_c. K and B are the unconstrained operators.
inline void lift_essential(const SparseMatrix& k, const SparseMatrix& b, const EssentialBC& bc, Vector& f,
                           Vector& g) {
    Vector hc(static_cast<std::size_t>(k.rows()), 0.0);
    bool any = false;
    for (std::size_t j = 0; j < bc.dofs.size(); ++j) {
        hc[bc.dofs[j]] = bc.values[j];
        any = any || bc.values[j] != 0.0;
    }
    if (any) {
        const Vector khc = k.multiply(hc);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] -= khc[i];
        const Vector bhc = b.multiply_transpose(hc);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= bhc[i];
    }
    for (std::size_t j = 0; j < bc.dofs.size(); ++j) f[bc.dofs[j]] = bc.values[j];
}

/// Symmetric elimination of prescribed flux dofs in a block system.
inline void apply_essential_flux_bc(BlockSystem& sys, const EssentialBC& bc) {
    lift_essential(sys.K, sys.B, bc, sys.F, sys.G);
    auto c = constrain_operators(sys.K, sys.B, bc.dofs);
    sys.K = std::move(c.K);
    sys.B = std::move(c.B);
}

// ---------------------------------------------------------------------------------------
// Pointwise fields and load vectors
// ---------------------------------------------------------------------------------------

/// Values at the points of each element's field rule (degree field_quadrature_degree(k)).
struct QuadField {
    std::vector<int> degree;                  // per element
    std::vector<std::vector<double>> values;  // per element, per point
};

inline QuadField make_quad_field(const Mesh& mesh, const DofMap& dofs, double value = 0.0) {
    QuadField f;
    f.degree.resize(static_cast<std::size_t>(mesh.num_elements()));
    f.values.resize(static_cast<std::size_t>(mesh.num_elements()));
    for (int k = 0; k < mesh.num_elements(); ++k) {
        f.degree[k] = field_quadrature_degree(dofs.mass_order(k));
        f.values[k].assign(quadrature_rule(QuadDomain::Triangle, f.degree[k]).size(), value);
    }
    return f;
}

/// Cached scalar basis values (with reference gradients) at the points of a triangle rule.
struct MassTab {
    const QuadratureRule* rule = nullptr;
    std::vector<std::vector<double>> psi;
    std::vector<std::vector<Point>> dpsi;
};

inline const MassTab& mass_tab(int order, int degree) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, MassTab> cache;
    std::lock_guard lock(mutex);
    auto it = cache.find({order, degree});
    if (it != cache.end()) return it->second;
    MassTab tab;
    tab.rule = &quadrature_rule(QuadDomain::Triangle, degree);
    tab.psi.resize(tab.rule->size());
    tab.dpsi.resize(tab.rule->size());
    for (std::size_t q = 0; q < tab.rule->size(); ++q) l2_basis(order, tab.rule->points[q], tab.psi[q], &tab.dpsi[q]);
    return cache.emplace(std::make_pair(order, degree), std::move(tab)).first->second;
}

/// Mass-field values at the points of a triangle rule on element k.
inline std::vector<double> mass_at_field_points(const DofMap& dofs, const Vector& m, int k, int degree) {
    const auto& tab = mass_tab(dofs.mass_order(k), degree);
    std::vector<double> out(tab.rule->size(), 0.0);
    const int off = dofs.mass_offset(k), n = dofs.mass_count(k);
    for (std::size_t q = 0; q < out.size(); ++q) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += m[off + j] * tab.psi[q][j];
        out[q] = s;
    }
    return out;
}

/// l(v_K) = (f, v_K) for a field given at the field rule points.
inline Vector load_vector(const Mesh& mesh, const DofMap& dofs, const QuadField& f) {
    Vector out(static_cast<std::size_t>(dofs.num_mass()), 0.0);
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const auto& tab = mass_tab(dofs.mass_order(k), f.degree[k]);
        const double det = std::abs(ElementGeometry::of(mesh, k).det);
        const int off = dofs.mass_offset(k), n = dofs.mass_count(k);
        for (std::size_t q = 0; q < tab.rule->size(); ++q) {
            const double w = tab.rule->weights[q] * det * f.values[k][q];
            for (int j = 0; j < n; ++j) out[off + j] += w * tab.psi[q][j];
        }
    }
    return out;
}

/// Re-samples a pointwise field on new field rules: per element, L2 projection onto
/// P_{k+1} (k the old mass order) followed by evaluation at the new points.
inline QuadField requadrature(const Mesh& mesh, const DofMap& from, const QuadField& f, const DofMap& to) {
    QuadField out = make_quad_field(mesh, to);
    std::vector<double> psi;
    for (int k = 0; k < mesh.num_elements(); ++k) {
        if (out.degree[k] == f.degree[k]) {
            out.values[k] = f.values[k];
            continue;
        }
        const int p = std::min(from.mass_order(k) + 1, kOrderMax);
        const int n = dim_p(p);
        const auto& rule = quadrature_rule(QuadDomain::Triangle, f.degree[k]);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            l2_basis(p, rule.points[q], psi, nullptr);
            for (int a = 0; a < n; ++a) {
                rhs(a) += rule.weights[q] * psi[a] * f.values[k][q];
                for (int b = 0; b < n; ++b) gram(a, b) += rule.weights[q] * psi[a] * psi[b];
            }
        }
        const Eigen::VectorXd c = gram.ldlt().solve(rhs);
        const auto& nr = quadrature_rule(QuadDomain::Triangle, out.degree[k]);
        for (std::size_t q = 0; q < nr.size(); ++q) {
            l2_basis(p, nr.points[q], psi, nullptr);
            double s = 0.0;
            for (int a = 0; a < n; ++a) s += c(a) * psi[a];
            out.values[k][q] = s;
        }
    }
    return out;
}

/// L2 projection of a function onto the mass space (element by element).
inline Vector project_mass(const Mesh& mesh, const DofMap& dofs, const std::function<double(Point)>& fn) {
    Vector out(static_cast<std::size_t>(dofs.num_mass()), 0.0);
    std::vector<double> psi;
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const int n = dofs.mass_count(k), off = dofs.mass_offset(k);
        const auto& rule = quadrature_rule(QuadDomain::Triangle, field_quadrature_degree(dofs.mass_order(k)));
        const auto geo = ElementGeometry::of(mesh, k);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            l2_basis(dofs.mass_order(k), rule.points[q], psi, nullptr);
            const double v = fn(geo.map(rule.points[q]));
            for (int a = 0; a < n; ++a) {
                rhs(a) += rule.weights[q] * psi[a] * v;
                for (int b = 0; b < n; ++b) gram(a, b) += rule.weights[q] * psi[a] * psi[b];
            }
        }
        const Eigen::VectorXd c = gram.ldlt().solve(rhs);
        for (int a = 0; a < n; ++a) out[off + a] = c(a);
    }
    return out;
}

// ---------------------------------------------------------------------------------------
// Point evaluation
// ---------------------------------------------------------------------------------------

inline double eval_mass(const DofMap& dofs, const Vector& m, int k, Point ref) {
    std::vector<double> psi;
    l2_basis(dofs.mass_order(k), ref, psi, nullptr);
    double s = 0.0;
    for (int j = 0; j < dofs.mass_count(k); ++j) s += m[dofs.mass_offset(k) + j] * psi[j];
    return s;
}

inline Point eval_mass_grad(const Mesh& mesh, const DofMap& dofs, const Vector& m, int k, Point ref) {
    std::vector<double> psi;
    std::vector<Point> dpsi;
    l2_basis(dofs.mass_order(k), ref, psi, &dpsi);
    const auto geo = ElementGeometry::of(mesh, k);
    Point g{0.0, 0.0};
    for (int j = 0; j < dofs.mass_count(k); ++j) g = g + m[dofs.mass_offset(k) + j] * geo.grad(dpsi[j]);
    return g;
}

inline Point eval_flux(const Mesh& mesh, const DofMap& dofs, const Vector& h, int k, Point ref,
                       double* div = nullptr) {
    std::vector<Point> v;
    std::vector<double> dv;
    hdiv_basis(dofs.layout(k), ElementGeometry::of(mesh, k), ref, v, dv);
    const auto idx = dofs.element_flux_dofs(k);
    Point s{0.0, 0.0};
    double d = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        s = s + h[idx[j]] * v[j];
        d += h[idx[j]] * dv[j];
    }
    if (div) *div = d;
    return s;
}

} // namespace rdmix
