#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "rdmix/assembly.hpp"
#include "rdmix/basis.hpp"
#include "rdmix/dofs.hpp"

using namespace rdmix;

namespace {

std::vector<Point> random_reference_points(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(0.02, 0.96);
    std::vector<Point> pts;
    while (static_cast<int>(pts.size()) < n) {
        const Point p{u(gen), u(gen)};
        if (p.x + p.y < 0.98) pts.push_back(p);
    }
    return pts;
}

Mesh skewed_triangle() { return Mesh::from_cells({{0.1, -0.2}, {1.3, 0.4}, {0.3, 0.9}}, {{0, 1, 2}}, {0}); }

HdivLayout layout_for(int p, std::array<int, 3> q, std::array<bool, 3> flipped = {false, false, false}) {
    HdivLayout lay;
    lay.order = p;
    lay.edge_order = q;
    lay.flipped = flipped;
    return lay;
}

}  // namespace

TEST(L2Basis, ConstantForOrderZero) {
    for (const Point p : random_reference_points(5, 1)) {
        const auto v = l2_basis(0, p);
        ASSERT_EQ(v.size(), 1u);
        EXPECT_DOUBLE_EQ(v[0], 1.0);
    }
}

TEST(L2Basis, DimensionCount) {
    for (int k = 0; k <= kOrderMax; ++k) EXPECT_EQ(static_cast<int>(l2_basis(k, {0.2, 0.3}).size()), (k + 1) * (k + 2) / 2);
}

TEST(L2Basis, OrthogonalAndSpansMonomials) {
    for (int k = 0; k <= 6; ++k) {
        const int n = dim_p(k);
        const auto& rule = quadrature_rule(QuadDomain::Triangle, 2 * k);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd phi(static_cast<int>(rule.size()), n);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const auto v = l2_basis(k, rule.points[q]);
            for (int i = 0; i < n; ++i) phi(static_cast<int>(q), i) = v[i];
        }
        Eigen::VectorXd w(static_cast<int>(rule.size()));
        for (std::size_t q = 0; q < rule.size(); ++q) w[static_cast<int>(q)] = rule.weights[q];
        gram = phi.transpose() * w.asDiagonal() * phi;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) {
                    EXPECT_NEAR(gram(i, j), 0.0, 1e-13) << "k=" << k;
                }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(gram);
        EXPECT_LT(svd.singularValues()(0) / svd.singularValues()(n - 1), 1e8);

        // least-squares fit of every monomial of degree <= k at random points
        const auto pts = random_reference_points(3 * n, 7);
        Eigen::MatrixXd a(static_cast<int>(pts.size()), n);
        for (std::size_t r = 0; r < pts.size(); ++r) {
            const auto v = l2_basis(k, pts[r]);
            for (int i = 0; i < n; ++i) a(static_cast<int>(r), i) = v[i];
        }
        for (int ea = 0; ea <= k; ++ea)
            for (int eb = 0; ea + eb <= k; ++eb) {
                Eigen::VectorXd y(static_cast<int>(pts.size()));
                for (std::size_t r = 0; r < pts.size(); ++r)
                    y[static_cast<int>(r)] = std::pow(pts[r].x, ea) * std::pow(pts[r].y, eb);
                const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
                EXPECT_LT((a * c - y).norm(), 1e-11) << "x^" << ea << " y^" << eb;
            }
    }
}

TEST(L2Basis, GradientsMatchDifferences) {
    for (int k = 1; k <= 5; ++k)
        for (const Point p : random_reference_points(4, 3)) {
            std::vector<double> v;
            std::vector<Point> g;
            l2_basis(k, p, v, &g);
            const double h = 1e-6;
            const auto xp = l2_basis(k, {p.x + h, p.y}), xm = l2_basis(k, {p.x - h, p.y});
            const auto yp = l2_basis(k, {p.x, p.y + h}), ym = l2_basis(k, {p.x, p.y - h});
            for (std::size_t i = 0; i < v.size(); ++i) {
                EXPECT_NEAR(g[i].x, (xp[i] - xm[i]) / (2 * h), 1e-6 * (1 + std::abs(g[i].x)));
                EXPECT_NEAR(g[i].y, (yp[i] - ym[i]) / (2 * h), 1e-6 * (1 + std::abs(g[i].y)));
            }
        }
}

TEST(HdivBasis, LowestEdgeFunctionTraces) {
    const auto lay = layout_for(1, {1, 1, 1});
    std::vector<Point> v;
    std::vector<double> d;
    // reference outward normals times edge length: edge 0 hypotenuse, edge 1 x = 0, edge 2 y = 0
    const std::array<Point, 3> scaled_normal{Point{1.0, 1.0}, Point{-1.0, 0.0}, Point{0.0, -1.0}};
    for (int i = 0; i < 3; ++i) {
        std::vector<double> trace;
        for (double s : {0.0, 0.25, 0.5, 0.9, 1.0}) {
            hdiv_reference(lay, edge_point(i, s), v, d);
            trace.push_back(dot(v[0], scaled_normal[i]));
        }
        const double expected_const = i == 0 ? trace.front() : 0.0;
        for (double t : trace) EXPECT_NEAR(t, expected_const, 1e-14);
        if (i == 0) {
            EXPECT_GT(std::abs(trace.front()), 0.1);
        }
    }
}

TEST(HdivBasis, SpansFullVectorPolynomialSpace) {
    for (int p = 1; p <= kOrderMax; ++p) {
        const auto lay = layout_for(p, {p, p, p});
        ASSERT_EQ(lay.size(), dim_vector_p(p));
        const auto pts = random_reference_points(2 * lay.size(), 11);
        const int rows = 2 * static_cast<int>(pts.size());
        Eigen::MatrixXd a(rows, lay.size());
        std::vector<Point> v;
        std::vector<double> d;
        for (std::size_t r = 0; r < pts.size(); ++r) {
            hdiv_reference(lay, pts[r], v, d);
            for (int j = 0; j < lay.size(); ++j) {
                a(2 * static_cast<int>(r), j) = v[j].x;
                a(2 * static_cast<int>(r) + 1, j) = v[j].y;
            }
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
        EXPECT_EQ(qr.rank(), lay.size()) << "p=" << p;
        for (int comp = 0; comp < 2; ++comp)
            for (int ea = 0; ea <= p; ++ea)
                for (int eb = 0; ea + eb <= p; ++eb) {
                    Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
                    for (std::size_t r = 0; r < pts.size(); ++r)
                        y[2 * static_cast<int>(r) + comp] = std::pow(pts[r].x, ea) * std::pow(pts[r].y, eb);
                    const Eigen::VectorXd c = qr.solve(y);
                    EXPECT_LT((a * c - y).norm(), 1e-9) << "p=" << p;
                }
    }
}

TEST(HdivBasis, DivergenceMatchesFiniteDifferences) {
    const Mesh mesh = skewed_triangle();
    const auto geo = ElementGeometry::of(mesh, 0);
    for (int p = 1; p <= 5; ++p) {
        const auto lay = layout_for(p, {p, p + 1, p + 2}, {false, true, false});
        std::vector<Point> v, vp, vm;
        std::vector<double> d, dd;
        for (const Point r : random_reference_points(5, 5)) {
            hdiv_basis(lay, geo, r, v, d);
            // physical step h along x and y, converted to reference displacements
            const double h = 1e-6;
            std::vector<double> fd(v.size(), 0.0);
            for (int dir = 0; dir < 2; ++dir) {
                const Point xp = geo.map(r) + Point{dir == 0 ? h : 0.0, dir == 1 ? h : 0.0};
                const Point xm = geo.map(r) - Point{dir == 0 ? h : 0.0, dir == 1 ? h : 0.0};
                hdiv_basis(lay, geo, mesh.to_reference(0, xp), vp, dd);
                hdiv_basis(lay, geo, mesh.to_reference(0, xm), vm, dd);
                for (std::size_t j = 0; j < v.size(); ++j)
                    fd[j] += ((dir == 0 ? vp[j].x - vm[j].x : vp[j].y - vm[j].y)) / (2 * h);
            }
            for (std::size_t j = 0; j < v.size(); ++j)
                EXPECT_NEAR(d[j], fd[j], 1e-6 * std::max(1.0, std::abs(d[j]))) << "p=" << p << " j=" << j;
        }
    }
}

TEST(HdivBasis, DivergenceTheorem) {
    const Mesh mesh = skewed_triangle();
    const auto geo = ElementGeometry::of(mesh, 0);
    for (int p = 1; p <= kOrderMax; ++p) {
        const auto lay = layout_for(p, {p, std::min(p + 1, kOrderMax + 1), p}, {true, false, true});
        const int n = lay.size();
        std::vector<double> volume(n, 0.0), boundary(n, 0.0);
        std::vector<Point> v;
        std::vector<double> d;
        const auto& tri = quadrature_rule(QuadDomain::Triangle, lay.max_degree());
        for (std::size_t q = 0; q < tri.size(); ++q) {
            hdiv_basis(lay, geo, tri.points[q], v, d);
            for (int j = 0; j < n; ++j) volume[j] += tri.weights[q] * std::abs(geo.det) * d[j];
        }
        const auto& seg = quadrature_rule(QuadDomain::Segment, lay.max_degree() + 1);
        for (int i = 0; i < 3; ++i) {
            const Point n_out = mesh.outward_normal(0, i);
            const double len = mesh.edge_length(mesh.element(0).edges[i]);
            for (std::size_t q = 0; q < seg.size(); ++q) {
                hdiv_basis(lay, geo, edge_point(i, seg.points[q].x), v, d);
                for (int j = 0; j < n; ++j) boundary[j] += seg.weights[q] * len * dot(v[j], n_out);
            }
        }
        for (int j = 0; j < n; ++j) EXPECT_NEAR(volume[j], boundary[j], 1e-12) << "p=" << p << " j=" << j;
    }
}

TEST(HdivBasis, InteriorFunctionsHaveZeroNormalTrace) {
    const Mesh mesh = skewed_triangle();
    const auto geo = ElementGeometry::of(mesh, 0);
    for (int p = 2; p <= kOrderMax; ++p) {
        const auto lay = layout_for(p, {p, p, p});
        const int first = 3 * (p + 1);
        std::vector<Point> v;
        std::vector<double> d;
        for (int i = 0; i < 3; ++i)
            for (double s : {0.1, 0.5, 0.77}) {
                hdiv_basis(lay, geo, edge_point(i, s), v, d);
                for (int j = first; j < lay.size(); ++j) EXPECT_NEAR(dot(v[j], mesh.outward_normal(0, i)), 0.0, 1e-12);
            }
    }
}

TEST(DofMap, SingleElementLowestOrder) {
    const Mesh mesh = Mesh::from_cells({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {0});
    const DofMap dofs = build_dof_map(mesh, OrderMap::uniform(mesh, 0));
    EXPECT_EQ(dofs.num_mass(), 1);
    EXPECT_EQ(dofs.num_flux(), 6);
}

TEST(DofMap, TwoElementSquare) {
    const Mesh mesh = generate_structured(1, 1, {0, 1, 0, 1});
    const DofMap dofs = build_dof_map(mesh, OrderMap::uniform(mesh, 1));
    EXPECT_EQ(dofs.num_mass(), 6);
    EXPECT_EQ(dofs.num_flux(), 5 * 3 + 2 * ((2 + 1) * (2 + 2) - 3 * 3));
}

TEST(DofMap, ElementCountsAndDisjointMass) {
    const Mesh mesh = generate_structured(3, 3, {0, 1, 0, 1}, Diagonal::Crossed);
    OrderMap orders = OrderMap::uniform(mesh, 2);
    for (int k = 0; k < mesh.num_elements(); ++k) orders.element[k] = 1 + k % 3;
    orders.apply_edge_max_rule(mesh);
    const DofMap dofs = build_dof_map(mesh, orders);
    std::vector<int> owner(dofs.num_mass(), -1);
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const int kk = orders.element[k];
        EXPECT_EQ(dofs.mass_count(k), (kk + 1) * (kk + 2) / 2);
        for (int j = 0; j < dofs.mass_count(k); ++j) {
            EXPECT_EQ(owner[dofs.mass_offset(k) + j], -1);
            owner[dofs.mass_offset(k) + j] = k;
        }
        // with edges at the element's own order the local count is dim [P_p]^2
        const int p = kk + 1;
        int local = dofs.interior_count(k);
        for (int i = 0; i < 3; ++i) local += p + 1;
        EXPECT_EQ(local, (p + 1) * (p + 2));
        EXPECT_EQ(static_cast<int>(dofs.element_flux_dofs(k).size()), dofs.layout(k).size());
    }
}

TEST(DofMap, RaisingOneElementIsLocal) {
    const Mesh mesh = generate_structured(3, 3, {0, 1, 0, 1});
    const OrderMap base = OrderMap::uniform(mesh, 1);
    OrderMap raised = base;
    const int target = 7;
    raised.element[target] = 2;
    raised.apply_edge_max_rule(mesh);
    const DofMap a = build_dof_map(mesh, base), b = build_dof_map(mesh, raised);
    for (int k = 0; k < mesh.num_elements(); ++k) {
        EXPECT_EQ(a.mass_count(k) != b.mass_count(k), k == target);
        EXPECT_EQ(a.interior_count(k) != b.interior_count(k), k == target);
    }
    const auto& edges = mesh.element(target).edges;
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const bool own = std::find(edges.begin(), edges.end(), e) != edges.end();
        EXPECT_EQ(a.edge_count(e) != b.edge_count(e), own);
    }
}

TEST(DofMap, EdgeOrderBelowNeighbourRejected) {
    const Mesh mesh = generate_structured(2, 2, {0, 1, 0, 1});
    OrderMap orders = OrderMap::uniform(mesh, 2);
    orders.edge[0] = 1;
    EXPECT_THROW(build_dof_map(mesh, orders), Error);
}
