#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "rdmix/assembly.hpp"
#include "rdmix/linalg.hpp"

using namespace rdmix;

namespace {

Eigen::MatrixXd dense(const SparseMatrix& a) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(a.rows(), a.cols());
    for (const auto& t : a.triplets()) d(t.row, t.col) += t.value;
    return d;
}

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// closed form for the reference triangle
double monomial_integral(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

std::vector<std::pair<int, int>> monomials(int p) {
    std::vector<std::pair<int, int>> out;
    for (int d = 0; d <= p; ++d)
        for (int a = 0; a <= d; ++a) out.push_back({a, d - a});
    return out;
}

// monomial coefficients of each component of each reference basis function, from samples
std::vector<Eigen::MatrixXd> fit_reference(const HdivLayout& lay) {
    const auto mons = monomials(lay.max_degree());
    const int nm = static_cast<int>(mons.size());
    std::vector<Point> pts;
    for (int i = 0; i <= 12; ++i)
        for (int j = 0; i + j <= 12; ++j) pts.push_back({(i + 0.3) / 13.6, (j + 0.2) / 13.6});
    Eigen::MatrixXd v(pts.size(), nm);
    for (std::size_t q = 0; q < pts.size(); ++q)
        for (int c = 0; c < nm; ++c)
            v(q, c) = std::pow(pts[q].x, mons[c].first) * std::pow(pts[q].y, mons[c].second);
    const int nf = lay.size();
    Eigen::MatrixXd fx(pts.size(), nf), fy(pts.size(), nf);
    std::vector<Point> val;
    std::vector<double> dv;
    for (std::size_t q = 0; q < pts.size(); ++q) {
        hdiv_reference(lay, pts[q], val, dv);
        for (int j = 0; j < nf; ++j) {
            fx(q, j) = val[j].x;
            fy(q, j) = val[j].y;
        }
    }
    const auto qr = v.colPivHouseholderQr();
    return {qr.solve(fx), qr.solve(fy)};
}

Vector random_vector(int n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector v(static_cast<std::size_t>(n));
    for (auto& x : v) x = u(gen);
    return v;
}

OrderMap mixed_orders(const Mesh& mesh) {
    OrderMap o = OrderMap::uniform(mesh, 1);
    for (int k = 0; k < mesh.num_elements(); ++k) o.element[k] = 1 + k % 3;
    o.apply_edge_max_rule(mesh);
    return o;
}

double quad_form(const SparseMatrix& a, const Vector& x, const Vector& y) { return dot(x, a.multiply(y)); }

}  // namespace

TEST(ElementMatrices, ReferenceFluxMassAgainstMonomialIntegrals) {
    const Mesh mesh = Mesh::from_cells({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {0});
    for (int p : {1, 2, 3}) {
        const DofMap dofs(mesh, OrderMap::uniform(mesh, p));
        const auto em = element_matrices(mesh, dofs, 0, Tensor2::isotropic(1.0));
        const auto c = fit_reference(dofs.layout(0));
        const auto mons = monomials(dofs.layout(0).max_degree());
        const int nm = static_cast<int>(mons.size());
        Eigen::MatrixXd gram(nm, nm);
        for (int a = 0; a < nm; ++a)
            for (int b = 0; b < nm; ++b)
                gram(a, b) = monomial_integral(mons[a].first + mons[b].first, mons[a].second + mons[b].second);
        const Eigen::MatrixXd k = c[0].transpose() * gram * c[0] + c[1].transpose() * gram * c[1];
        EXPECT_LT((em.K - k).norm(), 1e-10 * k.norm()) << "order " << p;
    }
}

TEST(ElementMatrices, LowestMassIsArea) {
    const Mesh mesh = generate_structured(2, 3, {0, 2, -1, 2}, Diagonal::Crossed);
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 0));
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const auto em = element_matrices(mesh, dofs, k, Tensor2::isotropic(1.0));
        ASSERT_EQ(em.M.rows(), 1);
        EXPECT_NEAR(em.M(0, 0), mesh.area(k), 1e-14);
    }
}

TEST(ElementMatrices, DoublingDiffusivityHalvesK) {
    const Mesh mesh = generate_structured(1, 1, {0, 1, 0, 2});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 2));
    const Tensor2 d{1.5, 0.4, 0.7};
    for (int k = 0; k < 2; ++k) {
        const auto a = element_matrices(mesh, dofs, k, d);
        const auto b = element_matrices(mesh, dofs, k, d.scaled(2.0));
        EXPECT_LT((b.K - 0.5 * a.K).norm(), 1e-13 * a.K.norm());
        EXPECT_LT((b.B - a.B).norm(), 1e-15);
        EXPECT_LT((a.K - a.K.transpose()).norm(), 1e-14);
        EXPECT_GT(a.K.ldlt().vectorD().minCoeff(), 0.0);
    }
}

TEST(ElementMatrices, NonSpdTensorRejected) {
    const Mesh mesh = generate_structured(1, 1, {0, 1, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 1));
    EXPECT_THROW(element_matrices(mesh, dofs, 0, Tensor2{1.0, 2.0, 1.0}), Error);
    EXPECT_THROW(DiffusivityField(Tensor2{-1.0, 0.0, 1.0}), Error);
}

TEST(GlobalAssembly, SingleElementEqualsElement) {
    const Mesh mesh = Mesh::from_cells({{0, 0}, {2, 0.5}, {0.3, 1}}, {{0, 1, 2}}, {0});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 2));
    const Tensor2 d{2.0, -0.3, 0.5};
    const auto g = assemble_global(mesh, dofs, DiffusivityField(d));
    const auto em = element_matrices(mesh, dofs, 0, d);
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(dofs.num_flux(), dofs.num_flux());
    for (std::size_t i = 0; i < em.flux_dofs.size(); ++i)
        for (std::size_t j = 0; j < em.flux_dofs.size(); ++j)
            k(em.flux_dofs[i], em.flux_dofs[j]) = em.K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    EXPECT_LT((dense(g.K) - k).norm(), 1e-14 * k.norm());
    EXPECT_LT((dense(g.M) - em.M).norm(), 1e-15);
}

// bilinear forms evaluated pointwise on the assembled fields
TEST(GlobalAssembly, QuadraticFormsMatchFieldIntegrals) {
    Mesh mesh = generate_structured(2, 2, {0, 1, 0, 1}, Diagonal::Crossed);
    std::vector<int> regions(mesh.num_elements());
    for (int k = 0; k < mesh.num_elements(); ++k) regions[k] = k % 2;
    mesh.set_regions(regions);
    DiffusivityField field(Tensor2{1.0, 0.2, 0.5});
    field.set(1, Tensor2::isotropic(3.0));
    const DofMap dofs(mesh, mixed_orders(mesh));
    const auto g = assemble_global(mesh, dofs, field);
    const Vector h = random_vector(dofs.num_flux(), 1), m = random_vector(dofs.num_mass(), 2);
    double kk = 0.0, bb = 0.0, mm = 0.0;
    const auto& rule = quadrature_rule(QuadDomain::Triangle, 18);
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const Tensor2 dinv = field.at(mesh.element(k).region).inverse();
        const double jac = 2.0 * mesh.area(k);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            double div = 0.0;
            const Point v = eval_flux(mesh, dofs, h, k, rule.points[q], &div);
            const double s = eval_mass(dofs, m, k, rule.points[q]);
            kk += rule.weights[q] * jac * dot(v, dinv.apply(v));
            bb -= rule.weights[q] * jac * div * s;
            mm += rule.weights[q] * jac * s * s;
        }
    }
    EXPECT_NEAR(quad_form(g.K, h, h), kk, 1e-11 * kk);
    EXPECT_NEAR(dot(h, g.B.multiply(m)), bb, 1e-11 * (1.0 + std::abs(bb)));
    EXPECT_NEAR(quad_form(g.M, m, m), mm, 1e-11 * mm);
}

TEST(GlobalAssembly, MassIsBlockDiagonal) {
    const Mesh mesh = generate_structured(3, 2, {0, 1, 0, 1});
    const DofMap dofs(mesh, mixed_orders(mesh));
    const auto g = assemble_global(mesh, dofs, DiffusivityField(Tensor2::isotropic(1.0)));
    ASSERT_EQ(static_cast<int>(g.mass_blocks.size()), mesh.num_elements() + 1);
    std::vector<int> owner(static_cast<std::size_t>(dofs.num_mass()));
    for (int k = 0; k < mesh.num_elements(); ++k)
        for (int j = g.mass_blocks[k]; j < g.mass_blocks[k + 1]; ++j) owner[j] = k;
    for (const auto& t : g.M.triplets())
        if (t.value != 0.0) {
            EXPECT_EQ(owner[t.row], owner[t.col]);
        }
    // orthogonal basis: each block is diagonal up to rounding
    const Eigen::MatrixXd d = dense(g.M);
    EXPECT_LT((d - Eigen::MatrixXd(d.diagonal().asDiagonal())).norm(), 1e-12);
}

TEST(BoundaryLoad, ZeroConcentrationGivesZero) {
    const Mesh mesh = generate_structured(2, 2, {0, 1, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 2));
    BoundaryConditions bc;
    for (int tag = 1; tag <= 4; ++tag) bc.natural[tag] = [](Point, double) { return 0.0; };
    for (double v : assemble_F(mesh, dofs, bc, 0.3)) EXPECT_EQ(v, 0.0);
}

// with mbar = 1 everywhere, H.F = -int_dOmega h.n = -int_Omega div h
TEST(BoundaryLoad, UnitConcentrationMatchesDivergenceTheorem) {
    const Mesh mesh = generate_structured(3, 2, {-1, 1, 0, 1}, Diagonal::Crossed);
    const DofMap dofs(mesh, mixed_orders(mesh));
    BoundaryConditions bc;
    for (int tag = 1; tag <= 4; ++tag) bc.natural[tag] = [](Point, double) { return 1.0; };
    const Vector f = assemble_F(mesh, dofs, bc, 0.0);
    const Vector h = random_vector(dofs.num_flux(), 3);
    const auto& rule = quadrature_rule(QuadDomain::Triangle, 12);
    double total = 0.0;
    for (int k = 0; k < mesh.num_elements(); ++k)
        for (std::size_t q = 0; q < rule.size(); ++q) {
            double div = 0.0;
            eval_flux(mesh, dofs, h, k, rule.points[q], &div);
            total += rule.weights[q] * 2.0 * mesh.area(k) * div;
        }
    EXPECT_NEAR(dot(h, f), -total, 1e-12 * (1.0 + std::abs(total)));
}

TEST(BoundaryLoad, EdgeQuadratureOracle) {
    const Mesh mesh = generate_structured(1, 1, {0, 2, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 2));
    BoundaryConditions bc;
    bc.natural[2] = [](Point x, double) { return x.y * x.y; };
    const Vector f = assemble_F(mesh, dofs, bc, 0.0);
    // right edge x = 2, outward normal (1, 0); composite midpoint rule on the physical edge
    int edge = -1;
    for (int e = 0; e < mesh.num_edges(); ++e)
        if (mesh.edge(e).tag == 2) edge = e;
    ASSERT_GE(edge, 0);
    const int k = mesh.edge(edge).elements[0];
    Vector h(static_cast<std::size_t>(dofs.num_flux()), 0.0);
    for (int j = 0; j < dofs.edge_count(edge); ++j) {
        std::fill(h.begin(), h.end(), 0.0);
        h[dofs.edge_offset(edge) + j] = 1.0;
        const int n = 4000;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const Point x{2.0, (i + 0.5) / n};
            const Point v = eval_flux(mesh, dofs, h, k, mesh.to_reference(k, x));
            s += v.x * x.y * x.y / n;
        }
        EXPECT_NEAR(f[dofs.edge_offset(edge) + j], -s, 1e-6);
    }
    for (int i = 0; i < dofs.num_flux(); ++i)
        if (i < dofs.edge_offset(edge) || i >= dofs.edge_offset(edge) + dofs.edge_count(edge)) {
            EXPECT_EQ(f[i], 0.0);
        }
}

TEST(BoundaryLoad, LinearInTime) {
    const Mesh mesh = generate_structured(2, 2, {0, 1, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 1));
    BoundaryConditions bc;
    bc.natural[1] = [](Point x, double t) { return t * (1.0 + x.x); };
    bc.natural[4] = [](Point x, double t) { return t * x.y; };
    const Vector f1 = assemble_F(mesh, dofs, bc, 1.0), f3 = assemble_F(mesh, dofs, bc, 3.0);
    EXPECT_GT(norm2(f1), 0.0);
    for (std::size_t i = 0; i < f1.size(); ++i) EXPECT_NEAR(f3[i], 3.0 * f1[i], 1e-14);
}

TEST(EssentialFlux, UntaggedEdgesAreNoFlux) {
    const Mesh mesh = generate_structured(2, 2, {0, 1, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 2));
    const auto bc = essential_flux_values(mesh, dofs, BoundaryConditions{}, 0.0);
    int expected = 0;
    for (int e = 0; e < mesh.num_edges(); ++e)
        if (mesh.edge(e).is_boundary()) expected += dofs.edge_count(e);
    EXPECT_EQ(static_cast<int>(bc.dofs.size()), expected);
    for (double v : bc.values) EXPECT_EQ(v, 0.0);
}

TEST(EssentialFlux, ConstantInflowReproduced) {
    const Mesh mesh = generate_structured(3, 2, {0, 1, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 2));
    BoundaryConditions bc;
    bc.essential[4] = [](Point, double) { return 0.7; };
    bc.essential[3] = [](Point x, double) { return x.x; };
    const auto ess = essential_flux_values(mesh, dofs, bc, 0.0);
    Vector h(static_cast<std::size_t>(dofs.num_flux()), 0.0);
    for (std::size_t j = 0; j < ess.dofs.size(); ++j) h[ess.dofs[j]] = ess.values[j];
    for (int e = 0; e < mesh.num_edges(); ++e) {
        const auto& ed = mesh.edge(e);
        if (!ed.is_boundary()) continue;
        const int k = ed.elements[0], i = ed.local_index[0];
        const Point n = mesh.outward_normal(k, i);
        for (double s : {0.1, 0.5, 0.8}) {
            const Point r = edge_point(i, s);
            const Point x = mesh.to_physical(k, r);
            const double hn = dot(eval_flux(mesh, dofs, h, k, r), n);
            const double want = ed.tag == 4 ? -0.7 : ed.tag == 3 ? -x.x : 0.0;
            EXPECT_NEAR(hn, want, 1e-12) << "tag " << ed.tag;
        }
    }
}

TEST(EssentialFlux, MissingTagRejected) {
    const Mesh mesh = generate_structured(1, 1, {0, 1, 0, 1});
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 1));
    BoundaryConditions bc;
    bc.essential[9] = [](Point, double) { return 1.0; };
    EXPECT_THROW(essential_flux_values(mesh, dofs, bc, 0.0), Error);
}

TEST(EssentialFlux, EliminationIsSymmetricAndMatchesReducedSolve) {
    const Mesh mesh = generate_structured(2, 2, {0, 1, 0, 1}, Diagonal::Crossed);
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 1));
    const auto g = assemble_global(mesh, dofs, DiffusivityField(Tensor2{1.0, 0.1, 0.8}));
    BoundaryConditions bc;
    bc.natural[1] = [](Point x, double) { return x.x; };
    bc.essential[2] = [](Point x, double) { return 1.0 + x.y; };
    const auto ess = essential_flux_values(mesh, dofs, bc, 0.0);
    const double sigma = 4.0;
    BlockSystem sys{g.K, g.B, g.M, sigma, assemble_F(mesh, dofs, bc, 0.0),
                    random_vector(dofs.num_mass(), 5), g.mass_blocks};
    const Vector f0 = sys.F, g0 = sys.G;
    apply_essential_flux_bc(sys, ess);
    const Eigen::MatrixXd kc = dense(sys.K);
    EXPECT_LT((kc - kc.transpose()).norm(), 1e-14);
    SolverOptions opt;
    const auto sol = solve_block_system(sys, opt);

    // reduced dense saddle-point solve over the free flux dofs
    const int nh = dofs.num_flux(), nm = dofs.num_mass();
    std::vector<char> fixed(static_cast<std::size_t>(nh), 0);
    Eigen::VectorXd hc = Eigen::VectorXd::Zero(nh);
    for (std::size_t j = 0; j < ess.dofs.size(); ++j) {
        fixed[ess.dofs[j]] = 1;
        hc[ess.dofs[j]] = ess.values[j];
    }
    std::vector<int> free;
    for (int i = 0; i < nh; ++i)
        if (!fixed[i]) free.push_back(i);
    const int nf = static_cast<int>(free.size());
    const Eigen::MatrixXd k = dense(g.K), b = dense(g.B), m = dense(g.M);
    const Eigen::VectorXd kh = k * hc, bh = b.transpose() * hc;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nf + nm, nf + nm);
    Eigen::VectorXd rhs(nf + nm);
    for (int i = 0; i < nf; ++i) {
        for (int j = 0; j < nf; ++j) a(i, j) = k(free[i], free[j]);
        for (int l = 0; l < nm; ++l) a(i, nf + l) = a(nf + l, i) = b(free[i], l);
        rhs[i] = f0[free[i]] - kh[free[i]];
    }
    a.bottomRightCorner(nm, nm) = -sigma * m;
    for (int l = 0; l < nm; ++l) rhs[nf + l] = g0[l] - bh[l];
    const Eigen::VectorXd x = a.fullPivLu().solve(rhs);
    for (int i = 0; i < nf; ++i) EXPECT_NEAR(sol.H[free[i]], x[i], 1e-9);
    for (int l = 0; l < nm; ++l) EXPECT_NEAR(sol.m[l], x[nf + l], 1e-9);
    for (std::size_t j = 0; j < ess.dofs.size(); ++j) EXPECT_DOUBLE_EQ(sol.H[ess.dofs[j]], ess.values[j]);
}

// sigma m + div h = sigma m_exact with h = -D grad m, m linear: reproduced exactly
TEST(PatchTest, LinearConcentrationReproduced) {
    const auto exact = [](Point x) { return 0.3 + 1.2 * x.x - 0.7 * x.y; };
    const Tensor2 d{1.3, 0.25, 0.6};
    const Point grad{1.2, -0.7};
    const Point flux = -1.0 * d.apply(grad);
    for (auto diag : {Diagonal::Right, Diagonal::Crossed})
        for (int p : {1, 2, 3}) {
            const Mesh mesh = generate_structured(3, 2, {-1, 1, 0, 1.5}, diag);
            const DofMap dofs(mesh, OrderMap::uniform(mesh, p));
            const auto g = assemble_global(mesh, dofs, DiffusivityField(d));
            BoundaryConditions bc;
            for (int tag : {1, 2, 4}) bc.natural[tag] = [&](Point x, double) { return exact(x); };
            bc.essential[3] = [&](Point, double) { return -flux.y; };
            const double sigma = 2.5;
            const Vector mp = project_mass(mesh, dofs, exact);
            Vector rhs = g.M.multiply(mp);
            for (auto& v : rhs) v *= -sigma;
            BlockSystem sys{g.K, g.B, g.M, sigma, assemble_F(mesh, dofs, bc, 0.0), rhs, g.mass_blocks};
            apply_essential_flux_bc(sys, essential_flux_values(mesh, dofs, bc, 0.0));
            const auto sol = solve_block_system(sys);
            for (int k = 0; k < mesh.num_elements(); ++k)
                for (Point r : {Point{0.2, 0.2}, Point{0.6, 0.1}, Point{0.1, 0.7}}) {
                    const Point x = mesh.to_physical(k, r);
                    EXPECT_NEAR(eval_mass(dofs, sol.m, k, r), exact(x), 1e-10);
                    double div = 1.0;
                    const Point h = eval_flux(mesh, dofs, sol.H, k, r, &div);
                    EXPECT_NEAR(h.x, flux.x, 1e-10);
                    EXPECT_NEAR(h.y, flux.y, 1e-10);
                    EXPECT_NEAR(div, 0.0, 1e-9);
                }
        }
}

TEST(Projection, PolynomialsReproducedAndPointEvaluation) {
    const Mesh mesh = generate_structured(2, 2, {0, 1, 0, 1}, Diagonal::Crossed);
    const DofMap dofs(mesh, OrderMap::uniform(mesh, 3));
    const auto fn = [](Point x) { return 1.0 - x.x * x.x * x.y + 2.0 * x.y * x.y * x.y; };
    const Vector m = project_mass(mesh, dofs, fn);
    for (int k = 0; k < mesh.num_elements(); ++k) {
        const Point r{0.3, 0.4};
        const Point x = mesh.to_physical(k, r);
        EXPECT_NEAR(eval_mass(dofs, m, k, r), fn(x), 1e-12);
        const Point gr = eval_mass_grad(mesh, dofs, m, k, r);
        EXPECT_NEAR(gr.x, -2.0 * x.x * x.y, 1e-11);
        EXPECT_NEAR(gr.y, -x.x * x.x + 6.0 * x.y * x.y, 1e-11);
    }
}
