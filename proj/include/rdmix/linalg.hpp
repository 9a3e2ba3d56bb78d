#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "rdmix/error.hpp"
#include "rdmix/sparse.hpp"

namespace rdmix {

/// Saddle-point system
///   [ K   B      ] [H]   [F]
///   [ B^T -sigma M ] [m] = [G]
/// with M block diagonal; block k spans mass dofs [mass_blocks[k], mass_blocks[k+1]).
struct BlockSystem {
    SparseMatrix K, B, M;
    double sigma = 1.0;
    Vector F, G;
    std::vector<int> mass_blocks;
};

/// Element-by-element inverse of a block-diagonal SPD matrix.
inline SparseMatrix invert_mass_blocks(const SparseMatrix& m, const std::vector<int>& blocks) {
    RDMIX_REQUIRE(m.rows() == m.cols(), Error, "invert_mass_blocks: matrix not square");
    RDMIX_REQUIRE(!blocks.empty() && blocks.front() == 0 && blocks.back() == m.rows(), Error,
                  "invert_mass_blocks: block layout does not cover the matrix");
    std::vector<Triplet> t;
    for (std::size_t b = 0; b + 1 < blocks.size(); ++b) {
        const int lo = blocks[b];
        const int n = blocks[b + 1] - lo;
        Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(n, n);
        for (int r = 0; r < n; ++r)
            for (int p = m.row_ptr()[lo + r]; p < m.row_ptr()[lo + r + 1]; ++p) {
                const int c = m.col_idx()[p] - lo;
                RDMIX_REQUIRE(c >= 0 && c < n, Error,
                              "invert_mass_blocks: entry couples element " + std::to_string(b) +
                                  " to another block");
                blk(r, c) = m.values()[p];
            }
        Eigen::LLT<Eigen::MatrixXd> llt(blk);
        RDMIX_REQUIRE(llt.info() == Eigen::Success, Error,
                      "invert_mass_blocks: block of element " + std::to_string(b) +
                          " is not positive definite");
        const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) t.push_back({lo + r, lo + c, 0.5 * (inv(r, c) + inv(c, r))});
    }
    return SparseMatrix::from_triplets(m.rows(), m.cols(), std::move(t));
}

/// S = K + (1/sigma) B M^{-1} B^T
inline SparseMatrix schur_complement(const SparseMatrix& k, const SparseMatrix& b,
                                     const SparseMatrix& m_inv, double sigma = 1.0) {
    RDMIX_REQUIRE(k.rows() == k.cols() && b.rows() == k.rows() && m_inv.rows() == b.cols() &&
                      m_inv.cols() == b.cols(),
                  Error, "schur_complement: dimension mismatch");
    RDMIX_REQUIRE(sigma > 0.0, Error, "schur_complement: shift must be positive");
    const SparseMatrix bm = product(b, m_inv);
    return add(k, product(bm, b.transpose()), 1.0, 1.0 / sigma);
}

struct CgResult {
    Vector x;
    int iterations = 0;
    double residual = 0.0;  // relative
};

/// Jacobi-preconditioned conjugate gradients. Throws SolverError carrying the last iterate
/// when max_iter is exhausted.
inline CgResult cg_solve(const SparseMatrix& a, const Vector& rhs, double tol = 1e-10, int max_iter = 0,
                         const Vector* guess = nullptr) {
    const int n = a.rows();
    RDMIX_REQUIRE(a.cols() == n && static_cast<int>(rhs.size()) == n, Error, "cg_solve: dimension mismatch");
    if (max_iter <= 0) max_iter = std::max(10 * n, 10);
    CgResult res;
    res.x = guess ? *guess : Vector(static_cast<std::size_t>(n), 0.0);
    const double bnorm = norm2(rhs);
    if (bnorm == 0.0) {
        res.x.assign(static_cast<std::size_t>(n), 0.0);
        return res;
    }
    Vector dinv = a.diagonal();
    for (auto& d : dinv) d = d > 0.0 ? 1.0 / d : 1.0;
    Vector r = rhs;
    {
        const Vector ax = a.multiply(res.x);
        for (int i = 0; i < n; ++i) r[i] -= ax[i];
    }
    Vector z(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[i] = z[i] = dinv[i] * r[i];
    double rz = dot(r, z);
    double rn = norm2(r);
    for (int it = 0; it < max_iter; ++it) {
        if (!std::isfinite(rn)) throw SolverError("cg_solve: non-finite residual", res.x, rn / bnorm);
        if (rn <= tol * bnorm) {
            res.residual = rn / bnorm;
            return res;
        }
        const Vector ap = a.multiply(p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) throw SolverError("cg_solve: matrix is not positive definite", res.x, rn / bnorm);
        const double alpha = rz / pap;
        for (int i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for (int i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rn = norm2(r);
        res.iterations = it + 1;
    }
    res.residual = rn / bnorm;
    if (rn <= tol * bnorm) return res;
    throw SolverError("cg_solve: no convergence in " + std::to_string(max_iter) + " iterations", res.x,
                      res.residual);
}

/// Direct sparse LDL^T solve of an SPD system.
inline Vector solve_spd(const SparseMatrix& a, const Vector& rhs) {
    Eigen::SparseMatrix<double> ea(a.rows(), a.cols());
    std::vector<Eigen::Triplet<double>> et;
    et.reserve(a.nnz());
    for (const auto& t : a.triplets()) et.emplace_back(t.row, t.col, t.value);
    ea.setFromTriplets(et.begin(), et.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(ea);
    RDMIX_REQUIRE(ldlt.info() == Eigen::Success, Error, "solve_spd: factorisation failed");
    Eigen::Map<const Eigen::VectorXd> er(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    const Eigen::VectorXd x = ldlt.solve(er);
    return Vector(x.data(), x.data() + x.size());
}

enum class SolverKind { Direct, CG };

struct SolverOptions {
    SolverKind kind = SolverKind::Direct;
    double tol = 1e-10;
    int max_iter = 0;
    double residual_check = 1e-8;
};

struct BlockSolution {
    Vector H, m;
    double residual = 0.0;
    int iterations = 0;
};

/// Block residual (||r1|| + ||r2||) / (||F|| + ||G||), absolute when the right side vanishes.
inline double block_residual(const BlockSystem& sys, const Vector& h, const Vector& m) {
    Vector r1 = sys.K.multiply(h);
    const Vector bm = sys.B.multiply(m);
    for (std::size_t i = 0; i < r1.size(); ++i) r1[i] += bm[i] - sys.F[i];
    Vector r2 = sys.B.multiply_transpose(h);
    const Vector mm = sys.M.multiply(m);
    for (std::size_t i = 0; i < r2.size(); ++i) r2[i] -= sys.sigma * mm[i] + sys.G[i];
    const double scale = norm2(sys.F) + norm2(sys.G);
    const double r = norm2(r1) + norm2(r2);
    return scale > 0.0 ? r / scale : r;
}

/// Eliminates m through the Schur complement and keeps the factorisation (or the operator for
/// CG) so repeated solves with the same matrices are cheap.
class SchurSolver {
public:
    SchurSolver(const SparseMatrix& k, const SparseMatrix& b, const SparseMatrix& m,
                const std::vector<int>& mass_blocks, double sigma, SolverOptions options = {})
        : k_(k), b_(b), m_(m), sigma_(sigma), options_(options) {
        RDMIX_REQUIRE(sigma > 0.0, Error, "solve_block_system: shift must be positive");
        m_inv_ = invert_mass_blocks(m, mass_blocks);
        s_ = schur_complement(k, b, m_inv_, sigma);
        if (options_.kind == SolverKind::Direct) {
            Eigen::SparseMatrix<double> es(s_.rows(), s_.cols());
            std::vector<Eigen::Triplet<double>> et;
            et.reserve(s_.nnz());
            for (const auto& t : s_.triplets()) et.emplace_back(t.row, t.col, t.value);
            es.setFromTriplets(et.begin(), et.end());
            ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(es);
            RDMIX_REQUIRE(ldlt_->info() == Eigen::Success, Error,
                          "solve_block_system: Schur complement factorisation failed");
        }
    }

    const SparseMatrix& schur() const { return s_; }
    const SparseMatrix& mass_inverse() const { return m_inv_; }
    double sigma() const { return sigma_; }

    /// m = M^{-1} (B^T H - G) / sigma
    Vector back_substitute(const Vector& h, const Vector& g) const {
        Vector r = b_.multiply_transpose(h);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= g[i];
        Vector m = m_inv_.multiply(r);
        for (auto& x : m) x /= sigma_;
        return m;
    }

    BlockSolution solve(const Vector& f, const Vector& g, const Vector* guess = nullptr) const {
        RDMIX_REQUIRE(static_cast<int>(f.size()) == k_.rows() && static_cast<int>(g.size()) == m_.rows(),
                      Error, "solve_block_system: right-hand side size mismatch");
        // S H = F + (1/sigma) B M^{-1} G
        Vector rhs = f;
        {
            const Vector mg = m_inv_.multiply(g);
            const Vector bmg = b_.multiply(mg);
            for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += bmg[i] / sigma_;
        }
        BlockSolution sol;
        if (options_.kind == SolverKind::Direct) {
            Eigen::Map<const Eigen::VectorXd> er(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
            const Eigen::VectorXd x = ldlt_->solve(er);
            sol.H.assign(x.data(), x.data() + x.size());
        } else {
            auto cg = cg_solve(s_, rhs, options_.tol, options_.max_iter, guess);
            sol.H = std::move(cg.x);
            sol.iterations = cg.iterations;
        }
        sol.m = back_substitute(sol.H, g);
        for (double x : sol.H)
            if (!std::isfinite(x)) throw SolverError("solve_block_system: non-finite flux", sol.H, 0.0);
        BlockSystem view{k_, b_, m_, sigma_, f, g, {}};
        sol.residual = block_residual(view, sol.H, sol.m);
        if (sol.residual > options_.residual_check)
            throw SolverError("solve_block_system: block residual " + std::to_string(sol.residual) +
                                  " above " + std::to_string(options_.residual_check),
                              sol.H, sol.residual);
        return sol;
    }

private:
    SparseMatrix k_, b_, m_, m_inv_, s_;
    double sigma_;
    SolverOptions options_;
    std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

inline BlockSolution solve_block_system(const BlockSystem& sys, SolverOptions options = {}) {
    SchurSolver solver(sys.K, sys.B, sys.M, sys.mass_blocks, sys.sigma, options);
    return solver.solve(sys.F, sys.G);
}

} // namespace rdmix
