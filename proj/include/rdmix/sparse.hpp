#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <span>
#include <string>
#include <vector>

#include "rdmix/error.hpp"

namespace rdmix {

using Vector = std::vector<double>;

struct Triplet {
    int row;
    int col;
    double value;
};

/// Compressed-row sparse matrix with sorted, unique column indices per row.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(static_cast<std::size_t>(rows) + 1, 0) {}

    static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
        for (const auto& t : triplets)
            RDMIX_REQUIRE(t.row >= 0 && t.row < rows && t.col >= 0 && t.col < cols, Error,
                          "sparse: triplet index out of range");
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        SparseMatrix m(rows, cols);
        m.col_idx_.reserve(triplets.size());
        m.values_.reserve(triplets.size());
        std::size_t i = 0;
        for (int r = 0; r < rows; ++r) {
            while (i < triplets.size() && triplets[i].row == r) {
                const int c = triplets[i].col;
                double v = 0.0;
                while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c) v += triplets[i++].value;
                m.col_idx_.push_back(c);
                m.values_.push_back(v);
            }
            m.row_ptr_[r + 1] = static_cast<int>(m.col_idx_.size());
        }
        return m;
    }

    static SparseMatrix identity(int n) {
        std::vector<Triplet> t;
        for (int i = 0; i < n; ++i) t.push_back({i, i, 1.0});
        return from_triplets(n, n, std::move(t));
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }
    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double at(int r, int c) const {
        const auto b = col_idx_.begin() + row_ptr_[r];
        const auto e = col_idx_.begin() + row_ptr_[r + 1];
        const auto it = std::lower_bound(b, e, c);
        return (it != e && *it == c) ? values_[static_cast<std::size_t>(it - col_idx_.begin())] : 0.0;
    }

    /// y = A x
    Vector multiply(std::span<const double> x) const {
        RDMIX_REQUIRE(static_cast<int>(x.size()) == cols_, Error, "sparse: dimension mismatch in multiply");
        Vector y(static_cast<std::size_t>(rows_), 0.0);
        for (int r = 0; r < rows_; ++r) {
            double s = 0.0;
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += values_[p] * x[col_idx_[p]];
            y[r] = s;
        }
        return y;
    }

    /// y = A^T x
    Vector multiply_transpose(std::span<const double> x) const {
        RDMIX_REQUIRE(static_cast<int>(x.size()) == rows_, Error,
                      "sparse: dimension mismatch in multiply_transpose");
        Vector y(static_cast<std::size_t>(cols_), 0.0);
        for (int r = 0; r < rows_; ++r)
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) y[col_idx_[p]] += values_[p] * x[r];
        return y;
    }

    SparseMatrix transpose() const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for (int r = 0; r < rows_; ++r)
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) t.push_back({col_idx_[p], r, values_[p]});
        return from_triplets(cols_, rows_, std::move(t));
    }

    Vector diagonal() const {
        Vector d(static_cast<std::size_t>(std::min(rows_, cols_)), 0.0);
        for (int r = 0; r < static_cast<int>(d.size()); ++r) d[r] = at(r, r);
        return d;
    }

    bool is_symmetric(double tol = 1e-12) const {
        if (rows_ != cols_) return false;
        double scale = 0.0;
        for (double v : values_) scale = std::max(scale, std::abs(v));
        for (int r = 0; r < rows_; ++r)
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
                if (std::abs(values_[p] - at(col_idx_[p], r)) > tol * std::max(scale, 1.0)) return false;
        return true;
    }

    std::vector<Triplet> triplets() const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for (int r = 0; r < rows_; ++r)
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) t.push_back({r, col_idx_[p], values_[p]});
        return t;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
};

/// C = A B (row-wise accumulation with a dense marker).
inline SparseMatrix product(const SparseMatrix& a, const SparseMatrix& b) {
    RDMIX_REQUIRE(a.cols() == b.rows(), Error, "sparse: dimension mismatch in product");
    std::vector<Triplet> t;
    std::vector<double> acc(static_cast<std::size_t>(b.cols()), 0.0);
    std::vector<int> marker(static_cast<std::size_t>(b.cols()), -1);
    std::vector<int> cols;
    for (int r = 0; r < a.rows(); ++r) {
        cols.clear();
        for (int p = a.row_ptr()[r]; p < a.row_ptr()[r + 1]; ++p) {
            const int k = a.col_idx()[p];
            const double av = a.values()[p];
            for (int q = b.row_ptr()[k]; q < b.row_ptr()[k + 1]; ++q) {
                const int c = b.col_idx()[q];
                if (marker[c] != r) {
                    marker[c] = r;
                    acc[c] = 0.0;
                    cols.push_back(c);
                }
                acc[c] += av * b.values()[q];
            }
        }
        for (int c : cols) t.push_back({r, c, acc[c]});
    }
    return SparseMatrix::from_triplets(a.rows(), b.cols(), std::move(t));
}

/// alpha A + beta B
inline SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double alpha = 1.0, double beta = 1.0) {
    RDMIX_REQUIRE(a.rows() == b.rows() && a.cols() == b.cols(), Error, "sparse: dimension mismatch in add");
    auto t = a.triplets();
    for (auto& x : t) x.value *= alpha;
    for (auto x : b.triplets()) {
        x.value *= beta;
        t.push_back(x);
    }
    return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Matrix Market coordinate dump for debugging.
inline void write_matrix_market(const SparseMatrix& a, const std::string& path) {
    std::ofstream out(path);
    RDMIX_REQUIRE(out.good(), Error, "cannot write '" + path + "'");
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n' << std::setprecision(17);
    for (const auto& t : a.triplets()) out << t.row + 1 << ' ' << t.col + 1 << ' ' << t.value << '\n';
}

} // namespace rdmix
