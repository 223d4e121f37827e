/// @file sparse.hpp
/// @brief CSR storage for symmetric sparse matrices, spmv and vector kernels.

#ifndef QNPREC_SPARSE_HPP
#define QNPREC_SPARSE_HPP

#include "error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

namespace qnprec {

using index_t = std::ptrdiff_t;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// One (row, col, value) entry used to assemble a SparseMatrix.
struct Triplet {
    index_t row;
    index_t col;
    double value;
};

/// Square sparse matrix in compressed-sparse-row layout.
///
/// Symmetric matrices keep the full pattern (both triangles), so spmv is a
/// plain row sweep and the lower triangle can be pulled out for factorization.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Assemble from unordered triplets; duplicates are summed.
    static SparseMatrix from_triplets(index_t n, std::vector<Triplet> entries, bool symmetric) {
        if (n < 0) throw DimensionError("negative matrix dimension");
        for (const auto& t : entries) {
            if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
                throw DimensionError("triplet index out of range");
        }
        std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        SparseMatrix A;
        A.n_ = n;
        A.symmetric_ = symmetric;
        A.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto& t = entries[k];
            if (!A.col_idx_.empty() && k > 0 && entries[k - 1].row == t.row &&
                entries[k - 1].col == t.col) {
                A.values_.back() += t.value;
                continue;
            }
            A.col_idx_.push_back(t.col);
            A.values_.push_back(t.value);
            ++A.row_ptr_[static_cast<std::size_t>(t.row) + 1];
        }
        for (index_t i = 0; i < n; ++i) A.row_ptr_[i + 1] += A.row_ptr_[i];
        if (symmetric && !A.is_structurally_symmetric())
            throw Error("matrix flagged symmetric but entries are not mirrored");
        return A;
    }

    /// Build directly from CSR arrays; invariants are validated.
    static SparseMatrix from_csr(index_t n, std::vector<index_t> row_ptr, std::vector<index_t> col_idx,
                                 std::vector<double> values, bool symmetric) {
        SparseMatrix A;
        A.n_ = n;
        A.row_ptr_ = std::move(row_ptr);
        A.col_idx_ = std::move(col_idx);
        A.values_ = std::move(values);
        A.symmetric_ = symmetric;
        A.validate();
        return A;
    }

    index_t rows() const { return n_; }
    index_t nnz() const { return static_cast<index_t>(values_.size()); }
    bool symmetric() const { return symmetric_; }

    const std::vector<index_t>& row_ptr() const { return row_ptr_; }
    const std::vector<index_t>& col_idx() const { return col_idx_; }
    const std::vector<double>& values() const { return values_; }

    /// Entry (i, j), zero when not stored.
    double coeff(index_t i, index_t j) const {
        const auto first = col_idx_.begin() + row_ptr_[i];
        const auto last = col_idx_.begin() + row_ptr_[i + 1];
        const auto it = std::lower_bound(first, last, j);
        if (it == last || *it != j) return 0.0;
        return values_[static_cast<std::size_t>(it - col_idx_.begin())];
    }

    Vector diagonal() const {
        Vector d = Vector::Zero(n_);
        for (index_t i = 0; i < n_; ++i) d[i] = coeff(i, i);
        return d;
    }

    /// Euclidean norm of column j (equal to row j for symmetric storage).
    double column_norm(index_t j) const {
        double s = 0.0;
        if (symmetric_) {
            for (index_t k = row_ptr_[j]; k < row_ptr_[j + 1]; ++k) s += values_[k] * values_[k];
        } else {
            for (index_t i = 0; i < n_; ++i) {
                const double v = coeff(i, j);
                s += v * v;
            }
        }
        return std::sqrt(s);
    }

    /// Lower triangle (diagonal included) as a non-symmetric CSR matrix.
    SparseMatrix lower() const {
        SparseMatrix L;
        L.n_ = n_;
        L.symmetric_ = false;
        L.row_ptr_.assign(static_cast<std::size_t>(n_) + 1, 0);
        for (index_t i = 0; i < n_; ++i) {
            for (index_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                if (col_idx_[k] > i) break;
                L.col_idx_.push_back(col_idx_[k]);
                L.values_.push_back(values_[k]);
            }
            L.row_ptr_[i + 1] = static_cast<index_t>(L.col_idx_.size());
        }
        return L;
    }

    /// A + diag(d), keeping the pattern of A plus the full diagonal.
    SparseMatrix plus_diagonal(const Vector& d) const {
        if (d.size() != n_) throw DimensionError("plus_diagonal: size mismatch");
        std::vector<Triplet> t;
        t.reserve(values_.size() + static_cast<std::size_t>(n_));
        for (index_t i = 0; i < n_; ++i) {
            for (index_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) t.push_back({i, col_idx_[k], values_[k]});
            t.push_back({i, i, d[i]});
        }
        return from_triplets(n_, std::move(t), symmetric_);
    }

    DenseMatrix to_dense() const {
        DenseMatrix D = DenseMatrix::Zero(n_, n_);
        for (index_t i = 0; i < n_; ++i)
            for (index_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) D(i, col_idx_[k]) = values_[k];
        return D;
    }

    /// Throws if the CSR invariants are violated.
    void validate() const {
        if (static_cast<index_t>(row_ptr_.size()) != n_ + 1 || row_ptr_.front() != 0 ||
            row_ptr_.back() != static_cast<index_t>(col_idx_.size()) || col_idx_.size() != values_.size())
            throw Error("CSR arrays have inconsistent lengths");
        for (index_t i = 0; i < n_; ++i) {
            if (row_ptr_[i + 1] < row_ptr_[i]) throw Error("row_ptr is not nondecreasing");
            for (index_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                if (col_idx_[k] < 0 || col_idx_[k] >= n_) throw Error("column index out of range");
                if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
                    throw Error("column indices not strictly increasing in row " + std::to_string(i));
            }
        }
        if (symmetric_ && !is_structurally_symmetric())
            throw Error("matrix flagged symmetric but entries are not mirrored");
    }

    /// True when every stored (i,j,v) has an identical (j,i,v).
    bool is_structurally_symmetric() const {
        for (index_t i = 0; i < n_; ++i) {
            for (index_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                const index_t j = col_idx_[k];
                const auto first = col_idx_.begin() + row_ptr_[j];
                const auto last = col_idx_.begin() + row_ptr_[j + 1];
                const auto it = std::lower_bound(first, last, i);
                if (it == last || *it != i) return false;
                if (values_[static_cast<std::size_t>(it - col_idx_.begin())] != values_[k]) return false;
            }
        }
        return true;
    }

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
    index_t n_ = 0;
    std::vector<index_t> row_ptr_{0};
    std::vector<index_t> col_idx_;
    std::vector<double> values_;
    bool symmetric_ = false;
};

/// y = A x. Each row is summed left to right, so results are reproducible.
inline void spmv_into(const SparseMatrix& A, const Vector& x, Vector& y) {
    if (x.size() != A.rows()) throw DimensionError("spmv: vector length does not match matrix");
    y.resize(A.rows());
    const auto& rp = A.row_ptr();
    const auto& ci = A.col_idx();
    const auto& v = A.values();
    for (index_t i = 0; i < A.rows(); ++i) {
        double sum = 0.0;
        for (index_t k = rp[i]; k < rp[i + 1]; ++k) sum += v[k] * x[ci[k]];
        y[i] = sum;
    }
}

inline Vector spmv(const SparseMatrix& A, const Vector& x) {
    Vector y;
    spmv_into(A, x, y);
    return y;
}

inline double dot(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw DimensionError("dot: length mismatch");
    return x.dot(y);
}

/// y <- a x + y
inline void axpy(double a, const Vector& x, Vector& y) {
    if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
    y += a * x;
}

inline double norm2(const Vector& x) { return x.norm(); }

inline void scale(double a, Vector& x) { x *= a; }

inline bool all_finite(const Vector& x) { return x.allFinite(); }

inline SparseMatrix identity_matrix(index_t n) {
    std::vector<Triplet> t;
    for (index_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return SparseMatrix::from_triplets(n, std::move(t), true);
}

inline SparseMatrix diagonal_matrix(const Vector& d) {
    std::vector<Triplet> t;
    for (index_t i = 0; i < d.size(); ++i) t.push_back({i, i, d[i]});
    return SparseMatrix::from_triplets(d.size(), std::move(t), true);
}

/// Five-point Laplacian on an m-by-m interior grid: 4 on the diagonal,
/// -1 for each horizontal/vertical neighbour, no h^-2 scaling. n = m*m.
inline SparseMatrix laplacian_2d(index_t m) {
    if (m < 1) throw DimensionError("laplacian_2d needs m >= 1");
    const index_t n = m * m;
    std::vector<index_t> row_ptr(static_cast<std::size_t>(n) + 1, 0);
    std::vector<index_t> col_idx;
    std::vector<double> values;
    col_idx.reserve(static_cast<std::size_t>(5 * n));
    values.reserve(static_cast<std::size_t>(5 * n));
    for (index_t iy = 0; iy < m; ++iy) {
        for (index_t ix = 0; ix < m; ++ix) {
            const index_t i = iy * m + ix;
            auto put = [&](index_t j, double v) {
                col_idx.push_back(j);
                values.push_back(v);
            };
            if (iy > 0) put(i - m, -1.0);
            if (ix > 0) put(i - 1, -1.0);
            put(i, 4.0);
            if (ix + 1 < m) put(i + 1, -1.0);
            if (iy + 1 < m) put(i + m, -1.0);
            row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<index_t>(col_idx.size());
        }
    }
    return SparseMatrix::from_csr(n, std::move(row_ptr), std::move(col_idx), std::move(values), true);
}

} // namespace qnprec

#endif // QNPREC_SPARSE_HPP
