/// @file dense.hpp
/// @brief Small dense kernels: symmetric-indefinite LDL^T with Bunch-Kaufman pivoting.

#ifndef QNPREC_DENSE_HPP
#define QNPREC_DENSE_HPP

#include "error.hpp"
#include "sparse.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace qnprec {

/// P^T A P = L D L^T for a small symmetric (possibly indefinite) matrix.
///
/// D is block diagonal with 1x1 and 2x2 blocks. Used for the m-by-m middle
/// matrix of the compact SR1 operator, which need not be definite.
class SymmetricIndefiniteFactor {
public:
    SymmetricIndefiniteFactor() = default;

    explicit SymmetricIndefiniteFactor(const DenseMatrix& A) { compute(A); }

    void compute(const DenseMatrix& A) {
        const index_t n = A.rows();
        if (A.cols() != n) throw DimensionError("SymmetricIndefiniteFactor: matrix not square");
        n_ = n;
        W_ = A;
        L_ = DenseMatrix::Identity(n, n);
        swaps_.clear();
        block_size_.assign(static_cast<std::size_t>(n), 0);
        scale_ = n > 0 ? A.cwiseAbs().maxCoeff() : 0.0;

        const double alpha = (1.0 + std::sqrt(17.0)) / 8.0;
        index_t k = 0;
        while (k < n) {
            double lambda = 0.0;
            index_t r = k;
            for (index_t i = k + 1; i < n; ++i) {
                if (std::abs(W_(i, k)) > lambda) {
                    lambda = std::abs(W_(i, k));
                    r = i;
                }
            }
            int size = 1;
            if (lambda == 0.0 || std::abs(W_(k, k)) >= alpha * lambda) {
                swaps_.emplace_back(k, k);
            } else {
                double sigma = 0.0;
                for (index_t j = k; j < n; ++j)
                    if (j != r) sigma = std::max(sigma, std::abs(W_(j, r)));
                if (std::abs(W_(k, k)) * sigma >= alpha * lambda * lambda) {
                    swaps_.emplace_back(k, k);
                } else if (std::abs(W_(r, r)) >= alpha * sigma) {
                    swap_index(k, r);
                    swaps_.emplace_back(k, r);
                } else {
                    swap_index(k + 1, r);
                    swaps_.emplace_back(k + 1, r);
                    size = 2;
                }
            }
            if (size == 1) {
                block_size_[k] = 1;
                const double d = W_(k, k);
                if (d != 0.0) {
                    for (index_t i = k + 1; i < n; ++i) L_(i, k) = W_(i, k) / d;
                    for (index_t j = k + 1; j < n; ++j)
                        for (index_t i = k + 1; i < n; ++i) W_(i, j) -= L_(i, k) * W_(k, j);
                }
                ++k;
            } else {
                block_size_[k] = 2;
                block_size_[k + 1] = 0;
                const Eigen::Matrix2d E = W_.block<2, 2>(k, k);
                const Eigen::Matrix2d Einv = E.inverse();
                const index_t rest = n - k - 2;
                if (rest > 0) {
                    const DenseMatrix C = W_.block(k + 2, k, rest, 2);
                    const DenseMatrix CE = C * Einv;
                    L_.block(k + 2, k, rest, 2) = CE;
                    W_.block(k + 2, k + 2, rest, rest) -= CE * C.transpose();
                }
                k += 2;
            }
        }
    }

    index_t size() const { return n_; }

    /// Eigenvalues of the D blocks; by Sylvester's law they carry the inertia of A.
    std::vector<double> pivot_eigenvalues() const {
        std::vector<double> out;
        for (index_t k = 0; k < n_;) {
            if (block_size_[k] == 1) {
                out.push_back(W_(k, k));
                ++k;
            } else {
                Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(W_.block<2, 2>(k, k));
                out.push_back(es.eigenvalues()[0]);
                out.push_back(es.eigenvalues()[1]);
                k += 2;
            }
        }
        return out;
    }

    /// Smallest |pivot eigenvalue| relative to max |A_ij|.
    double relative_min_pivot() const {
        if (n_ == 0) return 1.0;
        if (scale_ == 0.0) return 0.0;
        double mn = std::numeric_limits<double>::infinity();
        for (double v : pivot_eigenvalues()) mn = std::min(mn, std::abs(v));
        return mn / scale_;
    }

    bool singular(double rel_tol = 1e3 * std::numeric_limits<double>::epsilon()) const {
        return relative_min_pivot() <= rel_tol;
    }

    bool positive_definite() const {
        for (double v : pivot_eigenvalues())
            if (!(v > 0.0)) return false;
        return true;
    }

    Vector solve(const Vector& b) const {
        if (b.size() != n_) throw DimensionError("SymmetricIndefiniteFactor::solve: size mismatch");
        if (singular(0.0)) throw BreakdownError("symmetric indefinite solve with singular matrix");
        Vector x = b;
        for (const auto& [i, j] : swaps_) std::swap(x[i], x[j]);
        x = L_.triangularView<Eigen::UnitLower>().solve(x);
        for (index_t k = 0; k < n_;) {
            if (block_size_[k] == 1) {
                x[k] /= W_(k, k);
                ++k;
            } else {
                const Eigen::Vector2d v = W_.block<2, 2>(k, k).inverse() * x.segment<2>(k);
                x.segment<2>(k) = v;
                k += 2;
            }
        }
        x = L_.transpose().triangularView<Eigen::UnitUpper>().solve(x);
        for (auto it = swaps_.rbegin(); it != swaps_.rend(); ++it) std::swap(x[it->first], x[it->second]);
        return x;
    }

private:
    // Symmetric interchange of indices i and j (both >= current step) in the
    // working matrix, and of the already computed rows of L.
    void swap_index(index_t i, index_t j) {
        if (i == j) return;
        W_.row(i).swap(W_.row(j));
        W_.col(i).swap(W_.col(j));
        const index_t done = std::min(i, j);
        for (index_t c = 0; c < done; ++c) std::swap(L_(i, c), L_(j, c));
    }

    index_t n_ = 0;
    DenseMatrix W_;
    DenseMatrix L_;
    std::vector<std::pair<index_t, index_t>> swaps_;
    std::vector<int> block_size_;
    double scale_ = 0.0;
};

/// Symmetric positive semidefinite square root via eigendecomposition.
inline DenseMatrix symmetric_sqrt(const DenseMatrix& A) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(A);
    const Vector d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace qnprec

#endif // QNPREC_DENSE_HPP
