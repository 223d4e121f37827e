/// @file problems.hpp
/// @brief Built-in nonlinear test problems A u = lambda d(u).

#ifndef QNPREC_PROBLEMS_HPP
#define QNPREC_PROBLEMS_HPP

#include "error.hpp"
#include "matrix_market.hpp"
#include "sparse.hpp"

#include <cmath>
#include <string>
#include <string_view>

namespace qnprec {

struct Nonlinearity {
    enum class Kind { exponential, cubic } kind = Kind::cubic;
    double lambda = -1.0;

    static Nonlinearity bratu(double lambda = -1.0) { return {Kind::exponential, lambda}; }
    static Nonlinearity phi2() { return {Kind::cubic, -1.0}; }
};

inline std::string_view to_string(Nonlinearity::Kind k) {
    return k == Nonlinearity::Kind::exponential ? "exp" : "cubic";
}

/// F(u) = A u - lambda d(u) with d_i = exp(u_i) (Bratu) or u_i^3 (PHI-2).
class NonlinearProblem {
public:
    NonlinearProblem(SparseMatrix A, Nonlinearity nl) : A_(std::move(A)), nl_(nl) {
        if (!A_.symmetric()) throw Error("NonlinearProblem: A must be symmetric");
    }

    static NonlinearProblem bratu(index_t m, double lambda = -1.0) {
        return {laplacian_2d(m), Nonlinearity::bratu(lambda)};
    }

    static NonlinearProblem phi2(index_t m) { return {laplacian_2d(m), Nonlinearity::phi2()}; }

    index_t size() const { return A_.rows(); }
    const SparseMatrix& matrix() const { return A_; }
    const Nonlinearity& nonlinearity() const { return nl_; }

    /// True when J(u) is SPD for every u (given A SPD).
    bool jacobian_always_spd() const {
        return nl_.lambda <= 0.0;
    }

    Vector residual(const Vector& u) const {
        if (u.size() != size()) throw DimensionError("residual: size mismatch");
        Vector F = spmv(A_, u);
        for (index_t i = 0; i < u.size(); ++i) F[i] -= nl_.lambda * d(u[i]);
        if (!F.allFinite()) throw DivergenceError("residual is not finite");
        return F;
    }

    SparseMatrix jacobian(const Vector& u) const {
        if (u.size() != size()) throw DimensionError("jacobian: size mismatch");
        Vector dd(u.size());
        for (index_t i = 0; i < u.size(); ++i) dd[i] = -nl_.lambda * dprime(u[i]);
        if (!dd.allFinite()) throw DivergenceError("jacobian is not finite");
        return A_.plus_diagonal(dd);
    }

    /// F(x_next) - F(x) for x_next = x + s, with the linear part taken as A s.
    Vector residual_difference(const Vector& x, const Vector& s, const Vector& x_next) const {
        if (x.size() != size() || s.size() != size() || x_next.size() != size())
            throw DimensionError("residual_difference: size mismatch");
        Vector y = spmv(A_, s);
        for (index_t i = 0; i < y.size(); ++i) {
            const double a = x[i];
            const double b = x_next[i];
            const double h = b - a;
            const double dd = nl_.kind == Nonlinearity::Kind::exponential ? std::exp(a) * std::expm1(h)
                                                                           : h * (b * b + a * b + a * a);
            y[i] -= nl_.lambda * dd;
        }
        if (!y.allFinite()) throw DivergenceError("residual difference is not finite");
        return y;
    }

private:
    double d(double v) const { return nl_.kind == Nonlinearity::Kind::exponential ? std::exp(v) : v * v * v; }
    double dprime(double v) const { return nl_.kind == Nonlinearity::Kind::exponential ? std::exp(v) : 3.0 * v * v; }

    SparseMatrix A_;
    Nonlinearity nl_;
};

/// F(x) = A x - b; Newton is exact on it.
class LinearProblem {
public:
    LinearProblem(SparseMatrix A, Vector b) : A_(std::move(A)), b_(std::move(b)) {
        if (b_.size() != A_.rows()) throw DimensionError("LinearProblem: size mismatch");
    }

    index_t size() const { return A_.rows(); }
    const SparseMatrix& matrix() const { return A_; }
    Vector residual(const Vector& x) const { return spmv(A_, x) - b_; }
    SparseMatrix jacobian(const Vector&) const { return A_; }
    Vector residual_difference(const Vector&, const Vector& s, const Vector&) const { return spmv(A_, s); }

private:
    SparseMatrix A_;
    Vector b_;
};

inline NonlinearProblem load_mm_problem(const std::string& path, Nonlinearity nl) {
    return {read_matrix_market(path), nl};
}

} // namespace qnprec

#endif // QNPREC_PROBLEMS_HPP
