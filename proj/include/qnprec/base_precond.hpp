/// @file base_precond.hpp
/// @brief Initial preconditioners P0: identity, Jacobi and incomplete Cholesky.

#ifndef QNPREC_BASE_PRECOND_HPP
#define QNPREC_BASE_PRECOND_HPP

#include "error.hpp"
#include "sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace qnprec {

/// Lower-triangular incomplete Cholesky factor, applied as sigma * L.
struct TriangularFactor {
    SparseMatrix L;       ///< row-oriented lower triangle, positive diagonal
    double sigma = 1.0;   ///< scaling; P0 = ((sigma L)(sigma L)^T)^{-1}
    double shift = 0.0;   ///< alpha of A + alpha diag(A) if breakdown recovery kicked in

    index_t size() const { return L.rows(); }

    /// x <- (sigma L)^{-T} (sigma L)^{-1} x
    void solve_in_place(Vector& x) const {
        const auto& rp = L.row_ptr();
        const auto& ci = L.col_idx();
        const auto& v = L.values();
        const index_t n = L.rows();
        for (index_t i = 0; i < n; ++i) {
            double sum = x[i];
            const index_t diag = rp[i + 1] - 1;
            for (index_t k = rp[i]; k < diag; ++k) sum -= v[k] * x[ci[k]];
            x[i] = sum / v[diag];
        }
        for (index_t i = n - 1; i >= 0; --i) {
            const index_t diag = rp[i + 1] - 1;
            x[i] /= v[diag];
            const double xi = x[i];
            for (index_t k = rp[i]; k < diag; ++k) x[ci[k]] -= v[k] * xi;
        }
        if (sigma != 1.0) x /= sigma * sigma;
    }
};

/// Fill strategy for ic_factor.
struct IcMode {
    enum class Kind { no_fill, drop_tol } kind = Kind::no_fill;
    double tau = 0.0;

    static IcMode no_fill() { return {}; }
    static IcMode drop_tol(double t) { return {Kind::drop_tol, t}; }
};

/// Left-looking incomplete Cholesky of a symmetric matrix.
///
/// no_fill keeps exactly the pattern of lower(A). drop_tol computes each
/// column in full and discards l_ij with |l_ij| < tau * ||A(:,j)||_2.
/// Throws PivotBreakdown on a nonpositive pivot.
inline TriangularFactor ic_factor(const SparseMatrix& A, IcMode mode) {
    if (!A.symmetric()) throw Error("ic_factor: matrix must be flagged symmetric");
    if (mode.kind == IcMode::Kind::drop_tol && !(mode.tau > 0.0)) throw Error("ic_factor: drop tolerance must be positive");
    const index_t n = A.rows();
    const auto& rp = A.row_ptr();
    const auto& ci = A.col_idx();
    const auto& av = A.values();
    const bool no_fill = mode.kind == IcMode::Kind::no_fill;

    // L in compressed-column form while factoring
    std::vector<index_t> col_ptr{0};
    std::vector<index_t> row_idx;
    std::vector<double> val;
    col_ptr.reserve(static_cast<std::size_t>(n) + 1);

    std::vector<index_t> next_pos(static_cast<std::size_t>(n), -1);
    std::vector<index_t> head(static_cast<std::size_t>(n), -1);
    std::vector<index_t> link(static_cast<std::size_t>(n), -1);
    Vector w = Vector::Zero(n);
    std::vector<index_t> mark(static_cast<std::size_t>(n), -1);
    std::vector<index_t> nz;

    auto enqueue = [&](index_t k) {
        const index_t p = next_pos[k];
        if (p < col_ptr[k + 1]) {
            const index_t r = row_idx[p];
            link[k] = head[r];
            head[r] = k;
        }
    };

    for (index_t j = 0; j < n; ++j) {
        nz.clear();
        for (index_t k = rp[j]; k < rp[j + 1]; ++k) {
            const index_t i = ci[k];
            if (i < j) continue;
            w[i] = av[k];
            mark[i] = j;
            nz.push_back(i);
        }
        if (mark[j] != j) {
            w[j] = 0.0;
            mark[j] = j;
            nz.push_back(j);
        }

        for (index_t k = head[j]; k != -1;) {
            const index_t following = link[k];
            const index_t pos = next_pos[k];
            const double ljk = val[pos];
            for (index_t p = pos; p < col_ptr[k + 1]; ++p) {
                const index_t i = row_idx[p];
                if (mark[i] != j) {
                    if (no_fill) continue;
                    mark[i] = j;
                    w[i] = 0.0;
                    nz.push_back(i);
                }
                w[i] -= val[p] * ljk;
            }
            next_pos[k] = pos + 1;
            enqueue(k);
            k = following;
        }

        const double pivot = w[j];
        if (!(pivot > 0.0)) throw PivotBreakdown(static_cast<std::size_t>(j), pivot);
        const double ljj = std::sqrt(pivot);
        const double drop = no_fill ? 0.0 : mode.tau * A.column_norm(j);

        std::sort(nz.begin(), nz.end());
        row_idx.push_back(j);
        val.push_back(ljj);
        for (index_t i : nz) {
            if (i == j) continue;
            const double lij = w[i] / ljj;
            if (!no_fill && std::abs(lij) < drop) continue;
            if (lij == 0.0 && !no_fill) continue;
            row_idx.push_back(i);
            val.push_back(lij);
        }
        col_ptr.push_back(static_cast<index_t>(row_idx.size()));
        next_pos[j] = col_ptr[j] + 1;
        enqueue(j);
    }

    // transpose CSC -> CSR, rows sorted by construction (columns visited in order)
    std::vector<index_t> lrp(static_cast<std::size_t>(n) + 1, 0);
    for (index_t r : row_idx) ++lrp[static_cast<std::size_t>(r) + 1];
    for (index_t i = 0; i < n; ++i) lrp[i + 1] += lrp[i];
    std::vector<index_t> lci(row_idx.size());
    std::vector<double> lv(row_idx.size());
    std::vector<index_t> fill(lrp.begin(), lrp.end() - 1);
    for (index_t j = 0; j < n; ++j) {
        for (index_t p = col_ptr[j]; p < col_ptr[j + 1]; ++p) {
            const index_t r = row_idx[p];
            lci[fill[r]] = j;
            lv[fill[r]] = val[p];
            ++fill[r];
        }
    }
    TriangularFactor F;
    F.L = SparseMatrix::from_csr(n, std::move(lrp), std::move(lci), std::move(lv), false);
    return F;
}

/// ic_factor with diagonal-shift recovery: on breakdown retry with
/// A + alpha diag(A), alpha = 1e-3 doubling, at most `max_retries` times.
inline TriangularFactor ic_factor_shifted(const SparseMatrix& A, IcMode mode, int max_retries = 5) {
    try {
        return ic_factor(A, mode);
    } catch (const PivotBreakdown&) {
        if (max_retries <= 0) throw;
    }
    double alpha = 1e-3;
    const Vector d = A.diagonal();
    for (int attempt = 1;; ++attempt, alpha *= 2.0) {
        try {
            auto F = ic_factor(A.plus_diagonal(alpha * d), mode);
            F.shift = alpha;
            return F;
        } catch (const PivotBreakdown&) {
            if (attempt >= max_retries) throw;
        }
    }
}

struct IdentityBase {
    index_t n = 0;
};

struct JacobiBase {
    Vector d;  ///< positive diagonal; application divides by it
};

struct IcBase {
    TriangularFactor factor;
};

/// The initial preconditioner P0 = B0^{-1}.
class BasePreconditioner {
public:
    using Variant = std::variant<IdentityBase, JacobiBase, IcBase>;

    BasePreconditioner() = default;
    explicit BasePreconditioner(Variant v) : v_(std::move(v)) {}

    static BasePreconditioner identity(index_t n) { return BasePreconditioner(IdentityBase{n}); }

    static BasePreconditioner jacobi(Vector d) {
        for (index_t i = 0; i < d.size(); ++i)
            if (d[i] == 0.0) throw Error("Jacobi preconditioner: zero diagonal at row " + std::to_string(i));
        return BasePreconditioner(JacobiBase{std::move(d)});
    }

    static BasePreconditioner jacobi(const SparseMatrix& A) { return jacobi(A.diagonal()); }

    static BasePreconditioner incomplete_cholesky(TriangularFactor f) { return BasePreconditioner(IcBase{std::move(f)}); }

    const Variant& variant() const { return v_; }
    Variant& variant() { return v_; }

    index_t size() const {
        return std::visit(
            [](const auto& b) -> index_t {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, IdentityBase>) return b.n;
                else if constexpr (std::is_same_v<T, JacobiBase>) return b.d.size();
                else return b.factor.size();
            },
            v_);
    }

    std::string name() const {
        return std::visit(
            [](const auto& b) -> std::string {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, IdentityBase>) return "identity";
                else if constexpr (std::is_same_v<T, JacobiBase>) return "jacobi";
                else return "ic";
            },
            v_);
    }

    void apply_in_place(Vector& x) const {
        if (x.size() != size()) throw DimensionError("base preconditioner: size mismatch");
        std::visit(
            [&x](const auto& b) {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, JacobiBase>) x.array() /= b.d.array();
                else if constexpr (std::is_same_v<T, IcBase>) b.factor.solve_in_place(x);
            },
            v_);
    }

    Vector apply(const Vector& r) const {
        Vector x = r;
        apply_in_place(x);
        return x;
    }

    Vector operator()(const Vector& r) const { return apply(r); }

private:
    Variant v_{IdentityBase{}};
};

inline Vector apply_base(const BasePreconditioner& P0, const Vector& r) { return P0.apply(r); }

/// Rayleigh quotients of power iteration on P0 A in the A inner product.
/// Entry 0 is the start vector's quotient; the sequence is nondecreasing.
template <class ApplyP>
std::vector<double> power_iteration_estimates(const SparseMatrix& A, const ApplyP& apply_p, int iters,
                                              unsigned seed = 20240613u) {
    const index_t n = A.rows();
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector x(n);
    for (index_t i = 0; i < n; ++i) x[i] = unif(gen);
    x.normalize();
    std::vector<double> out;
    Vector ax;
    for (int it = 0; it <= iters; ++it) {
        spmv_into(A, x, ax);
        Vector px = apply_p(ax);
        out.push_back(ax.dot(px) / x.dot(ax));
        if (it == iters) break;
        const double nrm = px.norm();
        if (nrm == 0.0) break;
        x = px / nrm;
    }
    return out;
}

/// Estimate lambda_max(P0 A) by `iters` power steps.
inline double estimate_beta(const SparseMatrix& A, const BasePreconditioner& P0, int iters) {
    return power_iteration_estimates(A, P0, iters).back();
}

/// Scale the factor so that beta / sigma^2 stays below one:
/// sigma *= max(1, sqrt(beta * margin)). Returns the applied multiplier.
inline double scale_for_spd(TriangularFactor& factor, double beta_estimate, double margin) {
    if (!(beta_estimate > 0.0)) throw Error("scale_for_spd: beta estimate must be positive");
    if (!(margin > 1.0)) throw Error("scale_for_spd: margin must exceed 1");
    const double s = std::max(1.0, std::sqrt(beta_estimate * margin));
    factor.sigma *= s;
    return s;
}

/// Same scaling for any base preconditioner (Jacobi diagonal scaled by s^2).
inline double scale_for_spd(BasePreconditioner& P0, double beta_estimate, double margin) {
    return std::visit(
        [&](auto& b) -> double {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, IcBase>) {
                return scale_for_spd(b.factor, beta_estimate, margin);
            } else {
                if (!(beta_estimate > 0.0)) throw Error("scale_for_spd: beta estimate must be positive");
                if (!(margin > 1.0)) throw Error("scale_for_spd: margin must exceed 1");
                const double s = std::max(1.0, std::sqrt(beta_estimate * margin));
                if constexpr (std::is_same_v<T, JacobiBase>) {
                    b.d *= s * s;
                } else if (s != 1.0) {
                    throw Error("scale_for_spd: identity base cannot be scaled");
                }
                return s;
            }
        },
        P0.variant());
}

/// Which P0 to build from a Jacobian.
struct BaseSpec {
    enum class Kind { identity, jacobi, ic0, ict } kind = Kind::ic0;
    double tau = 0.0;  ///< drop tolerance for ict
};

inline std::string to_string(const BaseSpec& b) {
    switch (b.kind) {
    case BaseSpec::Kind::identity: return "identity";
    case BaseSpec::Kind::jacobi: return "jacobi";
    case BaseSpec::Kind::ic0: return "ic0";
    case BaseSpec::Kind::ict: {
        char buf[48];
        std::snprintf(buf, sizeof buf, "ict:%g", b.tau);
        return buf;
    }
    }
    return "?";
}

inline BasePreconditioner make_base_preconditioner(const SparseMatrix& J, const BaseSpec& spec) {
    switch (spec.kind) {
    case BaseSpec::Kind::identity: return BasePreconditioner::identity(J.rows());
    case BaseSpec::Kind::jacobi: return BasePreconditioner::jacobi(J);
    case BaseSpec::Kind::ic0: return BasePreconditioner::incomplete_cholesky(ic_factor_shifted(J, IcMode::no_fill()));
    case BaseSpec::Kind::ict: return BasePreconditioner::incomplete_cholesky(ic_factor_shifted(J, IcMode::drop_tol(spec.tau)));
    }
    throw Error("unknown base preconditioner");
}

} // namespace qnprec

#endif // QNPREC_BASE_PRECOND_HPP
