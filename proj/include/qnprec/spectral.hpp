/// @file spectral.hpp
/// @brief Spectra of preconditioned operators and checks of the SR1 spectral bounds.

#ifndef QNPREC_SPECTRAL_HPP
#define QNPREC_SPECTRAL_HPP

#include "dense.hpp"
#include "error.hpp"
#include "sparse.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace qnprec {

struct SpectrumReport {
    enum class Method { dense, lanczos } method = Method::dense;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    std::optional<std::vector<double>> full_spectrum;  ///< ascending, dense path only
    int lanczos_iters = 0;
    bool lanczos_converged = false;
};

inline constexpr index_t dense_spectrum_limit = 2000;

/// Apply an operator to every basis vector.
template <class ApplyP>
DenseMatrix materialize(const ApplyP& apply_p, index_t n, index_t limit = dense_spectrum_limit) {
    if (n > limit) throw SizeLimitError("materialize: n = " + std::to_string(n) + " exceeds limit " + std::to_string(limit));
    DenseMatrix P(n, n);
    Vector e = Vector::Zero(n);
    for (index_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        P.col(j) = apply_p(e);
        e[j] = 0.0;
    }
    return P;
}

/// Ascending eigenvalues of A^{1/2} P A^{1/2} (similar to P A).
inline std::vector<double> symmetrized_eigenvalues(const DenseMatrix& A, const DenseMatrix& P) {
    const DenseMatrix Ah = symmetric_sqrt(A);
    DenseMatrix C = Ah * P * Ah;
    C = 0.5 * (C + C.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(C, Eigen::EigenvaluesOnly);
    const Vector ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

template <class ApplyP>
SpectrumReport preconditioned_spectrum_dense(const SparseMatrix& A, const ApplyP& apply_p,
                                             index_t limit = dense_spectrum_limit) {
    const DenseMatrix P = materialize(apply_p, A.rows(), limit);
    const auto ev = symmetrized_eigenvalues(A.to_dense(), 0.5 * (P + P.transpose()));
    SpectrumReport rep;
    rep.method = SpectrumReport::Method::dense;
    rep.lambda_min = ev.front();
    rep.lambda_max = ev.back();
    rep.full_spectrum = ev;
    return rep;
}

struct LanczosOptions {
    int max_iters = 600;
    double rel_tol = 1e-7;  ///< on the extremal Ritz residual estimates
    int check_every = 10;
    unsigned seed = 7u;
};

/// Extremal eigenvalues of P A by Lanczos in the A inner product, with full
/// reorthogonalization. P A is self-adjoint there whenever P is symmetric.
template <class ApplyP>
SpectrumReport preconditioned_spectrum_lanczos(const SparseMatrix& A, const ApplyP& apply_p,
                                               const LanczosOptions& opt = {}) {
    const index_t n = A.rows();
    const int kmax = static_cast<int>(std::min<index_t>(opt.max_iters, n));
    DenseMatrix V(n, kmax);
    DenseMatrix AV(n, kmax);
    std::vector<double> alpha, beta;

    std::mt19937 gen(opt.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Vector v(n);
    for (index_t i = 0; i < n; ++i) v[i] = unif(gen);
    Vector Av = spmv(A, v);
    double nrm = std::sqrt(v.dot(Av));
    V.col(0) = v / nrm;
    AV.col(0) = Av / nrm;

    SpectrumReport rep;
    rep.method = SpectrumReport::Method::lanczos;
    auto ritz = [&](int m, bool& converged) {
        Vector d = Eigen::Map<const Vector>(alpha.data(), m);
        Vector e = m > 1 ? Vector(Eigen::Map<const Vector>(beta.data(), m - 1)) : Vector();
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es;
        es.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
        const double b_last = static_cast<int>(beta.size()) >= m ? beta[m - 1] : 0.0;
        const double lo = es.eigenvalues()[0];
        const double hi = es.eigenvalues()[m - 1];
        const double res_lo = std::abs(b_last * es.eigenvectors()(m - 1, 0));
        const double res_hi = std::abs(b_last * es.eigenvectors()(m - 1, m - 1));
        converged = res_lo <= opt.rel_tol * std::abs(lo) && res_hi <= opt.rel_tol * std::abs(hi);
        rep.lambda_min = lo;
        rep.lambda_max = hi;
        rep.lanczos_iters = m;
    };

    for (int j = 0; j < kmax; ++j) {
        Vector w = apply_p(Vector(AV.col(j)));
        const double a = w.dot(AV.col(j));
        alpha.push_back(a);
        // two passes of classical Gram-Schmidt in the A inner product
        for (int pass = 0; pass < 2; ++pass) {
            const Vector coef = AV.leftCols(j + 1).transpose() * w;
            w.noalias() -= V.leftCols(j + 1) * coef;
        }
        const Vector Aw = spmv(A, w);
        const double b = std::sqrt(std::max(0.0, w.dot(Aw)));
        beta.push_back(b);
        const bool last = j + 1 == kmax;
        bool converged = false;
        if (last || b <= 1e-14 * std::abs(a) || (j + 1) % opt.check_every == 0) {
            ritz(j + 1, converged);
            if (b <= 1e-14 * std::abs(a)) converged = true;
            if (converged || last) {
                rep.lanczos_converged = converged;
                return rep;
            }
        }
        V.col(j + 1) = w / b;
        AV.col(j + 1) = Aw / b;
    }
    return rep;
}

/// ||P J s - s|| / ||s||.
template <class ApplyP>
double next_step_secant_residual(const ApplyP& apply_p, const SparseMatrix& J_next, const Vector& s) {
    const Vector v = apply_p(spmv(J_next, s)) - s;
    return v.norm() / s.norm();
}

struct InterlacingReport {
    bool skipped = false;          ///< nonpositive SR1 denominator
    bool interlacing_holds = false;
    bool upper_bound_holds = false;
    bool condition_bound_holds = false;
    double denominator = 0.0;
    double z_norm2 = 0.0;          ///< ||z||^2
    double max_violation = 0.0;
    double kappa_before = 0.0;
    double kappa_after = 0.0;
    double kappa_bound = 0.0;
    std::vector<double> before;
    std::vector<double> after;

    bool holds() const { return skipped || (interlacing_holds && upper_bound_holds && condition_bound_holds); }
};

/// Spectra of J^{1/2} P J^{1/2} before and after one SR1 push with the same J.
/// Checks lambda_k(before) <= lambda_k(after) <= lambda_{k+1}(before),
/// lambda_n(after) <= lambda_n(before) + ||z||^2 and
/// kappa(after) <= (1 + ||z||^2 / lambda_n(before)) kappa(before),
/// with z = J^{1/2}(s - P y) / sqrt(y^T (s - P y)).
inline InterlacingReport interlacing_check(const DenseMatrix& J, const DenseMatrix& P_before, const DenseMatrix& P_after,
                                           const Vector& s, const Vector& y, double slack = 1e-10) {
    InterlacingReport rep;
    const Vector v = s - P_before * y;
    rep.denominator = y.dot(v);
    if (!(rep.denominator > 0.0)) {
        rep.skipped = true;
        return rep;
    }
    const DenseMatrix Jh = symmetric_sqrt(J);
    const Vector z = Jh * v / std::sqrt(rep.denominator);
    rep.z_norm2 = z.squaredNorm();
    rep.before = symmetrized_eigenvalues(J, P_before);
    rep.after = symmetrized_eigenvalues(J, P_after);
    const auto n = rep.before.size();
    const double scale = std::max(1.0, std::abs(rep.before.back()) + rep.z_norm2);
    const double tol = slack * scale;
    double viol = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        viol = std::max(viol, rep.before[k] - rep.after[k]);
        if (k + 1 < n) viol = std::max(viol, rep.after[k] - rep.before[k + 1]);
    }
    rep.interlacing_holds = viol <= tol;
    const double up = rep.after.back() - (rep.before.back() + rep.z_norm2);
    rep.upper_bound_holds = up <= tol;
    rep.max_violation = std::max(viol, up);
    rep.kappa_before = rep.before.back() / rep.before.front();
    rep.kappa_after = rep.after.back() / rep.after.front();
    rep.kappa_bound = (1.0 + rep.z_norm2 / rep.before.back()) * rep.kappa_before;
    rep.condition_bound_holds = rep.kappa_after <= rep.kappa_bound * (1.0 + slack);
    return rep;
}

/// ||Jh P Jh x - x|| / ||x|| with x = J^{1/2} s: the eigenvalue-one
/// direction created by a secant-exact update.
inline double secant_eigen_residual(const DenseMatrix& J, const DenseMatrix& P, const Vector& s) {
    const DenseMatrix Jh = symmetric_sqrt(J);
    const Vector x = Jh * s;
    const Vector v = Jh * (P * (Jh * x)) - x;
    return v.norm() / x.norm();
}

} // namespace qnprec

#endif // QNPREC_SPECTRAL_HPP
