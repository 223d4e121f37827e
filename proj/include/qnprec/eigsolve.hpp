/// @file eigsolve.hpp
/// @brief Newton-Grassmann iteration for the leftmost eigenpair of an SPD matrix.
///
/// Each outer step solves the projected correction equation
///   (I - u u^T)(A - theta I)(I - u u^T) s = -(A u - theta u),  s ⟂ u
/// by PCG with a deflated, quasi-Newton updated preconditioner, and sets
/// u <- (u + s) / ||u + s||.

#ifndef QNPREC_EIGSOLVE_HPP
#define QNPREC_EIGSOLVE_HPP

#include "base_precond.hpp"
#include "error.hpp"
#include "pcg.hpp"
#include "qn_window.hpp"
#include "sparse.hpp"

#include <chrono>
#include <cmath>
#include <string_view>
#include <vector>

namespace qnprec {

struct EigenConfig {
    double outer_tol_factor = 1e-8;   ///< stop when ||r|| < theta * factor
    double warmup_tol_factor = 1e-2;  ///< warm-up until ||r|| < theta * factor
    int inner_max_iters = 50;
    double inner_rel_tol = 1e-1;
    int outer_max_iters = 200;
    int warmup_max_iters = 200;
    double warmup_pcg_tol = 1e-2;
    UpdateKind update_kind = UpdateKind::none;
    int kmax = 0;
    double r_skip = 1e-4;
    bool spd_policy = true;
    Sr1Reference sr1_reference = Sr1Reference::aggregate;
    BaseSpec base;
    double scaling_margin = 0.0;  ///< > 1 enables scale_for_spd on the IC factor of A
    int beta_iters = 30;
};

struct EigenRecord {
    int k = 0;
    double theta = 0.0;
    double residual_norm = 0.0;
    int inner_iters = 0;
    PcgFlag flag = PcgFlag::converged;
    UpdateDecision decision;
};

enum class EigenStatus { converged, max_iters, pcg_breakdown };

inline std::string_view to_string(EigenStatus s) {
    switch (s) {
    case EigenStatus::converged: return "converged";
    case EigenStatus::max_iters: return "max_iters";
    case EigenStatus::pcg_breakdown: return "pcg_breakdown";
    }
    return "?";
}

struct EigenTrace {
    std::vector<EigenRecord> records;
    int nlit = 0;
    long totlin = 0;
    int warmup_iters = 0;
    long warmup_linear = 0;
    double wall_time = 0.0;
    double sigma = 1.0;
    double max_inner_orthogonality = 0.0;  ///< max |u^T s| / ||s|| over outer steps
    EigenStatus status = EigenStatus::max_iters;
};

struct EigenResult {
    double lambda = 0.0;
    Vector u;
    EigenTrace trace;
    bool converged() const { return trace.status == EigenStatus::converged; }
};

inline double rayleigh_quotient(const SparseMatrix& A, const Vector& u) {
    const double uu = u.squaredNorm();
    if (uu == 0.0) throw Error("rayleigh_quotient: zero vector");
    return u.dot(spmv(A, u)) / uu;
}

/// (I - u u^T)(A - theta I)(I - u u^T) v for unit u.
inline Vector projected_apply(const SparseMatrix& A, double theta, const Vector& u, const Vector& v) {
    Vector w = v - u.dot(v) * u;
    Vector out = spmv(A, w) - theta * w;
    out -= u.dot(out) * u;
    return out;
}

/// z = P v - P u (u^T P v) / (u^T P u), given Pu = P u precomputed.
template <class ApplyP>
Vector projected_precond_apply(const ApplyP& apply_p, const Vector& u, const Vector& Pu, const Vector& v) {
    const double uPu = u.dot(Pu);
    if (!(uPu > 0.0)) throw BreakdownError("deflated preconditioner: u^T P u <= 0");
    Vector z = apply_p(v);
    z -= (u.dot(z) / uPu) * Pu;
    return z;
}

template <class ApplyP>
Vector projected_precond_apply(const ApplyP& apply_p, const Vector& u, const Vector& v) {
    return projected_precond_apply(apply_p, u, apply_p(u), v);
}

/// Leftmost eigenpair of SPD A from the start vector u0.
inline EigenResult newton_grassmann(const SparseMatrix& A, const Vector& u0, const EigenConfig& cfg) {
    if (u0.size() != A.rows()) throw DimensionError("newton_grassmann: start vector size mismatch");
    if (u0.norm() == 0.0) throw Error("newton_grassmann: zero start vector");
    const auto t0 = std::chrono::steady_clock::now();
    const index_t n = A.rows();

    EigenResult res;
    auto& tr = res.trace;
    Vector u = u0.normalized();

    BasePreconditioner P0 = make_base_preconditioner(A, cfg.base);
    if (cfg.scaling_margin > 1.0) tr.sigma = scale_for_spd(P0, estimate_beta(A, P0, cfg.beta_iters), cfg.scaling_margin);

    auto finish = [&](EigenStatus st) {
        tr.status = st;
        res.u = u;
        res.lambda = rayleigh_quotient(A, u);
        tr.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
    };

    // warm-up: preconditioned inverse iteration with a loose inner tolerance
    Vector Au = spmv(A, u);
    double theta = u.dot(Au);
    Vector r = Au - theta * u;
    {
        PcgConfig wc{cfg.warmup_pcg_tol, 2000};
        while (r.norm() >= theta * cfg.warmup_tol_factor && tr.warmup_iters < cfg.warmup_max_iters) {
            const auto out = pcg(A, u, P0, wc);
            tr.warmup_linear += out.iters;
            ++tr.warmup_iters;
            u = out.x.normalized();
            Au = spmv(A, u);
            theta = u.dot(Au);
            r = Au - theta * u;
        }
    }

    QNWindow window(n, cfg.update_kind == UpdateKind::none ? 0 : cfg.kmax, cfg.update_kind);
    const QuasiNewtonPreconditioner Pk(P0, window);
    const PushOptions push_opt{cfg.r_skip, cfg.spd_policy, cfg.sr1_reference};
    const PcgConfig inner{cfg.inner_rel_tol, cfg.inner_max_iters};

    for (int k = 0;; ++k) {
        const double rnorm = r.norm();
        EigenRecord rec;
        rec.k = k;
        rec.theta = theta;
        rec.residual_norm = rnorm;
        if (rnorm < theta * cfg.outer_tol_factor) {
            tr.records.push_back(rec);
            return finish(EigenStatus::converged);
        }
        if (k >= cfg.outer_max_iters) {
            tr.records.push_back(rec);
            return finish(EigenStatus::max_iters);
        }

        const Vector Pu = Pk(u);
        if (!(u.dot(Pu) > 0.0)) {
            rec.flag = PcgFlag::breakdown_rz;
            tr.records.push_back(rec);
            return finish(EigenStatus::pcg_breakdown);
        }
        const auto apply_j = [&](const Vector& v) { return projected_apply(A, theta, u, v); };
        const auto apply_p = [&](const Vector& v) { return projected_precond_apply(Pk, u, Pu, v); };
        const Vector b = -r;
        const PcgOutcome lin = pcg(apply_j, b, apply_p, inner, Vector::Zero(n));
        rec.inner_iters = lin.iters;
        rec.flag = lin.flag;
        tr.totlin += lin.iters;
        if (is_breakdown(lin.flag)) {
            tr.records.push_back(rec);
            return finish(EigenStatus::pcg_breakdown);
        }
        Vector s = lin.x;
        const double snorm = s.norm();
        if (snorm > 0.0) tr.max_inner_orthogonality = std::max(tr.max_inner_orthogonality, std::abs(u.dot(s)) / snorm);
        s -= u.dot(s) * u;

        u = (u + s).normalized();
        ++tr.nlit;
        Au = spmv(A, u);
        theta = u.dot(Au);
        Vector r_next = Au - theta * u;
        Vector y = r_next - r;
        y -= u.dot(y) * u;
        rec.decision = window.push(s, y, P0, push_opt);
        tr.records.push_back(rec);
        r = std::move(r_next);
    }
}

} // namespace qnprec

#endif // QNPREC_EIGSOLVE_HPP
