/// @file pcg.hpp
/// @brief Preconditioned conjugate gradient with operator-valued A and P.

#ifndef QNPREC_PCG_HPP
#define QNPREC_PCG_HPP

#include "error.hpp"
#include "sparse.hpp"

#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

namespace qnprec {

struct PcgConfig {
    double rel_tol = 1e-6;
    int max_iters = 2000;
};

enum class PcgFlag { converged, max_iters, breakdown_pAp, breakdown_rz };

inline std::string_view to_string(PcgFlag f) {
    switch (f) {
    case PcgFlag::converged: return "converged";
    case PcgFlag::max_iters: return "max_iters";
    case PcgFlag::breakdown_pAp: return "breakdown_pAp";
    case PcgFlag::breakdown_rz: return "breakdown_rz";
    }
    return "?";
}

inline bool is_breakdown(PcgFlag f) { return f == PcgFlag::breakdown_pAp || f == PcgFlag::breakdown_rz; }

struct PcgOutcome {
    Vector x;
    int iters = 0;
    std::vector<double> rel_residuals;  ///< ||b - A x_i|| / ||b||, entry 0 is the start
    PcgFlag flag = PcgFlag::max_iters;
};

/// Solve A x = b. `apply_a` and `apply_p` map a Vector to a Vector.
///
/// Stops when the true residual ||b - A x|| <= rel_tol ||b||. The true
/// residual is recomputed every step; the recurrence residual drives the
/// search directions. p^T A p <= eps ||p||^2 flags breakdown_pAp and
/// r^T z <= 0 flags breakdown_rz; both return the last iterate.
template <class ApplyA, class ApplyP>
PcgOutcome pcg(const ApplyA& apply_a, const Vector& b, const ApplyP& apply_p, const PcgConfig& cfg, const Vector& x0) {
    if (!(cfg.rel_tol > 0.0 && cfg.rel_tol < 1.0)) throw Error("pcg: rel_tol must lie in (0,1)");
    if (cfg.max_iters < 1) throw Error("pcg: max_iters must be >= 1");
    if (x0.size() != b.size()) throw DimensionError("pcg: x0 and b differ in length");

    PcgOutcome out;
    out.x = x0;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        out.x.setZero();
        out.rel_residuals.push_back(0.0);
        out.flag = PcgFlag::converged;
        return out;
    }
    Vector r = b - apply_a(out.x);
    double rel = r.norm() / bnorm;
    out.rel_residuals.push_back(rel);
    if (rel <= cfg.rel_tol) {
        out.flag = PcgFlag::converged;
        return out;
    }
    Vector z = apply_p(r);
    double rz = r.dot(z);
    if (!(rz > 0.0)) {
        out.flag = PcgFlag::breakdown_rz;
        return out;
    }
    Vector p = z;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const Vector q = apply_a(p);
        const double pap = p.dot(q);
        if (!(pap > eps * p.squaredNorm())) {
            out.flag = PcgFlag::breakdown_pAp;
            return out;
        }
        const double alpha = rz / pap;
        out.x.noalias() += alpha * p;
        r.noalias() -= alpha * q;
        out.iters = it;
        rel = (b - apply_a(out.x)).norm() / bnorm;
        out.rel_residuals.push_back(rel);
        if (rel <= cfg.rel_tol) {
            out.flag = PcgFlag::converged;
            return out;
        }
        z = apply_p(r);
        const double rz_new = r.dot(z);
        if (!(rz_new > 0.0)) {
            out.flag = PcgFlag::breakdown_rz;
            return out;
        }
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    out.flag = PcgFlag::max_iters;
    return out;
}

/// Convenience overload for a sparse matrix.
template <class ApplyP>
PcgOutcome pcg(const SparseMatrix& A, const Vector& b, const ApplyP& apply_p, const PcgConfig& cfg) {
    return pcg([&A](const Vector& v) { return spmv(A, v); }, b, apply_p, cfg, Vector::Zero(b.size()));
}

} // namespace qnprec

#endif // QNPREC_PCG_HPP
