/// @file newton.hpp
/// @brief Inexact Newton driver with quasi-Newton updated PCG preconditioning.

#ifndef QNPREC_NEWTON_HPP
#define QNPREC_NEWTON_HPP

#include "base_precond.hpp"
#include "error.hpp"
#include "pcg.hpp"
#include "qn_window.hpp"
#include "sparse.hpp"

#include <algorithm>
#include <chrono>
#include <concepts>
#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace qnprec {

/// Anything with residual(x) -> Vector, jacobian(x) -> SparseMatrix, size().
template <class P>
concept NonlinearSystem = requires(const P& p, const Vector& x) {
    { p.residual(x) } -> std::convertible_to<Vector>;
    { p.jacobian(x) } -> std::convertible_to<SparseMatrix>;
    { p.size() } -> std::convertible_to<index_t>;
};

struct Forcing {
    enum class Mode { fixed, residual_proportional } mode = Mode::fixed;
    double eta = 1e-6;      ///< fixed mode
    double c = 1.0;         ///< proportional mode: eta_k = min(eta_max, c ||F_k|| / ||F_0||)
    double eta_max = 0.1;

    static Forcing fixed(double eta) { return {Mode::fixed, eta, 1.0, 0.1}; }
    static Forcing proportional(double c, double eta_max) { return {Mode::residual_proportional, 1e-6, c, eta_max}; }
};

struct NewtonConfig {
    double nl_rel_tol = 1e-10;
    int nl_max_iters = 50;
    Forcing forcing;
    int pcg_max_iters = 2000;
    UpdateKind update_kind = UpdateKind::none;
    int kmax = 0;
    double r_skip = 1e-4;
    bool spd_policy = false;
    Sr1Reference sr1_reference = Sr1Reference::aggregate;
    BaseSpec base;
    double scaling_margin = 0.0;  ///< > 1 enables scale_for_spd on the base factor
    int beta_iters = 30;          ///< power steps for the beta estimate
    int rebuild_base_every = 0;   ///< > 0: rebuild P0 from J(x_k) and clear the window every N steps
};

inline double forcing_term(double normF_k, double normF_0, const Forcing& f) {
    if (f.mode == Forcing::Mode::fixed) return f.eta;
    return std::min(f.eta_max, f.c * normF_k / normF_0);
}

inline double forcing_term(double normF_k, double normF_0, const NewtonConfig& cfg) {
    return forcing_term(normF_k, normF_0, cfg.forcing);
}

struct NewtonRecord {
    int k = 0;
    double normF = 0.0;  ///< ||F(x_k)|| before the step
    double eta = 0.0;
    int pcg_iters = 0;
    PcgFlag pcg_flag = PcgFlag::converged;
    UpdateDecision decision;
};

enum class NewtonStatus { converged, max_iters, pcg_breakdown, diverged };

inline std::string_view to_string(NewtonStatus s) {
    switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::max_iters: return "max_iters";
    case NewtonStatus::pcg_breakdown: return "pcg_breakdown";
    case NewtonStatus::diverged: return "diverged";
    }
    return "?";
}

struct NewtonTrace {
    std::vector<NewtonRecord> records;
    int nlit = 0;
    long totlin = 0;
    double wall_time = 0.0;
    double final_normF = 0.0;
    double initial_normF = 0.0;
    double sigma = 1.0;  ///< scaling applied to the base preconditioner
    NewtonStatus status = NewtonStatus::max_iters;
};

struct NewtonResult {
    Vector x;
    NewtonTrace trace;
    bool converged() const { return trace.status == NewtonStatus::converged; }
};

/// Optional hook: F(x_next) - F(x) evaluated without cancellation in the linear part.
template <class P>
concept HasResidualDifference = requires(const P& p, const Vector& x) {
    { p.residual_difference(x, x, x) } -> std::convertible_to<Vector>;
};

/// State handed to an observer after every completed step (update already pushed).
struct NewtonStep {
    int k;
    const Vector& x_next;
    const Vector& s;
    const Vector& y;
    const SparseMatrix& J_next;
    const BasePreconditioner& base;
    const QNWindow& window;
    const UpdateDecision& decision;
};

using NewtonObserver = std::function<void(const NewtonStep&)>;

/// Inexact Newton: J(x_k) s_k = -F(x_k) by PCG to relative tolerance eta_k,
/// x_{k+1} = x_k + s_k, then (s_k, F_{k+1} - F_k) is pushed into the window.
/// P0 is built once from J(x_0) unless rebuild_base_every is set.
template <NonlinearSystem Problem>
NewtonResult inexact_newton(const Problem& problem, const Vector& x0, const NewtonConfig& cfg,
                            const NewtonObserver& observer = {}) {
    if (!(cfg.nl_rel_tol > 0.0 && cfg.nl_rel_tol < 1.0)) throw Error("nl_rel_tol must lie in (0,1)");
    if (x0.size() != problem.size()) throw DimensionError("inexact_newton: x0 size mismatch");
    const auto t0 = std::chrono::steady_clock::now();

    NewtonResult res;
    auto& tr = res.trace;
    res.x = x0;

    auto finish = [&](NewtonStatus st, double normF) {
        tr.status = st;
        tr.final_normF = normF;
        tr.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return res;
    };

    Vector F;
    Vector x_prev;
    try {
        F = problem.residual(res.x);
    } catch (const DivergenceError&) {
        return finish(NewtonStatus::diverged, std::numeric_limits<double>::infinity());
    }
    SparseMatrix J = problem.jacobian(res.x);
    const double normF0 = F.norm();
    tr.initial_normF = normF0;

    auto build_base = [&](const SparseMatrix& Jb) {
        BasePreconditioner P = make_base_preconditioner(Jb, cfg.base);
        if (cfg.scaling_margin > 1.0) {
            const double beta = estimate_beta(Jb, P, cfg.beta_iters);
            tr.sigma = scale_for_spd(P, beta, cfg.scaling_margin);
        }
        return P;
    };
    BasePreconditioner P0 = build_base(J);
    QNWindow window(problem.size(), cfg.update_kind == UpdateKind::none ? 0 : cfg.kmax, cfg.update_kind);
    const PushOptions push_opt{cfg.r_skip, cfg.spd_policy, cfg.sr1_reference};
    const QuasiNewtonPreconditioner Pk(P0, window);
    PcgConfig pcfg;
    pcfg.max_iters = cfg.pcg_max_iters;

    for (int k = 0;; ++k) {
        const double normF = F.norm();
        if (normF <= cfg.nl_rel_tol * normF0) return finish(NewtonStatus::converged, normF);
        if (k >= cfg.nl_max_iters) return finish(NewtonStatus::max_iters, normF);
        if (cfg.rebuild_base_every > 0 && k > 0 && k % cfg.rebuild_base_every == 0) {
            P0 = build_base(J);
            window.clear();
        }

        NewtonRecord rec;
        rec.k = k;
        rec.normF = normF;
        rec.eta = forcing_term(normF, normF0, cfg);
        pcfg.rel_tol = rec.eta;
        const Vector b = -F;
        const PcgOutcome lin = pcg([&J](const Vector& v) { return spmv(J, v); }, b, Pk, pcfg, Vector::Zero(b.size()));
        rec.pcg_iters = lin.iters;
        rec.pcg_flag = lin.flag;
        tr.totlin += lin.iters;
        if (is_breakdown(lin.flag)) {
            rec.decision = {false, UpdateReason::no_update, 0.0};
            tr.records.push_back(rec);
            return finish(NewtonStatus::pcg_breakdown, normF);
        }

        const Vector& s = lin.x;
        if constexpr (HasResidualDifference<Problem>) x_prev = res.x;
        res.x += s;
        ++tr.nlit;
        Vector F_next;
        try {
            F_next = problem.residual(res.x);
            if (!F_next.allFinite()) throw DivergenceError("residual is not finite");
            J = problem.jacobian(res.x);
        } catch (const DivergenceError&) {
            rec.decision = {false, UpdateReason::no_update, 0.0};
            tr.records.push_back(rec);
            return finish(NewtonStatus::diverged, std::numeric_limits<double>::infinity());
        }
        Vector y;
        if constexpr (HasResidualDifference<Problem>) {
            try {
                y = problem.residual_difference(x_prev, s, res.x);
            } catch (const DivergenceError&) {
                rec.decision = {false, UpdateReason::no_update, 0.0};
                tr.records.push_back(rec);
                return finish(NewtonStatus::diverged, std::numeric_limits<double>::infinity());
            }
        } else {
            y = F_next - F;
        }
        rec.decision = window.push(s, y, P0, push_opt);
        tr.records.push_back(rec);
        if (observer) observer(NewtonStep{k, res.x, s, y, J, P0, window, rec.decision});
        F = std::move(F_next);
    }
}

} // namespace qnprec

#endif // QNPREC_NEWTON_HPP
