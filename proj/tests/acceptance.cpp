// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "qnprec/qnprec.hpp"
#include "support/test_matrices.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace qnprec;
using namespace qnprec::testing;

namespace {

// pinned tolerances
constexpr double tol_equivalence = 1e-12;
constexpr double tol_recurrence = 1e-12;
constexpr double tol_secant = 1e-10;
constexpr double ref_lambda_min = 8.504e-4;
constexpr double ref_lambda_max = 1.2057;
constexpr double tol_lambda_min = 0.10;
constexpr double tol_lambda_max = 0.05;
constexpr double tol_linear_next_secant = 1e-12;
constexpr double slack_interlacing = 1e-10;
constexpr double sr1_vs_lbfgs_factor = 1.05;
constexpr double quadratic_ratio_bound = 10.0;
constexpr int max_newton_iters = 25;
constexpr double tol_eigenvalue = 1e-8;

constexpr double limit_equivalence_s = 10.0;
constexpr double limit_recurrence_s = 10.0;
constexpr double limit_spectrum_s = 60.0;
constexpr double limit_direction_s = 300.0;

const auto identity_op = [](const Vector& v) { return v; };

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Drifting-Jacobian pairs as seen along a nonlinear path.
void drifting_pairs(index_t n, int count, std::mt19937& gen, std::vector<Vector>& s, std::vector<Vector>& y) {
    const DenseMatrix J0 = random_dense_spd(n, gen);
    for (int i = 0; i < count; ++i) {
        const DenseMatrix Ji = J0 + 0.1 * i * random_dense_spd(n, gen, 0.0, 1.0);
        s.push_back(random_vector(n, gen));
        y.push_back(Ji * s.back());
    }
}

Outcome compact_two_loop_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 gen(101);
    std::uniform_int_distribution<int> size(2, 50), window(1, 10);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const index_t n = size(gen);
        const int kmax = window(gen);
        const auto P0 = random_base(n, gen);
        std::vector<Vector> s, y;
        drifting_pairs(n, kmax + 3, gen, s, y);
        QNWindow w(n, kmax, UpdateKind::lbfgs_compact);
        for (std::size_t i = 0; i < s.size(); ++i) {
            w.push(s[i], y[i], P0);
            const Vector v = random_vector(n, gen);
            worst = std::max(worst, rel_diff(apply_lbfgs_compact(w, P0, v), apply_lbfgs_two_loop(w, P0, v)));
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= tol_equivalence && secs < limit_equivalence_s,
            "max rel diff " + fmt("%.2e", worst) + ", " + fmt("%.2f s", secs)};
}

// Sequential dense recurrence over the retained pairs.
DenseMatrix recurrence(const QNWindow& w, const BasePreconditioner& P0) {
    DenseMatrix P = dense_of(P0);
    for (int i = 0; i < w.count(); ++i) {
        const Vector s = w.S().col(i);
        const Vector y = w.Y().col(i);
        P = is_lbfgs(w.kind()) ? bfgs_step(P, s, y) : sr1_step(P, s, y);
    }
    return P;
}

Outcome dense_recurrence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937 gen(202);
    double worst = 0.0;
    int shifted = 0;
    for (auto kind : {UpdateKind::lbfgs_two_loop, UpdateKind::lbfgs_compact, UpdateKind::lsr1_compact}) {
        for (int t = 0; t < 20; ++t) {
            const index_t n = 5 + 2 * t;
            const int kmax = 1 + t % 6;
            const auto P0 = random_base(n, gen);
            std::vector<Vector> s, y;
            drifting_pairs(n, kmax + 1 + t % 4, gen, s, y);
            QNWindow w(n, kmax, kind);
            int accepted = 0;
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (w.push(s[i], y[i], P0).accepted && ++accepted > kmax) ++shifted;
                worst = std::max(worst, rel_diff(materialize_dense(w, P0), recurrence(w, P0)));
            }
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= tol_recurrence && shifted > 0 && secs < limit_recurrence_s,
            "max rel diff " + fmt("%.2e", worst) + ", " + std::to_string(shifted) + " post-shift windows, " +
                fmt("%.2f s", secs)};
}

Outcome secant_conditions() {
    std::mt19937 gen(303);
    double latest = 0.0;
    int checked = 0;
    for (auto kind : {UpdateKind::lbfgs_two_loop, UpdateKind::lbfgs_compact, UpdateKind::lsr1_compact}) {
        for (int t = 0; t < 20; ++t) {
            const index_t n = 10 + t;
            const auto P0 = random_base(n, gen);
            std::vector<Vector> s, y;
            drifting_pairs(n, 8, gen, s, y);
            QNWindow w(n, 1 + t % 5, kind);
            for (std::size_t i = 0; i < s.size(); ++i) {
                if (!w.push(s[i], y[i], P0).accepted) continue;
                latest = std::max(latest, (apply_update(kind, w, P0, y[i]) - s[i]).norm() / s[i].norm());
                ++checked;
            }
        }
    }
    // every retained pair of an SR1 window built along a linear Newton run
    double all_pairs = 0.0;
    int pairs = 0;
    for (index_t m : {8, 12, 16}) {
        const SparseMatrix A = laplacian_2d(m);
        const LinearProblem lp(A, random_vector(A.rows(), gen));
        NewtonConfig c;
        c.update_kind = UpdateKind::lsr1_compact;
        c.kmax = 4;
        c.base = {BaseSpec::Kind::jacobi, 0.0};
        c.forcing = Forcing::fixed(0.5);
        c.nl_rel_tol = 1e-12;
        c.spd_policy = true;
        c.scaling_margin = 1.1;
        inexact_newton(lp, Vector::Zero(A.rows()), c, [&](const NewtonStep& st) {
            const QuasiNewtonPreconditioner P(st.base, st.window);
            for (int i = 0; i < st.window.count(); ++i) {
                const Vector si = st.window.S().col(i);
                const Vector yi = st.window.Y().col(i);
                all_pairs = std::max(all_pairs, (P(yi) - si).norm() / si.norm());
                ++pairs;
            }
        });
    }
    return {latest <= tol_secant && all_pairs <= tol_secant && checked > 0 && pairs > 0,
            "latest pair " + fmt("%.2e", latest) + " over " + std::to_string(checked) + " pushes, SR1 all pairs " +
                fmt("%.2e", all_pairs) + " over " + std::to_string(pairs)};
}

Outcome laplacian_ic0_extremes() {
    const auto t0 = std::chrono::steady_clock::now();
    const SparseMatrix A = laplacian_2d(198);
    const auto P = make_base_preconditioner(A, {BaseSpec::Kind::ic0, 0.0});
    const auto rep = preconditioned_spectrum_lanczos(A, P);
    const double secs = seconds_since(t0);
    const double dmin = std::abs(rep.lambda_min - ref_lambda_min) / ref_lambda_min;
    const double dmax = std::abs(rep.lambda_max - ref_lambda_max) / ref_lambda_max;
    return {dmin <= tol_lambda_min && dmax <= tol_lambda_max && secs < limit_spectrum_s,
            "lambda_min " + fmt("%.4e", rep.lambda_min) + " (" + fmt("%.1f%%", 100 * dmin) + "), lambda_max " +
                fmt("%.4f", rep.lambda_max) + " (" + fmt("%.1f%%", 100 * dmax) + "), " +
                std::to_string(rep.lanczos_iters) + " Lanczos steps" + (rep.lanczos_converged ? "" : " (cap)") + ", " +
                fmt("%.1f s", secs)};
}

NewtonConfig scaled_sr1_config() {
    NewtonConfig c;
    c.update_kind = UpdateKind::lsr1_compact;
    c.kmax = 4;
    c.base = {BaseSpec::Kind::ic0, 0.0};
    c.scaling_margin = 1.1;
    c.spd_policy = true;
    return c;
}

struct SpdRun {
    bool converged = false;
    int steps = 0;
    double min_eig = std::numeric_limits<double>::infinity();
    std::vector<double> next_secant;  ///< per accepted update
};

const SpdRun& phi2_scaled_sr1_run() {
    static const SpdRun run = [] {
        SpdRun r;
        const auto p = NonlinearProblem::phi2(31);
        const auto res = inexact_newton(p, Vector::Constant(p.size(), 0.1), scaled_sr1_config(), [&](const NewtonStep& st) {
            DenseMatrix P = materialize_dense(st.window, st.base);
            P = 0.5 * (P + P.transpose()).eval();
            Eigen::SelfAdjointEigenSolver<DenseMatrix> es(P, Eigen::EigenvaluesOnly);
            r.min_eig = std::min(r.min_eig, es.eigenvalues()[0]);
            ++r.steps;
            if (st.decision.accepted)
                r.next_secant.push_back(next_step_secant_residual(QuasiNewtonPreconditioner(st.base, st.window), st.J_next, st.s));
        });
        r.converged = res.converged();
        return r;
    }();
    return run;
}

Outcome spd_preservation() {
    const auto& r = phi2_scaled_sr1_run();
    return {r.converged && r.steps > 0 && r.min_eig > 0.0,
            "min eigenvalue of P_k " + fmt("%.3e", r.min_eig) + " over " + std::to_string(r.steps) + " steps"};
}

Outcome next_step_secant() {
    const auto& r = phi2_scaled_sr1_run();
    bool ok = r.converged && r.next_secant.size() >= 2 && r.next_secant.back() < r.next_secant.front();
    std::string detail = r.next_secant.empty() ? std::string("no accepted update")
                                               : "first " + fmt("%.2e", r.next_secant.front()) + ", final " +
                                                     fmt("%.2e", r.next_secant.back());
    std::mt19937 gen(606);
    const SparseMatrix A = laplacian_2d(10);
    const LinearProblem lp(A, random_vector(A.rows(), gen));
    double linear = 0.0;
    int seen = 0;
    for (auto kind : {UpdateKind::lbfgs_compact, UpdateKind::lbfgs_two_loop, UpdateKind::lsr1_compact}) {
        NewtonConfig c;
        c.update_kind = kind;
        c.kmax = 3;
        c.base = {BaseSpec::Kind::jacobi, 0.0};
        c.forcing = Forcing::fixed(0.5);
        c.nl_rel_tol = 1e-12;
        c.spd_policy = true;
        c.scaling_margin = 1.1;
        inexact_newton(lp, Vector::Zero(A.rows()), c, [&](const NewtonStep& st) {
            if (!st.decision.accepted) return;
            linear = std::max(linear, next_step_secant_residual(QuasiNewtonPreconditioner(st.base, st.window), st.J_next, st.s));
            ++seen;
        });
    }
    ok = ok && seen > 0 && linear <= tol_linear_next_secant;
    return {ok, detail + "; linear max " + fmt("%.2e", linear) + " over " + std::to_string(seen) + " updates"};
}

Outcome interlacing() {
    std::mt19937 gen(707);
    int held = 0, checked = 0;
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const index_t n = 50;
        const DenseMatrix J = random_dense_spd(n, gen, 0.5, 10.0);
        const DenseMatrix P = 0.09 * random_dense_spd(n, gen, 0.1, 1.0);
        const Vector s = random_vector(n, gen);
        const Vector y = J * s;
        const auto rep = interlacing_check(J, P, sr1_step(P, s, y), s, y, slack_interlacing);
        if (rep.skipped) continue;
        ++checked;
        worst = std::max(worst, rep.max_violation);
        if (rep.holds()) ++held;
    }
    return {checked == 50 && held == checked,
            std::to_string(held) + "/" + std::to_string(checked) + " instances, max violation " + fmt("%.2e", worst)};
}

long newton_totlin(const NonlinearProblem& p, UpdateKind kind, int kmax, bool& converged) {
    NewtonConfig c;
    c.update_kind = kind;
    c.kmax = kmax;
    c.base = {BaseSpec::Kind::ict, 0.01};
    const auto res = inexact_newton(p, Vector::Constant(p.size(), 0.1), c);
    converged = converged && res.converged();
    return res.trace.totlin;
}

Outcome direction_of_effect() {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    for (const auto& [name, p] : {std::pair{"bratu", NonlinearProblem::bratu(99)}, std::pair{"phi2", NonlinearProblem::phi2(99)}}) {
        bool converged = true;
        const long none = newton_totlin(p, UpdateKind::none, 0, converged);
        const long lbfgs = newton_totlin(p, UpdateKind::lbfgs_compact, 4, converged);
        const long lsr1 = newton_totlin(p, UpdateKind::lsr1_compact, 4, converged);
        ok = ok && converged && lsr1 < none && lbfgs < none && lsr1 <= sr1_vs_lbfgs_factor * lbfgs;
        detail += std::string(name) + " none/lbfgs/lsr1 = " + std::to_string(none) + "/" + std::to_string(lbfgs) + "/" +
                  std::to_string(lsr1) + "; ";
    }
    const double secs = seconds_since(t0);
    return {ok && secs < limit_direction_s, detail + fmt("%.1f s", secs)};
}

Outcome quadratic_convergence() {
    const auto p = NonlinearProblem::phi2(31);
    NewtonConfig c;
    c.base = {BaseSpec::Kind::ic0, 0.0};
    const auto res = inexact_newton(p, Vector::Constant(p.size(), 0.1), c);
    std::vector<double> norms;
    for (const auto& r : res.trace.records) norms.push_back(r.normF);
    norms.push_back(res.trace.final_normF);
    if (!res.converged() || norms.size() < 4) return {false, "too few iterations"};
    double worst = 0.0;
    std::string ratios;
    for (std::size_t k = norms.size() - 4; k + 1 < norms.size(); ++k) {
        const double q = norms[k + 1] / (norms[k] * norms[k]);
        worst = std::max(worst, q);
        ratios += fmt(" %.2e", q);
    }
    return {std::isfinite(worst) && worst <= quadratic_ratio_bound && res.trace.nlit <= max_newton_iters,
            "nlit " + std::to_string(res.trace.nlit) + ", tail ratios" + ratios};
}

Outcome eigensolver() {
    const SparseMatrix A = laplacian_2d(30);
    const double exact = 8.0 * std::pow(std::sin(std::acos(-1.0) / 62.0), 2);
    std::mt19937 gen(1010);
    const Vector u0 = random_vector(A.rows(), gen);
    auto run = [&](UpdateKind kind, int kmax, double margin, bool spd) {
        EigenConfig c;
        c.update_kind = kind;
        c.kmax = kmax;
        c.base = {BaseSpec::Kind::ic0, 0.0};
        c.scaling_margin = margin;
        c.spd_policy = spd;
        return newton_grassmann(A, u0, c);
    };
    const auto none = run(UpdateKind::none, 0, 0.0, true);
    const auto lbfgs = run(UpdateKind::lbfgs_compact, 10, 0.0, true);
    const auto sr1_raw = run(UpdateKind::lsr1_compact, 10, 0.0, false);
    const auto sr1_scaled = run(UpdateKind::lsr1_compact, 10, 1.1, true);
    const double err = std::abs(lbfgs.lambda - exact) / exact;
    const double err_none = std::abs(none.lambda - exact) / exact;
    const bool ok = none.converged() && lbfgs.converged() && err <= tol_eigenvalue && err_none <= tol_eigenvalue &&
                    lbfgs.trace.totlin < none.trace.totlin && sr1_scaled.converged();
    return {ok, "rel err " + fmt("%.1e", err) + ", totlin none/lbfgs = " + std::to_string(none.trace.totlin) + "/" +
                    std::to_string(lbfgs.trace.totlin) + ", unscaled lsr1 " + std::string(to_string(sr1_raw.trace.status)) +
                    ", scaled lsr1 " + std::string(to_string(sr1_scaled.trace.status))};
}

Outcome breakdown_detection() {
    Vector d(3);
    d << 1, -1, 2;
    Vector b(3);
    b << 1, 1, 0;
    const auto fixed = pcg(diagonal_matrix(d), b, identity_op, PcgConfig{});
    bool ok = fixed.flag == PcgFlag::breakdown_pAp;
    // random indefinite operators: either a flagged breakdown or a verified solution
    std::mt19937 gen(1111);
    int breakdowns = 0, silent = 0;
    for (int t = 0; t < 200; ++t) {
        const index_t n = 20;
        Vector diag = random_vector(n, gen);
        diag[0] = -1.0;
        diag[1] = 1.0;
        const SparseMatrix A = diagonal_matrix(diag);
        const Vector rhs = random_vector(n, gen);
        const PcgConfig cfg{1e-8, 200};
        const auto out = pcg(A, rhs, identity_op, cfg);
        if (is_breakdown(out.flag)) {
            ++breakdowns;
        } else if ((spmv(A, out.x) - rhs).norm() > 1.01 * cfg.rel_tol * rhs.norm() && out.flag == PcgFlag::converged) {
            ++silent;
        }
    }
    ok = ok && silent == 0;
    return {ok, std::string("fixed case ") + std::string(to_string(fixed.flag)) + ", random: " + std::to_string(breakdowns) +
                    " breakdowns, " + std::to_string(silent) + " silent wrong answers"};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"compact vs two-loop L-BFGS equivalence", compact_two_loop_equivalence},
        {"dense recurrence oracle", dense_recurrence},
        {"secant conditions", secant_conditions},
        {"laplacian 198 IC(0) extremal eigenvalues", laplacian_ic0_extremes},
        {"SPD preservation, scaled L-SR1", spd_preservation},
        {"next-step secant residual", next_step_secant},
        {"interlacing, commuting case", interlacing},
        {"direction of effect, ICT(0.01)", direction_of_effect},
        {"quadratic convergence", quadratic_convergence},
        {"eigensolver", eigensolver},
        {"breakdown detection", breakdown_detection},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
