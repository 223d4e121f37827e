/// @file qn_window.hpp
/// @brief Limited-memory compact L-BFGS / L-SR1 preconditioner updates.
///
/// The window keeps the last kmax accepted pairs (s_i, y_i) together with the
/// derived blocks of the compact inverse representations
///
///   L-BFGS:  P = P0 + [S Z] [ R^-T H R^-1   -R^-T ] [S^T]
///                           [ -R^-1            0  ] [Z^T]
///   L-SR1:   P = P0 + Q M^-1 Q^T
///
/// with Z = P0 Y, R = triu(S^T Y), D = diag(R), H = D + Y^T P0 Y,
/// Q = S - Z and M = R + R^T - H. All blocks are bordered incrementally on
/// push and shifted when the window is full.

#ifndef QNPREC_QN_WINDOW_HPP
#define QNPREC_QN_WINDOW_HPP

#include "base_precond.hpp"
#include "dense.hpp"
#include "error.hpp"
#include "sparse.hpp"

#include <cmath>
#include <string>
#include <string_view>

namespace qnprec {

enum class UpdateKind { none, lbfgs_two_loop, lbfgs_compact, lsr1_compact };

enum class UpdateReason {
    ok,
    curvature_nonpositive,
    sr1_denominator_small,
    sr1_denominator_negative_policy,
    sr1_singular_middle,
    no_update,
};

inline std::string_view to_string(UpdateKind k) {
    switch (k) {
    case UpdateKind::none: return "none";
    case UpdateKind::lbfgs_two_loop: return "lbfgs-twoloop";
    case UpdateKind::lbfgs_compact: return "lbfgs";
    case UpdateKind::lsr1_compact: return "lsr1";
    }
    return "?";
}

inline std::string_view to_string(UpdateReason r) {
    switch (r) {
    case UpdateReason::ok: return "ok";
    case UpdateReason::curvature_nonpositive: return "curvature_nonpositive";
    case UpdateReason::sr1_denominator_small: return "sr1_denominator_small";
    case UpdateReason::sr1_denominator_negative_policy: return "sr1_denominator_negative_policy";
    case UpdateReason::sr1_singular_middle: return "sr1_singular_middle";
    case UpdateReason::no_update: return "no_update";
    }
    return "?";
}

inline bool is_lbfgs(UpdateKind k) { return k == UpdateKind::lbfgs_two_loop || k == UpdateKind::lbfgs_compact; }

struct UpdateDecision {
    bool accepted = false;
    UpdateReason reason = UpdateReason::no_update;
    double denominator = 0.0;  ///< s^T y for L-BFGS, y^T (s - P y) for L-SR1
};

/// Which operator P the SR1 acceptance test measures s - P y against.
enum class Sr1Reference {
    aggregate,  ///< the current window operator, before any shift
    retained,   ///< the operator over the pairs that survive the shift
};

struct PushOptions {
    double r_skip = 1e-4;
    bool spd_policy = false;  ///< L-SR1: demand positive denominators and an SPD middle matrix
    Sr1Reference sr1_reference = Sr1Reference::aggregate;
};

class QNWindow {
public:
    QNWindow() = default;

    QNWindow(index_t n, int kmax, UpdateKind kind) : n_(n), kmax_(kmax), kind_(kind) {
        if (n < 0 || kmax < 0) throw Error("QNWindow: negative size");
        S_.setZero(n, kmax);
        Y_.setZero(n, kmax);
        Z_.setZero(n, kmax);
        Q_.setZero(n, kmax);
        R_.setZero(kmax, kmax);
        H_.setZero(kmax, kmax);
        M_.setZero(kmax, kmax);
    }

    index_t size() const { return n_; }
    int capacity() const { return kmax_; }
    int count() const { return m_; }
    bool empty() const { return m_ == 0; }
    UpdateKind kind() const { return kind_; }

    auto S() const { return S_.leftCols(m_); }
    auto Y() const { return Y_.leftCols(m_); }
    auto Z() const { return Z_.leftCols(m_); }
    auto Q() const { return Q_.leftCols(m_); }
    auto R() const { return R_.topLeftCorner(m_, m_); }
    auto H() const { return H_.topLeftCorner(m_, m_); }
    auto M() const { return M_.topLeftCorner(m_, m_); }
    Vector D() const { return R_.topLeftCorner(m_, m_).diagonal(); }

    const SymmetricIndefiniteFactor& middle_factor() const { return Mfac_; }

    void clear() { m_ = 0; Mfac_ = {}; }

    /// Test the pair and, if accepted, append it (shifting out the oldest
    /// pair when full). On rejection the window is left untouched.
    UpdateDecision push(const Vector& s, const Vector& y, const BasePreconditioner& P0, const PushOptions& opt = {}) {
        if (s.size() != n_ || y.size() != n_ || P0.size() != n_) throw DimensionError("QNWindow::push: size mismatch");
        if (kind_ == UpdateKind::none || kmax_ == 0) return {false, UpdateReason::no_update, 0.0};

        const Vector z = P0.apply(y);
        UpdateDecision dec{true, UpdateReason::ok, 0.0};

        if (is_lbfgs(kind_)) {
            dec.denominator = s.dot(y);
            if (!(dec.denominator > 0.0)) return {false, UpdateReason::curvature_nonpositive, dec.denominator};
        } else {
            Vector py;
            if (opt.sr1_reference == Sr1Reference::retained && m_ == kmax_) {
                QNWindow shifted = *this;
                shifted.drop_oldest();
                py = shifted.correct_sr1(z, y);
            } else {
                py = correct_sr1(z, y);
            }
            const Vector v = s - py;
            dec.denominator = y.dot(v);
            const double bound = opt.r_skip * y.norm() * v.norm();
            if (dec.denominator == 0.0 || std::abs(dec.denominator) < bound)
                return {false, UpdateReason::sr1_denominator_small, dec.denominator};
            if (opt.spd_policy && !(dec.denominator > 0.0))
                return {false, UpdateReason::sr1_denominator_negative_policy, dec.denominator};
        }

        QNWindow backup;
        const bool sr1 = kind_ == UpdateKind::lsr1_compact;
        if (sr1) backup = *this;
        if (m_ == kmax_) drop_oldest();
        append(s, y, z);
        if (sr1) {
            Mfac_.compute(M());
            if (Mfac_.singular(1e-12)) {
                *this = std::move(backup);
                return {false, UpdateReason::sr1_singular_middle, dec.denominator};
            }
            if (opt.spd_policy && !Mfac_.positive_definite()) {
                *this = std::move(backup);
                return {false, UpdateReason::sr1_denominator_negative_policy, dec.denominator};
            }
        }
        return dec;
    }

    /// Discard the oldest pair, shifting every block by one.
    void drop_oldest() {
        if (m_ == 0) return;
        for (int j = 0; j + 1 < m_; ++j) {
            S_.col(j) = S_.col(j + 1);
            Y_.col(j) = Y_.col(j + 1);
            Z_.col(j) = Z_.col(j + 1);
            Q_.col(j) = Q_.col(j + 1);
        }
        const int k = m_ - 1;
        R_.topLeftCorner(k, k) = R_.block(1, 1, k, k).eval();
        H_.topLeftCorner(k, k) = H_.block(1, 1, k, k).eval();
        M_.topLeftCorner(k, k) = M_.block(1, 1, k, k).eval();
        m_ = k;
        if (kind_ == UpdateKind::lsr1_compact) Mfac_.compute(M());
    }

private:
    // P y given z = P0 y, for the current SR1 window.
    Vector correct_sr1(const Vector& z, const Vector& y) const {
        if (m_ == 0) return z;
        return z + Q() * Mfac_.solve(Q().transpose() * y);
    }

    void append(const Vector& s, const Vector& y, const Vector& z) {
        const int m = m_;
        const Vector q = s - z;
        R_.col(m).head(m) = S().transpose() * y;
        R_.row(m).head(m).setZero();
        R_(m, m) = s.dot(y);
        const Vector zy = Z().transpose() * y;
        H_.col(m).head(m) = zy;
        H_.row(m).head(m) = zy.transpose();
        H_(m, m) = (s + z).dot(y);
        const Vector qy = Q().transpose() * y;
        M_.col(m).head(m) = qy;
        M_.row(m).head(m) = qy.transpose();
        M_(m, m) = q.dot(y);
        S_.col(m) = s;
        Y_.col(m) = y;
        Z_.col(m) = z;
        Q_.col(m) = q;
        m_ = m + 1;
    }

    index_t n_ = 0;
    int kmax_ = 0;
    int m_ = 0;
    UpdateKind kind_ = UpdateKind::none;
    DenseMatrix S_, Y_, Z_, Q_;
    DenseMatrix R_, H_, M_;
    SymmetricIndefiniteFactor Mfac_;
};

/// Two-loop recursion over the stored pairs.
inline Vector apply_lbfgs_two_loop(const QNWindow& w, const BasePreconditioner& P0, const Vector& r) {
    const int m = w.count();
    Vector q = r;
    Vector alpha(m);
    const auto S = w.S();
    const auto Y = w.Y();
    const Vector D = w.D();
    for (int i = m - 1; i >= 0; --i) {
        alpha[i] = S.col(i).dot(q) / D[i];
        q -= alpha[i] * Y.col(i);
    }
    P0.apply_in_place(q);
    for (int i = 0; i < m; ++i) {
        const double beta = Y.col(i).dot(q) / D[i];
        q += (alpha[i] - beta) * S.col(i);
    }
    return q;
}

/// Compact L-BFGS application: one base solve, two block products and two
/// m-by-m triangular solves.
inline Vector apply_lbfgs_compact(const QNWindow& w, const BasePreconditioner& P0, const Vector& r) {
    Vector out = P0.apply(r);
    if (w.empty()) return out;
    const Vector w1 = w.S().transpose() * r;
    const Vector w2 = w.Z().transpose() * r;
    const auto R = w.R();
    const Vector q2 = R.triangularView<Eigen::Upper>().solve(w1);
    const Vector q1 = R.transpose().triangularView<Eigen::Lower>().solve(w2 - w.H() * q2);
    out.noalias() -= w.S() * q1;
    out.noalias() -= w.Z() * q2;
    return out;
}

/// Compact L-SR1 application: P0 r + Q M^-1 Q^T r.
inline Vector apply_lsr1_compact(const QNWindow& w, const BasePreconditioner& P0, const Vector& r) {
    Vector out = P0.apply(r);
    if (w.empty()) return out;
    const Vector w1 = w.Q().transpose() * r;
    const Vector w2 = w.middle_factor().solve(w1);
    out.noalias() += w.Q() * w2;
    return out;
}

inline Vector apply_update(UpdateKind kind, const QNWindow& w, const BasePreconditioner& P0, const Vector& r) {
    switch (kind) {
    case UpdateKind::none: return P0.apply(r);
    case UpdateKind::lbfgs_two_loop: return apply_lbfgs_two_loop(w, P0, r);
    case UpdateKind::lbfgs_compact: return apply_lbfgs_compact(w, P0, r);
    case UpdateKind::lsr1_compact: return apply_lsr1_compact(w, P0, r);
    }
    return P0.apply(r);
}

/// P0 plus the window, applied with the window's own update kind.
class QuasiNewtonPreconditioner {
public:
    QuasiNewtonPreconditioner(const BasePreconditioner& P0, const QNWindow& w) : P0_(&P0), w_(&w) {}

    Vector operator()(const Vector& r) const { return apply_update(w_->kind(), *w_, *P0_, r); }

    const BasePreconditioner& base() const { return *P0_; }
    const QNWindow& window() const { return *w_; }

private:
    const BasePreconditioner* P0_;
    const QNWindow* w_;
};

inline constexpr index_t default_dense_limit = 2000;

/// The n-by-n matrix of the operator, one application per basis vector.
inline DenseMatrix materialize_dense(const QNWindow& w, const BasePreconditioner& P0, UpdateKind kind,
                                     index_t limit = default_dense_limit) {
    const index_t n = P0.size();
    if (n > limit) throw SizeLimitError("materialize_dense: n = " + std::to_string(n) + " exceeds limit " + std::to_string(limit));
    DenseMatrix P(n, n);
    Vector e = Vector::Zero(n);
    for (index_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        P.col(j) = apply_update(kind, w, P0, e);
        e[j] = 0.0;
    }
    return P;
}

inline DenseMatrix materialize_dense(const QNWindow& w, const BasePreconditioner& P0, index_t limit = default_dense_limit) {
    return materialize_dense(w, P0, w.kind(), limit);
}

} // namespace qnprec

#endif // QNPREC_QN_WINDOW_HPP
