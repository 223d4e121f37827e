#include "qnprec/qnprec.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <sstream>

using namespace qnprec;

namespace {

NewtonTrace sample_newton_trace() {
    NewtonConfig c;
    c.update_kind = UpdateKind::lsr1_compact;
    c.kmax = 2;
    c.base = {BaseSpec::Kind::ic0, 0.0};
    return inexact_newton(NonlinearProblem::phi2(15), Vector::Constant(225, 0.1), c).trace;
}

} // namespace

TEST(TraceCsv, HeaderSchema) {
    std::ostringstream os;
    write_trace_csv(os, NewtonTrace{});
    EXPECT_EQ(os.str(), "k,normF,eta,pcg_iters,flag,update_reason,denominator\n");
    std::ostringstream oe;
    write_trace_csv(oe, EigenTrace{}, 0.1);
    EXPECT_EQ(oe.str(), "k,normF,eta,pcg_iters,flag,update_reason,denominator,theta\n");
}

TEST(TraceCsv, NewtonRoundTripIsLossless) {
    const auto tr = sample_newton_trace();
    ASSERT_FALSE(tr.records.empty());
    std::stringstream ss;
    write_trace_csv(ss, tr);
    const auto back = read_trace_csv(ss);
    ASSERT_EQ(back.size(), tr.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        const auto& a = tr.records[i];
        const auto& b = back[i];
        EXPECT_EQ(a.k, b.k);
        EXPECT_EQ(a.normF, b.normF);
        EXPECT_EQ(a.eta, b.eta);
        EXPECT_EQ(a.pcg_iters, b.pcg_iters);
        EXPECT_EQ(a.pcg_flag, b.pcg_flag);
        EXPECT_EQ(a.decision.reason, b.decision.reason);
        EXPECT_EQ(a.decision.accepted, b.decision.accepted);
        EXPECT_EQ(a.decision.denominator, b.decision.denominator);
    }
    // rewriting the parsed records reproduces the file byte for byte
    NewtonTrace again;
    again.records = back;
    std::ostringstream first, second;
    write_trace_csv(first, tr);
    write_trace_csv(second, again);
    EXPECT_EQ(first.str(), second.str());
}

TEST(TraceCsv, ExtremeValuesRoundTrip) {
    NewtonTrace tr;
    NewtonRecord r;
    r.normF = std::numeric_limits<double>::denorm_min();
    r.eta = 0.1;
    r.decision = {false, UpdateReason::sr1_denominator_negative_policy, -1.0 / 3.0};
    tr.records.push_back(r);
    r.k = 1;
    r.normF = 1e300;
    r.pcg_flag = PcgFlag::breakdown_pAp;
    r.decision = {false, UpdateReason::no_update, 0.0};
    tr.records.push_back(r);
    std::stringstream ss;
    write_trace_csv(ss, tr);
    const auto back = read_trace_csv(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].normF, std::numeric_limits<double>::denorm_min());
    EXPECT_EQ(back[0].decision.denominator, -1.0 / 3.0);
    EXPECT_EQ(back[1].pcg_flag, PcgFlag::breakdown_pAp);
    EXPECT_EQ(back[1].decision.reason, UpdateReason::no_update);
}

TEST(TraceCsv, EigenRoundTripIsLossless) {
    EigenConfig c;
    c.update_kind = UpdateKind::lbfgs_compact;
    c.kmax = 3;
    c.base = {BaseSpec::Kind::ic0, 0.0};
    std::mt19937 gen(1);
    std::uniform_real_distribution<double> u(-1, 1);
    Vector u0(100);
    for (auto& v : u0) v = u(gen);
    const auto res = newton_grassmann(laplacian_2d(10), u0, c);
    std::stringstream ss;
    write_trace_csv(ss, res.trace, c.inner_rel_tol);
    double eta = 0.0;
    const auto back = read_eigen_trace_csv(ss, &eta);
    EXPECT_EQ(eta, c.inner_rel_tol);
    ASSERT_EQ(back.size(), res.trace.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].theta, res.trace.records[i].theta);
        EXPECT_EQ(back[i].residual_norm, res.trace.records[i].residual_norm);
        EXPECT_EQ(back[i].inner_iters, res.trace.records[i].inner_iters);
        EXPECT_EQ(back[i].decision.reason, res.trace.records[i].decision.reason);
    }
}

TEST(TraceCsv, RejectsBadInput) {
    {
        std::istringstream in("k,normF\n");
        EXPECT_THROW(read_trace_csv(in), ParseError);
    }
    {
        std::istringstream in(std::string(newton_trace_header) + "\n0,1.0,0.1,3,converged,ok\n");
        EXPECT_THROW(read_trace_csv(in), ParseError);
    }
    {
        std::istringstream in(std::string(newton_trace_header) + "\n0,abc,0.1,3,converged,ok,1\n");
        try {
            read_trace_csv(in);
            FAIL();
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), 2u);
        }
    }
    {
        std::istringstream in(std::string(newton_trace_header) + "\n0,1,0.1,3,exploded,ok,1\n");
        EXPECT_THROW(read_trace_csv(in), ParseError);
    }
    {
        std::istringstream in(std::string(newton_trace_header) + "\n0,1,0.1,3,converged,maybe,1\n");
        EXPECT_THROW(read_trace_csv(in), ParseError);
    }
    {
        std::istringstream in(std::string(newton_trace_header) + "\n");
        EXPECT_TRUE(read_trace_csv(in).empty());
    }
}

TEST(Json, SpectrumReport) {
    const SparseMatrix A = laplacian_2d(6);
    const auto P = make_base_preconditioner(A, {BaseSpec::Kind::jacobi, 0.0});
    const auto dense = to_json(preconditioned_spectrum_dense(A, P));
    EXPECT_EQ(dense["method"], "dense");
    EXPECT_EQ(dense["spectrum"].size(), 36u);
    EXPECT_FALSE(dense.contains("iters"));
    const auto lz = to_json(preconditioned_spectrum_lanczos(A, P));
    EXPECT_EQ(lz["method"], "lanczos");
    EXPECT_TRUE(lz.contains("iters"));
    EXPECT_LE(lz["lambda_min"].get<double>(), lz["lambda_max"].get<double>());

    std::ostringstream os;
    write_json_line(os, lz);
    const auto text = os.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
    EXPECT_EQ(nlohmann::json::parse(text), lz);
}

TEST(Json, InterlacingReport) {
    InterlacingReport rep;
    rep.skipped = true;
    rep.denominator = -2.0;
    const auto j = to_json(rep);
    EXPECT_TRUE(j["skipped"].get<bool>());
    EXPECT_EQ(j["denominator"].get<double>(), -2.0);
}
