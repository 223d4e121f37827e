/// @file trace_io.hpp
/// @brief CSV serialization of Newton/eigensolver traces and JSON spectrum reports.

#ifndef QNPREC_TRACE_IO_HPP
#define QNPREC_TRACE_IO_HPP

#include "eigsolve.hpp"
#include "error.hpp"
#include "newton.hpp"
#include "spectral.hpp"

#include "json.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace qnprec {

inline constexpr const char* newton_trace_header = "k,normF,eta,pcg_iters,flag,update_reason,denominator";
inline constexpr const char* eigen_trace_header = "k,normF,eta,pcg_iters,flag,update_reason,denominator,theta";

namespace detail {

inline std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline PcgFlag parse_pcg_flag(const std::string& s, std::size_t line) {
    for (auto f : {PcgFlag::converged, PcgFlag::max_iters, PcgFlag::breakdown_pAp, PcgFlag::breakdown_rz})
        if (to_string(f) == s) return f;
    throw ParseError(line, "unknown pcg flag '" + s + "'");
}

inline UpdateReason parse_reason(const std::string& s, std::size_t line) {
    for (auto r : {UpdateReason::ok, UpdateReason::curvature_nonpositive, UpdateReason::sr1_denominator_small,
                   UpdateReason::sr1_denominator_negative_policy, UpdateReason::sr1_singular_middle, UpdateReason::no_update})
        if (to_string(r) == s) return r;
    throw ParseError(line, "unknown update reason '" + s + "'");
}

inline double parse_real(const std::string& s, std::size_t line) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ptr != end || ec != std::errc())
        throw ParseError(line, "invalid number '" + s + "'");
    return v;
}

} // namespace detail

inline void write_trace_csv(std::ostream& out, const NewtonTrace& tr) {
    out << newton_trace_header << '\n';
    for (const auto& r : tr.records) {
        out << r.k << ',' << detail::fmt_real(r.normF) << ',' << detail::fmt_real(r.eta) << ',' << r.pcg_iters << ','
            << to_string(r.pcg_flag) << ',' << to_string(r.decision.reason) << ','
            << detail::fmt_real(r.decision.denominator) << '\n';
    }
}

/// Eigensolver trace: normF holds ||r_k||, eta the inner tolerance.
inline void write_trace_csv(std::ostream& out, const EigenTrace& tr, double inner_rel_tol) {
    out << eigen_trace_header << '\n';
    for (const auto& r : tr.records) {
        out << r.k << ',' << detail::fmt_real(r.residual_norm) << ',' << detail::fmt_real(inner_rel_tol) << ','
            << r.inner_iters << ',' << to_string(r.flag) << ',' << to_string(r.decision.reason) << ','
            << detail::fmt_real(r.decision.denominator) << ',' << detail::fmt_real(r.theta) << '\n';
    }
}

/// Parse a Newton trace written by write_trace_csv.
inline std::vector<NewtonRecord> read_trace_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line != newton_trace_header)
        throw ParseError(lineno, "expected header '" + std::string(newton_trace_header) + "'");
    std::vector<NewtonRecord> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 7) throw ParseError(lineno, "expected 7 fields");
        NewtonRecord r;
        r.k = static_cast<int>(detail::parse_real(f[0], lineno));
        r.normF = detail::parse_real(f[1], lineno);
        r.eta = detail::parse_real(f[2], lineno);
        r.pcg_iters = static_cast<int>(detail::parse_real(f[3], lineno));
        r.pcg_flag = detail::parse_pcg_flag(f[4], lineno);
        r.decision.reason = detail::parse_reason(f[5], lineno);
        r.decision.accepted = r.decision.reason == UpdateReason::ok;
        r.decision.denominator = detail::parse_real(f[6], lineno);
        out.push_back(r);
    }
    return out;
}

/// Parse an eigensolver trace; the eta column is returned through inner_rel_tol.
inline std::vector<EigenRecord> read_eigen_trace_csv(std::istream& in, double* inner_rel_tol = nullptr) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line != eigen_trace_header)
        throw ParseError(lineno, "expected header '" + std::string(eigen_trace_header) + "'");
    std::vector<EigenRecord> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 8) throw ParseError(lineno, "expected 8 fields");
        EigenRecord r;
        r.k = static_cast<int>(detail::parse_real(f[0], lineno));
        r.residual_norm = detail::parse_real(f[1], lineno);
        if (inner_rel_tol) *inner_rel_tol = detail::parse_real(f[2], lineno);
        r.inner_iters = static_cast<int>(detail::parse_real(f[3], lineno));
        r.flag = detail::parse_pcg_flag(f[4], lineno);
        r.decision.reason = detail::parse_reason(f[5], lineno);
        r.decision.accepted = r.decision.reason == UpdateReason::ok;
        r.decision.denominator = detail::parse_real(f[6], lineno);
        r.theta = detail::parse_real(f[7], lineno);
        out.push_back(r);
    }
    return out;
}

inline nlohmann::json to_json(const SpectrumReport& rep) {
    nlohmann::json j;
    j["method"] = rep.method == SpectrumReport::Method::dense ? "dense" : "lanczos";
    j["lambda_min"] = rep.lambda_min;
    j["lambda_max"] = rep.lambda_max;
    if (rep.method == SpectrumReport::Method::lanczos) {
        j["iters"] = rep.lanczos_iters;
        j["converged"] = rep.lanczos_converged;
    }
    if (rep.full_spectrum) j["spectrum"] = *rep.full_spectrum;
    return j;
}

inline nlohmann::json to_json(const InterlacingReport& rep) {
    return {{"skipped", rep.skipped},
            {"interlacing", rep.interlacing_holds},
            {"upper_bound", rep.upper_bound_holds},
            {"condition_bound", rep.condition_bound_holds},
            {"denominator", rep.denominator},
            {"z_norm2", rep.z_norm2},
            {"max_violation", rep.max_violation},
            {"kappa_before", rep.kappa_before},
            {"kappa_after", rep.kappa_after},
            {"kappa_bound", rep.kappa_bound}};
}

/// One compact JSON object per line.
inline void write_json_line(std::ostream& out, const nlohmann::json& j) { out << j.dump() << '\n'; }

} // namespace qnprec

#endif // QNPREC_TRACE_IO_HPP
