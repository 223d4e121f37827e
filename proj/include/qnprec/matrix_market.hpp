/// @file matrix_market.hpp
/// @brief Matrix Market coordinate I/O for symmetric real matrices.

#ifndef QNPREC_MATRIX_MARKET_HPP
#define QNPREC_MATRIX_MARKET_HPP

#include "error.hpp"
#include "sparse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace qnprec {

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

template <class T>
T parse_number(const std::string& tok, std::size_t line, const char* what) {
    T value{};
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (!tok.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError(line, std::string("invalid ") + what + " '" + tok + "'");
    return value;
}

} // namespace detail

/// Read a `coordinate real symmetric` (or `integer symmetric`) Matrix Market
/// stream. One-based indices are converted to zero-based; both triangles are
/// stored in the result.
inline SparseMatrix read_matrix_market(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(1, "empty input, expected %%MatrixMarket banner");
    ++lineno;
    const auto banner = detail::split_ws(line);
    if (banner.empty() || banner[0] != "%%MatrixMarket")
        throw ParseError(lineno, "expected '%%MatrixMarket' banner, got '" + (banner.empty() ? line : banner[0]) + "'");
    if (banner.size() != 5) throw ParseError(lineno, "banner must have 5 tokens");
    const std::string object = detail::lowercase(banner[1]);
    const std::string format = detail::lowercase(banner[2]);
    const std::string field = detail::lowercase(banner[3]);
    const std::string symmetry = detail::lowercase(banner[4]);
    if (object != "matrix") throw ParseError(lineno, "unsupported object '" + banner[1] + "'");
    if (format != "coordinate") throw ParseError(lineno, "unsupported format '" + banner[2] + "'");
    if (field != "real" && field != "integer" && field != "double")
        throw ParseError(lineno, "unsupported field '" + banner[3] + "'");
    if (symmetry != "symmetric") throw ParseError(lineno, "non-symmetric matrix '" + banner[4] + "' rejected");

    // size line, after comments
    std::vector<std::string> size_tokens;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        if (detail::blank(line)) continue;
        size_tokens = detail::split_ws(line);
        break;
    }
    if (size_tokens.size() != 3) throw ParseError(lineno, "expected size line 'rows cols entries'");
    const auto rows = detail::parse_number<long long>(size_tokens[0], lineno, "row count");
    const auto cols = detail::parse_number<long long>(size_tokens[1], lineno, "column count");
    const auto nnz = detail::parse_number<long long>(size_tokens[2], lineno, "entry count");
    if (rows != cols) throw ParseError(lineno, "symmetric matrix must be square");
    if (rows < 0 || nnz < 0) throw ParseError(lineno, "negative size");

    const auto n = static_cast<index_t>(rows);
    std::vector<Triplet> entries;
    entries.reserve(static_cast<std::size_t>(2 * nnz));
    std::set<std::pair<index_t, index_t>> seen;
    long long read = 0;
    while (read < nnz && std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] == '%') continue;
        if (detail::blank(line)) continue;
        const auto tok = detail::split_ws(line);
        if (tok.size() != 3) throw ParseError(lineno, "expected 'row col value', got " + std::to_string(tok.size()) + " tokens");
        const auto i = detail::parse_number<long long>(tok[0], lineno, "row index");
        const auto j = detail::parse_number<long long>(tok[1], lineno, "column index");
        const auto v = detail::parse_number<double>(tok[2], lineno, "value");
        if (i < 1 || i > rows) throw ParseError(lineno, "row index '" + tok[0] + "' out of range");
        if (j < 1 || j > cols) throw ParseError(lineno, "column index '" + tok[1] + "' out of range");
        const index_t r = static_cast<index_t>(std::max(i, j) - 1);
        const index_t c = static_cast<index_t>(std::min(i, j) - 1);
        if (!seen.emplace(r, c).second) throw ParseError(lineno, "duplicate entry (" + tok[0] + ", " + tok[1] + ")");
        entries.push_back({r, c, v});
        if (r != c) entries.push_back({c, r, v});
        ++read;
    }
    if (read != nnz)
        throw ParseError(lineno, "expected " + std::to_string(nnz) + " entries, found " + std::to_string(read));
    return SparseMatrix::from_triplets(n, std::move(entries), true);
}

inline SparseMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_matrix_market(in);
}

/// Write the lower triangle of a symmetric matrix with round-trip precision.
inline void write_matrix_market(std::ostream& out, const SparseMatrix& A) {
    if (!A.symmetric()) throw Error("write_matrix_market: only symmetric matrices are supported");
    const auto L = A.lower();
    out << "%%MatrixMarket matrix coordinate real symmetric\n";
    out << A.rows() << ' ' << A.rows() << ' ' << L.nnz() << '\n';
    char buf[64];
    for (index_t i = 0; i < L.rows(); ++i) {
        for (index_t k = L.row_ptr()[i]; k < L.row_ptr()[i + 1]; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", L.values()[k]);
            out << i + 1 << ' ' << L.col_idx()[k] + 1 << ' ' << buf << '\n';
        }
    }
}

inline void write_matrix_market(const std::string& path, const SparseMatrix& A) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    write_matrix_market(out, A);
}

} // namespace qnprec

#endif // QNPREC_MATRIX_MARKET_HPP
