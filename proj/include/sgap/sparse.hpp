//===- sparse.hpp - CSR and dense matrices, ingestion, SpMM oracle -*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// The sparse operand A is stored as CSR (a dense row level over a compressed
// column level): row_ptr is the position array, col_idx the coordinate array.
// B and C are dense and row-major.
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_SPARSE_HPP
#define SGAP_SPARSE_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace sgap {

using Index = std::int64_t;

struct CsrMatrix {
  Index num_rows = 0;
  Index num_cols = 0;
  std::vector<Index> row_ptr{0};
  std::vector<Index> col_idx;
  std::vector<double> vals;

  Index nnz() const { return static_cast<Index>(col_idx.size()); }

  friend bool operator==(const CsrMatrix&, const CsrMatrix&) = default;
};

struct DenseMatrix {
  Index num_rows = 0;
  Index num_cols = 0;
  std::vector<double> vals;

  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols, double fill = 0.0)
      : num_rows(rows), num_cols(cols),
        vals(static_cast<std::size_t>(rows * cols), fill) {}

  double& at(Index r, Index c) { return vals[static_cast<std::size_t>(r * num_cols + c)]; }
  double at(Index r, Index c) const { return vals[static_cast<std::size_t>(r * num_cols + c)]; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

/// Text grid: a "rows cols" line, then one row per line with values at
/// 17 significant digits so a dump reads back bit-exact.
inline std::string dense_text(const DenseMatrix& m) {
  std::ostringstream os;
  os.precision(17);
  os << m.num_rows << " " << m.num_cols << "\n";
  for (Index r = 0; r < m.num_rows; ++r) {
    for (Index c = 0; c < m.num_cols; ++c) os << (c ? " " : "") << m.at(r, c);
    os << "\n";
  }
  return os.str();
}

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Returns an empty string when every CSR invariant holds, otherwise a
/// description of the first violation.
inline std::string csr_violation(const CsrMatrix& a) {
  if (a.num_rows < 0 || a.num_cols < 0) return "negative dimension";
  if (a.row_ptr.size() != static_cast<std::size_t>(a.num_rows + 1))
    return "row_ptr length is not num_rows+1";
  if (a.row_ptr.front() != 0) return "row_ptr[0] != 0";
  if (a.vals.size() != a.col_idx.size()) return "vals and col_idx lengths differ";
  if (a.row_ptr.back() != a.nnz()) return "row_ptr[num_rows] != nnz";
  for (Index r = 0; r < a.num_rows; ++r) {
    if (a.row_ptr[r + 1] < a.row_ptr[r]) return "row_ptr decreases at row " + std::to_string(r);
    for (Index p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      if (a.col_idx[p] < 0 || a.col_idx[p] >= a.num_cols)
        return "column out of range at position " + std::to_string(p);
      if (p > a.row_ptr[r] && a.col_idx[p] <= a.col_idx[p - 1])
        return "columns not strictly increasing in row " + std::to_string(r);
    }
  }
  return {};
}

inline bool is_valid_csr(const CsrMatrix& a) { return csr_violation(a).empty(); }

/// Builds CSR from 0-based (row, col, value) triples. Duplicates are summed.
inline CsrMatrix csr_from_triples(Index rows, Index cols,
                                  const std::vector<std::tuple<Index, Index, double>>& triples) {
  std::map<std::pair<Index, Index>, double> merged;
  for (const auto& [r, c, v] : triples) merged[{r, c}] += v;

  CsrMatrix a;
  a.num_rows = rows;
  a.num_cols = cols;
  a.row_ptr.assign(static_cast<std::size_t>(rows + 1), 0);
  a.col_idx.reserve(merged.size());
  a.vals.reserve(merged.size());
  for (const auto& [rc, v] : merged) {
    ++a.row_ptr[static_cast<std::size_t>(rc.first + 1)];
    a.col_idx.push_back(rc.second);
    a.vals.push_back(v);
  }
  for (Index r = 0; r < rows; ++r) a.row_ptr[r + 1] += a.row_ptr[r];
  return a;
}

inline CsrMatrix identity_csr(Index n) {
  std::vector<std::tuple<Index, Index, double>> t;
  for (Index i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
  return csr_from_triples(n, n, t);
}

namespace detail {

inline bool parse_index(const std::string& tok, Index& out) {
  std::size_t used = 0;
  try {
    out = std::stoll(tok, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == tok.size();
}

inline bool parse_real(const std::string& tok, double& out) {
  std::size_t used = 0;
  try {
    out = std::stod(tok, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == tok.size();
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace detail

/// Parses Matrix Market coordinate text (real/integer/pattern; general or
/// symmetric). Indices on disk are 1-based.
inline CsrMatrix parse_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) throw ParseError(1, "empty input");
  ++lineno;
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket") throw ParseError(lineno, "missing %%MatrixMarket banner");
  if (detail::lower(object) != "matrix" || detail::lower(format) != "coordinate")
    throw ParseError(lineno, "only 'matrix coordinate' files are supported");
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  const bool pattern = field == "pattern";
  if (!pattern && field != "real" && field != "integer")
    throw ParseError(lineno, "unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError(lineno, "unsupported symmetry '" + symmetry + "'");
  const bool symmetric = symmetry == "symmetric";

  // Size line: first non-comment, non-blank line.
  Index rows = -1, cols = -1, entries = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '%') continue;
    std::istringstream ss(line);
    std::string a, b, c, extra;
    ss >> a >> b >> c;
    if (!detail::parse_index(a, rows) || !detail::parse_index(b, cols) ||
        !detail::parse_index(c, entries) || (ss >> extra))
      throw ParseError(lineno, "malformed size line");
    if (rows < 0 || cols < 0 || entries < 0) throw ParseError(lineno, "negative size");
    break;
  }
  if (rows < 0) throw ParseError(lineno, "missing size line");

  std::vector<std::tuple<Index, Index, double>> triples;
  triples.reserve(static_cast<std::size_t>(symmetric ? 2 * entries : entries));
  Index seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '%') continue;
    std::istringstream ss(line);
    std::string rs, cs, vs, extra;
    ss >> rs >> cs;
    Index r = 0, c = 0;
    double v = 1.0;
    if (!detail::parse_index(rs, r) || !detail::parse_index(cs, c))
      throw ParseError(lineno, "non-integer coordinate");
    if (!pattern) {
      if (!(ss >> vs) || !detail::parse_real(vs, v))
        throw ParseError(lineno, "non-numeric value");
    }
    if (ss >> extra) throw ParseError(lineno, "trailing tokens");
    if (r < 1 || r > rows || c < 1 || c > cols)
      throw ParseError(lineno, "coordinate (" + rs + "," + cs + ") out of range");
    triples.emplace_back(r - 1, c - 1, v);
    if (symmetric && r != c) triples.emplace_back(c - 1, r - 1, v);
    ++seen;
  }
  if (seen != entries)
    throw ParseError(lineno, "expected " + std::to_string(entries) + " entries, found " +
                                 std::to_string(seen));
  return csr_from_triples(rows, cols, triples);
}

inline CsrMatrix load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open '" + path + "'");
  return parse_matrix_market(in);
}

/// Each entry is kept independently with probability `density`; density 1
/// yields a fully dense matrix. Values are small integers so oracle sums stay
/// exact in double precision.
inline CsrMatrix random_csr(Index num_rows, Index num_cols, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> keep(0.0, 1.0);
  std::uniform_int_distribution<int> value(1, 9);

  CsrMatrix a;
  a.num_rows = num_rows;
  a.num_cols = num_cols;
  a.row_ptr.assign(static_cast<std::size_t>(num_rows + 1), 0);
  for (Index r = 0; r < num_rows; ++r) {
    for (Index c = 0; c < num_cols; ++c) {
      if (density >= 1.0 || keep(rng) < density) {
        a.col_idx.push_back(c);
        a.vals.push_back(static_cast<double>(value(rng)));
      }
    }
    a.row_ptr[r + 1] = a.nnz();
  }
  return a;
}

inline DenseMatrix random_dense(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> value(-4, 4);
  DenseMatrix m(rows, cols);
  for (auto& v : m.vals) v = static_cast<double>(value(rng));
  return m;
}

/// C[i,k] = sum_j A[i,j] * B[j,k], accumulated serially in double in
/// ascending (i, j, k) order.
inline DenseMatrix dense_spmm_oracle(const CsrMatrix& a, const DenseMatrix& b) {
  if (a.num_cols != b.num_rows)
    throw DimensionMismatch("A has " + std::to_string(a.num_cols) + " columns but B has " +
                            std::to_string(b.num_rows) + " rows");
  DenseMatrix c(a.num_rows, b.num_cols);
  for (Index i = 0; i < a.num_rows; ++i)
    for (Index p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p)
      for (Index k = 0; k < b.num_cols; ++k) c.at(i, k) += a.vals[p] * b.at(a.col_idx[p], k);
  return c;
}

}  // namespace sgap

#endif  // SGAP_SPARSE_HPP
