//===- design_space.hpp - Atomic parallelism design space ------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// A point {<data, col>, r} names the minimal data one thread works on (a
// fraction, one, or several nonzeros or rows, times a number of dense
// columns) and how many threads cooperate on one reduction. Four families of
// points have a scheduled statement template; the rest are enumerated and
// checked for legality only.
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_DESIGN_SPACE_HPP
#define SGAP_DESIGN_SPACE_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "sgap/cin.hpp"
#include "sgap/cin_parser.hpp"

namespace sgap {

class PointError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Amount {
  enum Kind { Reciprocal, One, Multiple } kind = One;
  std::int64_t param = 1;  // >= 2 unless kind == One

  static Amount reciprocal(std::int64_t g) { return make(Reciprocal, g); }
  static Amount one() { return {One, 1}; }
  static Amount multiple(std::int64_t g) { return make(Multiple, g); }

  /// Count n as an amount: 1 is One, anything larger is Multiple(n).
  static Amount of(std::int64_t n) { return n == 1 ? one() : multiple(n); }

  std::string str() const {
    switch (kind) {
      case Reciprocal: return "1/" + std::to_string(param);
      case One: return "1";
      case Multiple: return std::to_string(param);
    }
    return "?";
  }

  friend auto operator<=>(const Amount&, const Amount&) = default;

 private:
  static Amount make(Kind k, std::int64_t g) {
    if (g < 2) throw PointError("amount parameter must be at least 2, got " + std::to_string(g));
    return {k, g};
  }
};

enum class DataKind { Nnz, Row };

inline const char* to_string(DataKind k) { return k == DataKind::Nnz ? "nnz" : "row"; }

inline constexpr std::array<std::int64_t, 6> kReductionParallelism{1, 2, 4, 8, 16, 32};
inline constexpr std::array<std::int64_t, 5> kGroupSizes{2, 4, 8, 16, 32};

struct AtomicParallelismPoint {
  DataKind data_kind = DataKind::Nnz;
  Amount data_amount;
  Amount col_amount;
  std::int64_t r = 1;

  /// Set notation, e.g. "{<1/32 row, 4 col>, 32}".
  std::string str() const {
    return "{<" + data_amount.str() + " " + to_string(data_kind) + ", " + col_amount.str() + " col>, " +
           std::to_string(r) + "}";
  }

  /// Command-line notation, e.g. "row:1/32,col:4,r:32".
  std::string cli_str() const {
    return std::string(to_string(data_kind)) + ":" + data_amount.str() + ",col:" + col_amount.str() +
           ",r:" + std::to_string(r);
  }

  friend auto operator<=>(const AtomicParallelismPoint&, const AtomicParallelismPoint&) = default;
};

namespace detail {

inline std::int64_t parse_positive(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size() || v < 1) throw PointError("bad " + what + " '" + s + "'");
  return v;
}

inline Amount parse_amount(const std::string& s, const std::string& what) {
  if (s.rfind("1/", 0) == 0) {
    const auto g = parse_positive(s.substr(2), what);
    return g == 1 ? Amount::one() : Amount::reciprocal(g);
  }
  return Amount::of(parse_positive(s, what));
}

}  // namespace detail

/// Parses "kind:amount,col:amount,r:N" where kind is nnz or row and an
/// amount is an integer n or a reciprocal 1/n.
inline AtomicParallelismPoint parse_point(const std::string& text) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (std::size_t p = 0; p <= text.size(); ++p)
    if (p == text.size() || text[p] == ',') {
      fields.push_back(text.substr(start, p - start));
      start = p + 1;
    }
  if (fields.size() != 3) throw PointError("point must look like kind:amount,col:amount,r:N; got '" + text + "'");
  auto split = [&](const std::string& f) {
    const auto colon = f.find(':');
    if (colon == std::string::npos) throw PointError("missing ':' in '" + f + "'");
    return std::make_pair(f.substr(0, colon), f.substr(colon + 1));
  };
  AtomicParallelismPoint pt;
  auto [kind, amount] = split(fields[0]);
  if (kind == "nnz") pt.data_kind = DataKind::Nnz;
  else if (kind == "row") pt.data_kind = DataKind::Row;
  else throw PointError("data kind must be nnz or row, got '" + kind + "'");
  pt.data_amount = detail::parse_amount(amount, "data amount");
  auto [col, col_amount] = split(fields[1]);
  if (col != "col") throw PointError("second field must be col:amount, got '" + fields[1] + "'");
  pt.col_amount = detail::parse_amount(col_amount, "column amount");
  auto [rk, rv] = split(fields[2]);
  if (rk != "r") throw PointError("third field must be r:N, got '" + fields[2] + "'");
  pt.r = detail::parse_positive(rv, "reduction parallelism");
  if (std::find(kReductionParallelism.begin(), kReductionParallelism.end(), pt.r) == kReductionParallelism.end())
    throw PointError("reduction parallelism must be one of 1,2,4,8,16,32; got " + rv);
  return pt;
}

// ---------------------------------------------------------------------------
// Legality

/// The lowest-numbered rule the point violates, if any.
inline std::optional<int> illegal_rule(const AtomicParallelismPoint& p) {
  const bool recip_data = p.data_amount.kind == Amount::Reciprocal;
  const bool recip_col = p.col_amount.kind == Amount::Reciprocal;
  if (p.data_kind == DataKind::Nnz && (recip_data || recip_col)) return 1;
  if (p.data_kind == DataKind::Row && recip_data && p.r < p.data_amount.param) return 2;
  if (p.data_kind == DataKind::Row && recip_data && recip_col) return 3;
  return std::nullopt;
}

inline bool is_legal(const AtomicParallelismPoint& p) { return !illegal_rule(p); }

namespace detail {

inline std::vector<Amount> amounts(const std::set<std::int64_t>& values) {
  std::vector<Amount> out;
  for (auto v : values)
    if (v >= 2 && v <= 512) out.push_back(Amount::reciprocal(v));
  out.push_back(Amount::one());
  for (auto v : values)
    if (v >= 2 && v <= 512) out.push_back(Amount::multiple(v));
  return out;
}

}  // namespace detail

/// Every point of the cross product, legal or not, in lexicographic order.
/// Parameters above 512 are dropped; a parameter of 1 is the One amount.
inline std::vector<AtomicParallelismPoint> cross_product(const std::set<std::int64_t>& g_values,
                                                         const std::set<std::int64_t>& c_values,
                                                         const std::set<std::int64_t>& r_values) {
  std::vector<AtomicParallelismPoint> out;
  std::vector<std::int64_t> rs;
  for (auto r : r_values)
    if (std::find(kReductionParallelism.begin(), kReductionParallelism.end(), r) != kReductionParallelism.end())
      rs.push_back(r);
  if (rs.empty()) return out;
  const auto data = detail::amounts(g_values);
  const auto cols = detail::amounts(c_values);
  for (DataKind kind : {DataKind::Nnz, DataKind::Row})
    for (const auto& d : data)
      for (const auto& c : cols)
        for (auto r : rs) out.push_back({kind, d, c, r});
  return out;
}

inline std::vector<AtomicParallelismPoint> enumerate_space(const std::set<std::int64_t>& g_values,
                                                           const std::set<std::int64_t>& c_values,
                                                           const std::set<std::int64_t>& r_values) {
  auto all = cross_product(g_values, c_values, r_values);
  std::vector<AtomicParallelismPoint> out;
  std::copy_if(all.begin(), all.end(), std::back_inserter(out), is_legal);
  return out;
}

struct NamedPoint {
  std::string name;
  AtomicParallelismPoint point;
};

/// DA-SpMM's element/row-balanced, parallel/serial-reduction kernels.
inline std::array<NamedPoint, 4> da_spmm_points(std::int64_t c) {
  if (c < 1) throw PointError("column amount must be positive");
  const Amount col = Amount::of(c);
  return {{
      {"EB+PR", {DataKind::Nnz, Amount::one(), col, 32}},
      {"RB+PR", {DataKind::Row, Amount::reciprocal(32), col, 32}},
      {"EB+SR", {DataKind::Nnz, Amount::multiple(32), col, 1}},
      {"RB+SR", {DataKind::Row, Amount::one(), col, 1}},
  }};
}

// ---------------------------------------------------------------------------
// Templates

struct KernelConfig {
  AtomicParallelismPoint point;
  std::int64_t N = 4;    // dense columns
  std::int64_t p = 256;  // threads per block
  std::optional<std::int64_t> grid_size;  // filled in by lowering
};

enum class TemplateFamily {
  NnzSerial = 1,  // {<g nnz, c col>, 1}
  RowSerial = 2,  // {<g row, c col>, 1}
  RowGroup = 3,   // {<1/g row, c col>, r}
  NnzGroup = 4,   // {<1 nnz, c col>, r}
};

inline std::optional<TemplateFamily> template_family(const AtomicParallelismPoint& p) {
  if (p.col_amount.kind == Amount::Reciprocal) return std::nullopt;
  const auto kind = p.data_amount.kind;
  if (p.data_kind == DataKind::Nnz) {
    if (kind == Amount::Multiple && p.r == 1) return TemplateFamily::NnzSerial;
    if (kind == Amount::One) return TemplateFamily::NnzGroup;
    return std::nullopt;
  }
  if (kind != Amount::Reciprocal && p.r == 1) return TemplateFamily::RowSerial;
  // One group per row: a group wider than the row split would straddle rows.
  if (kind == Amount::Reciprocal && p.r == p.data_amount.param) return TemplateFamily::RowGroup;
  return std::nullopt;
}

/// The scheduled statement of a family with p, g, N, c, r left symbolic.
inline std::string listing_text(TemplateFamily f, bool grouped = true) {
  switch (f) {
    case TemplateFamily::NnzSerial:
      return "suchthat(forall(block,forall(warp,forall(thread,forall(dense_val,where(C(i,k)+=tnnzC,"
             "forall(nnz,tnnzC+=A(i,j)*B(j,k)))),GPUThread,Atomics),GPUWarp,NoRaces),GPUBlock,NoRaces),"
             "fuse(i,j,f) and pos(f,fpos,A(i,j)) and split(fpos,block,fpos1,(p*g/(N/c))) and "
             "split(fpos1,warp,nnz,g) and split(k,ko,thread,c) and bound(ko,dense_val,N/c,MaxExact))";
    case TemplateFamily::RowSerial:
      return "suchthat(forall(block,forall(warp,forall(row,forall(thread,forall(col,where(C(i,k)+=tjC,"
             "forall(j,tjC+=A(i,j)*B(j,k)))),GPUThread,NoRaces)),GPUWarp,NoRaces),GPUBlock,NoRaces),"
             "split(i,block,io,p*g/(N/c)) and split(io,warp,row,g) and split(k,ko,col,c) and "
             "bound(ko,thread,N/c,MaxExact))";
    case TemplateFamily::RowGroup:
      return "suchthat(forall(ko,forall(warp,forall(kii,where(C(i,k)+=tjpos1C,forall(jpos1,forall(jpos0,"
             "tjpos1C+=A(i,j)*B(j,k)),GPUThread,ParallelReduction))),GPUWarp,Atomics),GPUBlock,NoRaces),"
             "fuse(i,k,io) and split(io,ko,ki,c*p/g) and split(ki,warp,kii,c) and pos(j,jpos,A(i,j)) and "
             "split(jpos,jpos0,jpos1,g) and parallelize(jpos1,GPUGroup,r,Atomics))";
    case TemplateFamily::NnzGroup:
      return std::string(
                 "suchthat(forall(block,forall(warp,forall(ki,forall(fpos1,where(C(i,k)+=tmp,tmp=A(i,j)*B(j,k)),"
                 "GPUThread,Atomics)),GPUWarp,NoRaces),GPUBlock,IgnoreRaces),fuse(i,j,f) and "
                 "pos(f,fpos,A(i,j)) and split(fpos,block,fpos1,p/(N/c)) and split(k,ko,ki,c) and "
                 "bound(ko,warp,N/c,MaxExact)") +
             (grouped ? " and parallelize(jpos1,GPUGroup,r,Segment))" : ")");
  }
  return {};
}

/// Values of the listing parameters for a point.
inline ParamEnv template_env(const AtomicParallelismPoint& pt, std::int64_t N, std::int64_t p) {
  return {{"N", N},
          {"p", p},
          {"g", pt.data_amount.param},
          {"c", pt.col_amount.param},
          {"r", pt.r}};
}

inline ParamEnv template_env(const KernelConfig& cfg) { return template_env(cfg.point, cfg.N, cfg.p); }

namespace detail {

inline Relation substitute(const Relation& r, const ParamEnv& env) {
  Relation out = r;
  if (auto* s = std::get_if<SplitRel>(&out)) s->factor = s->factor.substitute(env);
  else if (auto* b = std::get_if<BoundRel>(&out)) b->extent = b->extent.substitute(env);
  else if (auto* g = std::get_if<GroupRel>(&out)) g->group_size = g->group_size.substitute(env);
  return out;
}

}  // namespace detail

/// The family's statement with listing parameters left symbolic.
inline CinStmt symbolic_template(TemplateFamily f, bool grouped = true) {
  return parse_cin(listing_text(f, grouped));
}

/// Why `pt` has no template under `cfg`, or an empty string.
inline std::string template_problem(const AtomicParallelismPoint& pt, std::int64_t N, std::int64_t p) {
  if (auto rule = illegal_rule(pt)) return "illegal point (rule " + std::to_string(*rule) + ")";
  const auto fam = template_family(pt);
  if (!fam) return "legal, no template for " + pt.str();
  if (N < 1) return "N must be positive";
  if (p < 32 || p % 32 != 0) return "threads per block must be a positive multiple of 32";
  const auto c = pt.col_amount.param;
  const auto g = pt.data_amount.param;
  if (N % c != 0) return "column amount " + std::to_string(c) + " does not divide N=" + std::to_string(N);
  switch (*fam) {
    case TemplateFamily::NnzSerial:
    case TemplateFamily::RowSerial:
      if ((p * c) % N != 0)
        return "p*c/N = " + std::to_string(p) + "*" + std::to_string(c) + "/" + std::to_string(N) +
               " is not an integer";
      break;
    case TemplateFamily::RowGroup:
      if (p % g != 0) return "row split " + std::to_string(g) + " does not divide p=" + std::to_string(p);
      break;
    case TemplateFamily::NnzGroup:
      if ((p * c) % N != 0)
        return "p/(N/c) = " + std::to_string(p) + "/" + std::to_string(N / c) + " is not an integer";
      if (pt.r > 1 && ((p * c) / N) % pt.r != 0)
        return "group of " + std::to_string(pt.r) + " lanes does not divide " + std::to_string((p * c) / N) +
               " lanes per column";
      break;
  }
  return {};
}

/// Instantiates the family template of `pt` with p, g, N, c and r
/// substituted. Throws PointError for illegal or untemplated points and when
/// the listing's split factors are not integers.
inline CinStmt algorithm_template(const AtomicParallelismPoint& pt, const KernelConfig& cfg) {
  if (auto problem = template_problem(pt, cfg.N, cfg.p); !problem.empty()) throw PointError(problem);
  const auto fam = *template_family(pt);
  const bool grouped = !(fam == TemplateFamily::NnzGroup && pt.r == 1);
  CinStmt sym = symbolic_template(fam, grouped);
  const ParamEnv env = template_env(pt, cfg.N, cfg.p);
  std::vector<Relation> rels;
  for (const auto& r : sym.relations()) rels.push_back(detail::substitute(r, env));
  return sym.with(sym.body(), rels);
}

inline CinStmt algorithm_template(const KernelConfig& cfg) { return algorithm_template(cfg.point, cfg); }

// ---------------------------------------------------------------------------
// Fine-grained tuning space

struct FineGrainedConfig {
  std::int64_t groupSz = 2;
  std::int64_t blockSz = 128;
  std::int64_t tileSz = 2;
  int workerDimR_exp = 0;  // workerDimR = rows * 2^exp
  std::int64_t coarsenSz = 1;
  std::int64_t workerSz = 2;
  std::int64_t threadRw = 1;

  /// The workerDimR multiplier as a string: "4", "1", "1/2".
  std::string workerDimR_scale() const {
    return workerDimR_exp >= 0 ? std::to_string(1 << workerDimR_exp) : "1/" + std::to_string(1 << -workerDimR_exp);
  }

  friend auto operator<=>(const FineGrainedConfig&, const FineGrainedConfig&) = default;
};

inline constexpr std::array<std::int64_t, 3> kBlockSizes{128, 256, 512};
inline constexpr int kWorkerDimRExpMin = -2;
inline constexpr int kWorkerDimRExpMax = 2;

inline std::int64_t coarsen_size(std::int64_t N) { return N % 4 == 0 ? 4 : N % 2 == 0 ? 2 : 1; }

inline std::int64_t next_pow2(std::int64_t n) {
  std::int64_t v = 1;
  while (v < n) v <<= 1;
  return v;
}

/// Largest tile considered for N dense columns and the given group size.
inline std::int64_t max_tile_size(std::int64_t N, std::int64_t groupSz) {
  return std::max(groupSz, next_pow2(N));
}

inline std::vector<FineGrainedConfig> enumerate_fine_grained(std::int64_t N) {
  if (N < 1) throw std::invalid_argument("N must be positive");
  std::vector<FineGrainedConfig> out;
  const auto coarsen = coarsen_size(N);
  for (auto group : kGroupSizes)
    for (auto block : kBlockSizes)
      for (std::int64_t tile = group; tile <= max_tile_size(N, group); tile *= 2)
        for (int e = kWorkerDimRExpMin; e <= kWorkerDimRExpMax; ++e)
          out.push_back({group, block, tile, e, coarsen, group, 1});
  return out;
}

}  // namespace sgap

#endif  // SGAP_DESIGN_SPACE_HPP
