//===- sweep.hpp - Verify and measure points over a matrix set -*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_SWEEP_HPP
#define SGAP_SWEEP_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sgap/design_space.hpp"
#include "sgap/lowering.hpp"
#include "sgap/simulator.hpp"
#include "sgap/sparse.hpp"

namespace sgap {

/// A named input matrix, or the reason it could not be read.
struct MatrixSource {
  std::string name;
  std::optional<CsrMatrix> matrix;
  std::string error;
};

/// "RxC:density:seed" with an optional "seed" prefix on the last field,
/// e.g. "64x64:0.1:seed1". The seed may be omitted.
struct RandomSpec {
  Index rows = 0, cols = 0;
  double density = 0;
  std::uint64_t seed = 1;

  std::string name() const {
    std::ostringstream os;
    os << "random:" << rows << "x" << cols << ":" << density << ":seed" << seed;
    return os.str();
  }
  CsrMatrix build() const { return random_csr(rows, cols, density, seed); }
};

inline RandomSpec parse_random_spec(const std::string& text, std::uint64_t default_seed = 1) {
  auto fail = [&]() -> RandomSpec {
    throw std::invalid_argument("random matrix must look like RxC:density[:seed], got '" + text + "'");
  };
  RandomSpec s;
  s.seed = default_seed;
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string f; std::getline(in, f, ':');) parts.push_back(f);
  if (parts.size() < 2 || parts.size() > 3) return fail();
  const auto x = parts[0].find('x');
  if (x == std::string::npos) return fail();
  try {
    std::size_t used = 0;
    s.rows = std::stoll(parts[0].substr(0, x), &used);
    if (used != x) return fail();
    s.cols = std::stoll(parts[0].substr(x + 1), &used);
    if (used != parts[0].size() - x - 1) return fail();
    s.density = std::stod(parts[1], &used);
    if (used != parts[1].size()) return fail();
    if (parts.size() == 3) {
      std::string seed = parts[2];
      if (seed.rfind("seed", 0) == 0) seed = seed.substr(4);
      s.seed = std::stoull(seed, &used);
      if (used != seed.size()) return fail();
    }
  } catch (const std::logic_error&) {
    return fail();
  }
  if (s.rows < 1 || s.cols < 1 || s.density < 0 || s.density > 1) return fail();
  return s;
}

enum class RowStatus { Pass, Fail, NoTemplate, Error, Unreadable };

inline const char* to_string(RowStatus s) {
  switch (s) {
    case RowStatus::Pass: return "pass";
    case RowStatus::Fail: return "fail";
    case RowStatus::NoTemplate: return "no-template";
    case RowStatus::Error: return "error";
    case RowStatus::Unreadable: return "unreadable";
  }
  return "?";
}

struct SweepRow {
  std::string matrix;
  std::optional<AtomicParallelismPoint> point;  // empty for an unreadable matrix
  std::int64_t N = 4;
  std::int64_t p = 256;
  RowStatus status = RowStatus::Pass;
  double max_rel_error = 0;
  SimMetrics metrics;
  std::string message;
};

struct SweepOptions {
  std::int64_t N = 4;
  std::int64_t p = 256;
  double tolerance = 1e-4;
  std::uint64_t seed = 1;  // for the dense operand
  unsigned threads = 1;
  bool single_precision = false;
};

/// Lowers, simulates and checks one point against the dense oracle.
inline SweepRow evaluate_point(const std::string& name, const CsrMatrix& A, const AtomicParallelismPoint& pt,
                               const SweepOptions& opt) {
  SweepRow row{name, pt, opt.N, opt.p};
  if (auto why = template_problem(pt, opt.N, opt.p); !why.empty()) {
    row.status = RowStatus::NoTemplate;
    row.message = why;
    return row;
  }
  try {
    const KernelConfig cfg{pt, opt.N, opt.p};
    const auto kernel = lower(algorithm_template(cfg), A, cfg);
    const auto B = random_dense(A.num_cols, opt.N, opt.seed);
    SimOptions sim;
    sim.single_precision = opt.single_precision;
    auto result = run(kernel, A, B, sim);
    row.metrics = std::move(result.metrics);
    row.max_rel_error = max_relative_error(result.C, dense_spmm_oracle(A, B));
    row.status = row.max_rel_error <= opt.tolerance ? RowStatus::Pass : RowStatus::Fail;
  } catch (const std::exception& e) {
    row.status = RowStatus::Error;
    row.message = e.what();
  }
  return row;
}

/// One row per (matrix, point) in input order, plus one warning row per
/// unreadable matrix. Cells may run on several threads; the order of the
/// result does not depend on it.
inline std::vector<SweepRow> sweep(const std::vector<MatrixSource>& matrices,
                                   const std::vector<AtomicParallelismPoint>& points, const SweepOptions& opt = {}) {
  struct Cell {
    std::size_t matrix, point;
  };
  std::vector<Cell> cells;
  std::vector<std::size_t> first_row(matrices.size());
  std::size_t rows = 0;
  for (std::size_t m = 0; m < matrices.size(); ++m) {
    first_row[m] = rows;
    if (!matrices[m].matrix) {
      ++rows;
      continue;
    }
    for (std::size_t q = 0; q < points.size(); ++q) cells.push_back({m, q});
    rows += points.size();
  }

  std::vector<SweepRow> out(rows);
  for (std::size_t m = 0; m < matrices.size(); ++m)
    if (!matrices[m].matrix) {
      auto& r = out[first_row[m]];
      r = {matrices[m].name, std::nullopt, opt.N, opt.p, RowStatus::Unreadable};
      r.message = matrices[m].error;
    }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      const auto [m, q] = cells[i];
      out[first_row[m] + q] = evaluate_point(matrices[m].name, *matrices[m].matrix, points[q], opt);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(cells.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

/// Per matrix, the passing row with the fewest max_warp_steps; ties go to
/// fewer total steps, then to the earlier row.
inline std::map<std::string, SweepRow> best_points(const std::vector<SweepRow>& rows) {
  std::map<std::string, SweepRow> best;
  for (const auto& r : rows) {
    if (r.status != RowStatus::Pass) continue;
    auto it = best.find(r.matrix);
    if (it == best.end()) {
      best.emplace(r.matrix, r);
      continue;
    }
    const auto& b = it->second.metrics;
    if (std::pair(r.metrics.max_warp_steps, r.metrics.total_steps) < std::pair(b.max_warp_steps, b.total_steps))
      it->second = r;
  }
  return best;
}

inline constexpr int kSweepSchemaVersion = 1;

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string format_error(double e) {
  std::ostringstream os;
  os.precision(6);
  os << e;
  return os.str();
}

}  // namespace detail

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "schema_version,matrix,point,N,p,status,max_rel_error,max_warp_steps,total_steps,atomic_ops,"
      "idle_lane_steps,warps,message\n";
  for (const auto& r : rows) {
    const bool measured = r.status == RowStatus::Pass || r.status == RowStatus::Fail;
    auto num = [&](std::int64_t v) { return measured ? std::to_string(v) : std::string(); };
    out += std::to_string(kSweepSchemaVersion) + "," + detail::csv_field(r.matrix) + "," +
           detail::csv_field(r.point ? r.point->cli_str() : "") + "," + std::to_string(r.N) + "," + std::to_string(r.p) + "," +
           to_string(r.status) + "," + (measured ? detail::format_error(r.max_rel_error) : "") + "," +
           num(r.metrics.max_warp_steps) + "," + num(r.metrics.total_steps) + "," + num(r.metrics.atomic_ops) +
           "," + num(r.metrics.idle_lane_steps) + "," + num(r.metrics.warps) + "," + detail::csv_field(r.message) +
           "\n";
  }
  return out;
}

}  // namespace sgap

#endif  // SGAP_SWEEP_HPP
