//===- acceptance.cpp - End-to-end acceptance checks --------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Prints one PASS or FAIL line per criterion and exits non-zero if any fail.
//
//===----------------------------------------------------------------------===//

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "sgap/sgap.hpp"
#include "test_support.hpp"

using namespace sgap;

namespace {

const std::set<std::int64_t> kG{2, 4, 8, 16, 32};
const std::set<std::int64_t> kC{1, 2, 4};
const std::set<std::int64_t> kR{1, 2, 4, 8, 16, 32};

struct Outcome {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

// 1. Oracle equivalence over every templated legal point.
Outcome oracle_suite() {
  Outcome o;
  const auto corpus = testing::matrix_corpus();
  const auto points = enumerate_space(kG, kC, kR);
  std::size_t runs = 0;
  for (std::int64_t N : {4, 8})
    for (const auto& pt : points) {
      if (!template_problem(pt, N, 256).empty()) continue;
      const KernelConfig cfg{pt, N, 256};
      const auto cin = algorithm_template(cfg);
      for (const auto& m : corpus) {
        const auto B = random_dense(m.A.num_cols, N, 17);
        try {
          const auto C = run(lower(cin, m.A, cfg), m.A, B).C;
          const auto want = dense_spmm_oracle(m.A, B);
          if (max_relative_error(C, want) > 1e-4) o.fail(pt.cli_str() + " N=" + std::to_string(N) + " on " + m.name);
        } catch (const std::exception& e) {
          o.fail(pt.cli_str() + " on " + m.name + ": " + e.what());
        }
        ++runs;
      }
    }
  if (corpus.size() < 20) o.fail("corpus has fewer than 20 matrices");
  if (o.ok) o.detail = std::to_string(runs) + " runs over " + std::to_string(corpus.size()) + " matrices";
  return o;
}

// 2. Legality rules against an independent filter.
Outcome legality_suite() {
  Outcome o;
  auto oracle = [](const AtomicParallelismPoint& p) -> std::optional<int> {
    const bool row = p.data_kind == DataKind::Row;
    const bool rd = p.data_amount.kind == Amount::Reciprocal, rc = p.col_amount.kind == Amount::Reciprocal;
    if (!row && (rd || rc)) return 1;
    if (row && rd && p.r < p.data_amount.param) return 2;
    if (row && rd && rc) return 3;
    return std::nullopt;
  };
  std::set<AtomicParallelismPoint> want;
  const auto all = cross_product(kG, kC, kR);
  for (const auto& p : all)
    if (!oracle(p)) want.insert(p);
  const auto got = enumerate_space(kG, kC, kR);
  if (std::set<AtomicParallelismPoint>(got.begin(), got.end()) != want || got.size() != want.size())
    o.fail("enumerate_space differs from brute force");
  for (std::int64_t c : {1, 2, 4})
    for (const auto& np : da_spmm_points(c))
      if (!is_legal(np.point) || !want.count(np.point)) o.fail(np.name + " missing or illegal");
  const std::pair<const char*, int> rejected[] = {
      {"nnz:1/2,col:1,r:32", 1}, {"row:1/8,col:4,r:4", 2}, {"row:1/4,col:1/2,r:8", 3}};
  for (const auto& [text, rule] : rejected)
    if (illegal_rule(parse_point(text)) != rule) o.fail(std::string(text) + " not rejected by rule " + std::to_string(rule));
  if (o.ok) o.detail = std::to_string(got.size()) + " legal of " + std::to_string(all.size());
  return o;
}

// 3. Group reduction primitives.
Outcome reduction_suite() {
  Outcome o;
  std::mt19937_64 rng(2024);
  for (std::size_t G : {2, 4, 8, 16, 32})
    for (int trial = 0; trial < 10000; ++trial) {
      std::vector<ReductionLane> g(G);
      Index idx = static_cast<Index>(rng() % 4);
      for (auto& lane : g) {
        if (rng() % 3 == 0) idx += 1 + static_cast<Index>(rng() % 2);
        lane = {rng() % 5 != 0, idx, static_cast<double>(static_cast<int>(rng() % 21) - 10) / 4};
      }
      std::vector<double> seg(64, 0.0), want(64, 0.0);
      exec_seg_reduce_group(g, seg);
      for (const auto& lane : g)
        if (lane.active) want[static_cast<std::size_t>(lane.idx)] += lane.val;
      if (seg != want) o.fail("segment reduce differs at G=" + std::to_string(G));

      for (auto& lane : g) lane.idx = 7;
      std::vector<double> a(8, 1.0), s(8, 1.0), sum(8, 1.0);
      double total = 0;
      bool any = false;
      for (const auto& lane : g)
        if (lane.active) {
          total += lane.val;
          any = true;
        }
      if (any) sum[7] += total;
      exec_atomic_add_group(g, a);
      exec_seg_reduce_group(g, s);
      if (a != sum) o.fail("parallel reduce differs from plain sum at G=" + std::to_string(G));
      if (a != s) o.fail("primitives disagree on coinciding indices at G=" + std::to_string(G));
    }
  if (o.ok) o.detail = "5 x 10000 groups";
  return o;
}

std::string emit_point(const char* point, const CsrMatrix& A) {
  const KernelConfig cfg{parse_point(point), 4, 256};
  return emit_cuda(lower(algorithm_template(cfg), A, cfg));
}

// 4. Structural contrast between the segment and serial kernels, and goldens.
Outcome contrast_golden() {
  Outcome o;
  const auto A = random_csr(64, 64, 0.1, 1);
  const auto seg = emit_point("nnz:1,col:1,r:32", A);
  const auto guard = seg.find("if (fposA >= A2_pos[A1_dimension]) {");
  if (guard == std::string::npos) {
    o.fail("segment kernel has no bounds guard");
  } else {
    const auto inside = seg.substr(guard, seg.find('}', guard) - guard);
    if (inside.find("val = 0.0;") == std::string::npos) o.fail("no zero extension under the guard");
    if (inside.find("break") != std::string::npos || inside.find("return") != std::string::npos)
      o.fail("guard exits early");
  }
  if (seg.find("segReduceGroup<") == std::string::npos) o.fail("no segment reduce call");
  const auto serial = emit_point("nnz:32,col:1,r:1", A);
  if (serial.find("break;") == std::string::npos) o.fail("serial kernel has no break");
  if (serial.find("atomicAdd(") == std::string::npos) o.fail("serial kernel has no atomicAdd");

  const std::pair<const char*, const char*> goldens[] = {{"nnz_serial.cu", "nnz:32,col:1,r:1"},
                                                         {"row_serial.cu", "row:1,col:1,r:1"},
                                                         {"row_group.cu", "row:1/32,col:1,r:32"},
                                                         {"nnz_group.cu", "nnz:1,col:1,r:32"}};
  for (const auto& [file, point] : goldens) {
    std::ifstream in(std::string(SGAP_TEST_DATA) + "/golden/" + file, std::ios::binary);
    std::stringstream want;
    want << in.rdbuf();
    if (!in || want.str() != emit_point(point, A)) o.fail(std::string("golden ") + file + " differs");
  }
  return o;
}

// 5. Oversized groups waste lanes on short rows but not on long ones.
Outcome waste_property() {
  Outcome o;
  auto idle = [](const CsrMatrix& A, const char* p) {
    const KernelConfig cfg{parse_point(p), 4, 256};
    return run(lower(algorithm_template(cfg), A, cfg), A, random_dense(A.num_cols, 4, 1)).metrics.idle_lane_steps;
  };
  const auto one = testing::uniform_rows(256, 256, 1);
  const auto wide = testing::uniform_rows(256, 256, 32);
  const auto a32 = idle(one, "row:1/32,col:1,r:32"), a2 = idle(one, "row:1/2,col:1,r:2");
  const auto b32 = idle(wide, "row:1/32,col:1,r:32"), b2 = idle(wide, "row:1/2,col:1,r:2");
  if (!(a32 > a2)) o.fail("1 nnz/row: r=32 idle " + std::to_string(a32) + " not above r=2 idle " + std::to_string(a2));
  if (!(b32 <= b2)) o.fail("32 nnz/row: r=32 idle " + std::to_string(b32) + " above r=2 idle " + std::to_string(b2));
  if (o.ok)
    o.detail = "1/row " + std::to_string(a32) + " > " + std::to_string(a2) + ", 32/row " + std::to_string(b32) +
               " <= " + std::to_string(b2);
  return o;
}

// 6. The listing texts survive parse, print, validate and lower.
Outcome schedule_round_trip() {
  Outcome o;
  const ParamEnv env{{"N", 4}, {"p", 256}, {"c", 1}, {"g", 32}, {"r", 32}};
  const auto A = random_csr(64, 64, 0.1, 1);
  for (auto f : {TemplateFamily::NnzSerial, TemplateFamily::RowSerial, TemplateFamily::RowGroup,
                 TemplateFamily::NnzGroup}) {
    const auto text = listing_text(f);
    const auto name = "template " + std::to_string(static_cast<int>(f));
    try {
      const auto cin = parse_cin(text);
      if (print(cin) != normalize_cin_text(text)) o.fail(name + " does not re-print");
      if (const auto d = validate_schedule(cin, env); !d.empty()) o.fail(name + ": " + d.front());
      lower(cin, A, env);
    } catch (const std::exception& e) {
      o.fail(name + ": " + e.what());
    }
  }
  return o;
}

// 7. Fine-grained space against brute-force filtering.
Outcome fine_grained_suite() {
  Outcome o;
  auto pow2 = [](std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; };
  for (std::int64_t N : {4, 16, 64, 128}) {
    std::set<FineGrainedConfig> want;
    const std::int64_t coarsen = N % 4 == 0 ? 4 : N % 2 == 0 ? 2 : 1;
    for (std::int64_t g = 1; g <= 64; ++g)
      for (std::int64_t b = 32; b <= 1024; b += 32)
        for (std::int64_t t = 1; t <= 1024; ++t)
          for (int e = -4; e <= 4; ++e)
            if (pow2(g) && g >= 2 && g <= 32 && (b == 128 || b == 256 || b == 512) && pow2(t) && t >= g &&
                (t == g || t < 2 * N) && e >= -2 && e <= 2)
              want.insert({g, b, t, e, coarsen, g, 1});
    const auto got = enumerate_fine_grained(N);
    if (std::set<FineGrainedConfig>(got.begin(), got.end()) != want || got.size() != want.size())
      o.fail("N=" + std::to_string(N) + " differs from brute force");
  }
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"oracle equivalence", oracle_suite},          {"legality rules", legality_suite},
      {"reduction primitives", reduction_suite},     {"lowering contrast and goldens", contrast_golden},
      {"parallelism waste", waste_property},         {"schedule round trip", schedule_round_trip},
      {"fine-grained space", fine_grained_suite}};
  int failed = 0, n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.ok ? "PASS" : "FAIL") << " criterion " << n << " " << name;
    if (!o.detail.empty()) std::cout << ": " << o.detail;
    std::cout << " (" << std::fixed << std::setprecision(2) << secs << "s)\n";
    failed += !o.ok;
  }
  return failed == 0 ? 0 : 1;
}
