//===- test_design_space.cpp ------------------------------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include <gtest/gtest.h>

#include <set>

#include "json.hpp"
#include "sgap/cin_parser.hpp"
#include "sgap/design_space.hpp"
#include "sgap/scheduler.hpp"
#include "sgap/serialize.hpp"

using namespace sgap;

namespace {

const std::set<std::int64_t> kG{2, 4, 8, 16, 32};
const std::set<std::int64_t> kC{1, 2, 4};
const std::set<std::int64_t> kR{1, 2, 4, 8, 16, 32};

// Independent restatement of the legality rules over raw fields.
std::optional<int> rule_oracle(bool row, Amount::Kind data, std::int64_t g, Amount::Kind col, std::int64_t r) {
  const bool recip_d = data == Amount::Reciprocal, recip_c = col == Amount::Reciprocal;
  if (!row && (recip_d || recip_c)) return 1;
  if (row && recip_d && static_cast<double>(r) / static_cast<double>(g) < 1) return 2;
  if (row && recip_d && recip_c) return 3;
  return std::nullopt;
}

std::vector<Amount> all_amounts(const std::set<std::int64_t>& params) {
  std::vector<Amount> out;
  for (auto v : params)
    if (v >= 2) out.push_back(Amount::reciprocal(v));
  out.push_back(Amount::one());
  for (auto v : params)
    if (v >= 2) out.push_back(Amount::multiple(v));
  return out;
}

}  // namespace

TEST(Point, PrintAndParse) {
  const AtomicParallelismPoint p{DataKind::Row, Amount::reciprocal(32), Amount::multiple(4), 32};
  EXPECT_EQ(p.str(), "{<1/32 row, 4 col>, 32}");
  EXPECT_EQ(p.cli_str(), "row:1/32,col:4,r:32");
  EXPECT_EQ(parse_point("row:1/32,col:4,r:32"), p);
  EXPECT_EQ(parse_point("nnz:1,col:1/2,r:1").col_amount, Amount::reciprocal(2));
  EXPECT_EQ(parse_point("nnz:1/1,col:1,r:1").data_amount, Amount::one());
  for (const char* bad : {"", "nnz:1,col:1", "blk:1,col:1,r:1", "nnz:0,col:1,r:1", "nnz:1,col:1,r:3",
                          "nnz:1,col:1,r:64", "nnz:1,row:1,r:1", "nnz:x,col:1,r:1", "nnz:1,col:1,q:1"})
    EXPECT_THROW(parse_point(bad), PointError) << bad;
  EXPECT_THROW(Amount::reciprocal(1), PointError);
}

TEST(Point, JsonRoundTrip) {
  for (const auto& p : enumerate_space(kG, kC, kR)) {
    nlohmann::json j = p;
    EXPECT_EQ(j.get<AtomicParallelismPoint>(), p);
  }
  nlohmann::json cfg = KernelConfig{parse_point("nnz:1,col:2,r:8"), 8, 128};
  EXPECT_EQ(cfg["N"], 8);
  EXPECT_EQ(cfg["point"]["text"], "nnz:1,col:2,r:8");
}

TEST(Legality, RejectedExamples) {
  EXPECT_EQ(illegal_rule(parse_point("nnz:1/2,col:1,r:32")), 1);
  EXPECT_TRUE(is_legal(parse_point("row:1/32,col:4,r:32")));
  EXPECT_EQ(illegal_rule(parse_point("row:1/8,col:4,r:4")), 2);
  EXPECT_EQ(illegal_rule(parse_point("row:1/4,col:1/2,r:8")), 3);
  EXPECT_EQ(illegal_rule(parse_point("nnz:4,col:1/2,r:1")), 1);
  EXPECT_TRUE(is_legal(parse_point("row:4,col:1/2,r:1")));  // legal by the rules, but untemplated
  EXPECT_FALSE(template_family(parse_point("row:4,col:1/2,r:1")));
  EXPECT_NE(template_problem(parse_point("row:4,col:1/2,r:1"), 4, 256).find("legal, no template"),
            std::string::npos);
  EXPECT_EQ(template_problem(parse_point("row:1/8,col:4,r:4"), 4, 256), "illegal point (rule 2)");
}

TEST(Legality, EnumerationMatchesBruteForce) {
  const std::vector<std::set<std::int64_t>> g_sets{kG, {2}, {32, 64}, {3, 5}};
  for (const auto& gs : g_sets)
    for (const auto& cs : {kC, std::set<std::int64_t>{1}, std::set<std::int64_t>{2, 8}}) {
      std::set<AtomicParallelismPoint> want;
      for (bool row : {false, true})
        for (const auto& d : all_amounts(gs))
          for (const auto& c : all_amounts(cs))
            for (auto r : kR)
              if (!rule_oracle(row, d.kind, d.param, c.kind, r))
                want.insert({row ? DataKind::Row : DataKind::Nnz, d, c, r});
      const auto got = enumerate_space(gs, cs, kR);
      EXPECT_EQ(std::set<AtomicParallelismPoint>(got.begin(), got.end()), want);
      EXPECT_EQ(got.size(), want.size()) << "duplicates";
      EXPECT_TRUE(std::is_sorted(got.begin(), got.end()));
      for (const auto& p : cross_product(gs, cs, kR))
        EXPECT_EQ(illegal_rule(p), rule_oracle(p.data_kind == DataKind::Row, p.data_amount.kind,
                                               p.data_amount.param, p.col_amount.kind, p.r));
    }
  EXPECT_TRUE(enumerate_space(kG, kC, {}).empty());
}

TEST(DaSpmm, PointsAreLegalDistinctAndPresent) {
  for (std::int64_t c : {1, 2, 4}) {
    const auto pts = da_spmm_points(c);
    const auto space = enumerate_space(kG, kC, kR);
    std::set<AtomicParallelismPoint> seen;
    for (const auto& np : pts) {
      EXPECT_TRUE(is_legal(np.point)) << np.name;
      EXPECT_NE(std::find(space.begin(), space.end(), np.point), space.end()) << np.name;
      seen.insert(np.point);
    }
    EXPECT_EQ(seen.size(), 4u);
  }
  const auto four = da_spmm_points(4);
  EXPECT_EQ(four[0].point.str(), "{<1 nnz, 4 col>, 32}");
  EXPECT_EQ(four[1].point.str(), "{<1/32 row, 4 col>, 32}");
  EXPECT_EQ(four[2].point.str(), "{<32 nnz, 4 col>, 1}");
  EXPECT_EQ(four[3].point.str(), "{<1 row, 4 col>, 1}");
  EXPECT_EQ(template_family(four[0].point), TemplateFamily::NnzGroup);
  EXPECT_EQ(template_family(four[1].point), TemplateFamily::RowGroup);
  EXPECT_EQ(template_family(four[2].point), TemplateFamily::NnzSerial);
  EXPECT_EQ(template_family(four[3].point), TemplateFamily::RowSerial);
}

TEST(Templates, NnzSerialSubstitution) {
  const KernelConfig cfg{parse_point("nnz:32,col:1,r:1"), 4, 256};
  const auto text = print(algorithm_template(cfg));
  EXPECT_NE(text.find("split(fpos,block,fpos1,(256*32/(4/1)))"), std::string::npos) << text;
  EXPECT_NE(text.find("GPUThread,Atomics"), std::string::npos);
  EXPECT_EQ(text.find("GPUGroup"), std::string::npos);
}

TEST(Templates, GroupAnnotations) {
  const auto five = print(algorithm_template(KernelConfig{parse_point("row:1/8,col:2,r:8"), 4, 256}));
  EXPECT_NE(five.find("parallelize(jpos1,GPUGroup,8,Atomics)"), std::string::npos) << five;
  const auto six = print(algorithm_template(KernelConfig{parse_point("nnz:1,col:1,r:16"), 4, 256}));
  EXPECT_NE(six.find("parallelize(jpos1,GPUGroup,16,Segment)"), std::string::npos) << six;
  const auto serial = print(algorithm_template(KernelConfig{parse_point("nnz:1,col:1,r:1"), 4, 256}));
  EXPECT_EQ(serial.find("GPUGroup"), std::string::npos);
}

TEST(Templates, EveryTemplatedPointValidates) {
  int templated = 0;
  for (std::int64_t N : {4, 8})
    for (const auto& pt : enumerate_space(kG, kC, kR)) {
      if (!template_problem(pt, N, 256).empty()) continue;
      ++templated;
      const KernelConfig cfg{pt, N, 256};
      const auto diags = validate_schedule(algorithm_template(cfg), template_env(cfg));
      EXPECT_TRUE(diags.empty()) << pt.str() << " N=" << N << ": " << diags.front();
    }
  EXPECT_GT(templated, 100);
}

TEST(Templates, Rejections) {
  const KernelConfig untemplated{parse_point("row:1/32,col:1,r:32"), 4, 256};
  EXPECT_NO_THROW(algorithm_template(untemplated));
  EXPECT_THROW(algorithm_template(KernelConfig{parse_point("row:1/8,col:1,r:16"), 4, 256}), PointError);
  EXPECT_THROW(algorithm_template(KernelConfig{parse_point("nnz:1/2,col:1,r:1"), 4, 256}), PointError);
  EXPECT_THROW(algorithm_template(KernelConfig{parse_point("nnz:1,col:8,r:1"), 4, 256}), PointError);  // c > N
  EXPECT_THROW(algorithm_template(KernelConfig{parse_point("nnz:1,col:2,r:1"), 3, 256}), PointError);  // N % c
}

TEST(FineGrained, MatchesBruteForce) {
  auto pow2 = [](std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; };
  for (std::int64_t N : {1, 3, 4, 6, 16, 64, 100, 128}) {
    std::set<FineGrainedConfig> want;
    const std::int64_t coarsen = N % 4 == 0 ? 4 : N % 2 == 0 ? 2 : 1;
    std::int64_t cap = 1;
    while (cap < N) cap *= 2;
    for (std::int64_t g = 1; g <= 64; ++g)
      for (std::int64_t b = 32; b <= 1024; b += 32)
        for (std::int64_t t = 1; t <= 512; ++t)
          for (int e = -4; e <= 4; ++e) {
            const bool ok = pow2(g) && g >= 2 && g <= 32 && (b == 128 || b == 256 || b == 512) && pow2(t) &&
                            t >= g && t <= std::max(g, cap) && e >= -2 && e <= 2;
            if (ok) want.insert({g, b, t, e, coarsen, g, 1});
          }
    const auto got = enumerate_fine_grained(N);
    EXPECT_EQ(std::set<FineGrainedConfig>(got.begin(), got.end()), want) << "N=" << N;
    EXPECT_EQ(got.size(), want.size());
    for (const auto& c : got) {
      EXPECT_GE(c.tileSz, c.groupSz);
      EXPECT_EQ(c.coarsenSz, coarsen);
    }
  }
  EXPECT_EQ(enumerate_fine_grained(4).front().workerDimR_scale(), "1/4");
  EXPECT_THROW(enumerate_fine_grained(0), std::invalid_argument);
}
