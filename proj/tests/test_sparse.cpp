//===- test_sparse.cpp ------------------------------------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include <gtest/gtest.h>

#include <sstream>

#include "sgap/sparse.hpp"
#include "test_support.hpp"

using namespace sgap;

namespace {

std::string data(const std::string& name) { return std::string(SGAP_TEST_DATA) + "/data/" + name; }

// Reference: a dense copy built straight from triples.
DenseMatrix densify(Index rows, Index cols, const std::vector<std::tuple<Index, Index, double>>& t) {
  DenseMatrix d(rows, cols);
  for (const auto& [r, c, v] : t) d.at(r, c) += v;
  return d;
}

DenseMatrix densify(const CsrMatrix& a) {
  DenseMatrix d(a.num_rows, a.num_cols);
  for (Index r = 0; r < a.num_rows; ++r)
    for (Index p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) d.at(r, a.col_idx[p]) += a.vals[p];
  return d;
}

}  // namespace

TEST(MatrixMarket, GeneralFileSumsDuplicates) {
  auto a = load_matrix_market(data("small_general.mtx"));
  ASSERT_TRUE(is_valid_csr(a)) << csr_violation(a);
  EXPECT_EQ(a.num_rows, 4);
  EXPECT_EQ(a.num_cols, 5);
  EXPECT_EQ(a.nnz(), 5);
  EXPECT_EQ(a.row_ptr, (std::vector<Index>{0, 2, 2, 4, 5}));
  EXPECT_EQ(a.col_idx, (std::vector<Index>{0, 3, 1, 4, 0}));
  EXPECT_EQ(a.vals, (std::vector<double>{2.5, -1, 5, 0.5, 7}));
}

TEST(MatrixMarket, SymmetricPatternMirrorsOffDiagonal) {
  auto a = load_matrix_market(data("symmetric_pattern.mtx"));
  ASSERT_TRUE(is_valid_csr(a));
  EXPECT_EQ(a.nnz(), 6);
  auto d = densify(a);
  for (Index r = 0; r < 3; ++r)
    for (Index c = 0; c < 3; ++c) EXPECT_EQ(d.at(r, c), d.at(c, r));
  EXPECT_EQ(d.at(1, 0), 1.0);
  EXPECT_EQ(d.at(1, 1), 0.0);
}

TEST(MatrixMarket, IdentityAndEmptyRows) {
  EXPECT_EQ(load_matrix_market(data("identity8.mtx")), identity_csr(8));
  auto e = load_matrix_market(data("empty_rows.mtx"));
  EXPECT_EQ(e.row_ptr, (std::vector<Index>{0, 0, 1, 1, 1, 2, 2}));
}

TEST(MatrixMarket, ErrorsCarryLineNumbers) {
  try {
    load_matrix_market(data("bad_count.mtx"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("expected 3 entries"), std::string::npos);
  }
  try {
    load_matrix_market(data("bad_range.mtx"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(load_matrix_market(data("missing.mtx")), ParseError);
}

TEST(MatrixMarket, RejectsMalformedText) {
  for (const char* text : {"", "%%MatrixMarket matrix array real general\n2 2\n",
                           "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
                           "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 3\n",
                           "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1\n",
                           "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 2 9\n",
                           "not a banner\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(parse_matrix_market(in), ParseError) << text;
  }
}

TEST(Csr, FromTriplesMatchesDenseReference) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng() % 20), cols = 1 + static_cast<Index>(rng() % 20);
    std::vector<std::tuple<Index, Index, double>> t;
    for (int n = 0; n < 40; ++n)
      t.emplace_back(static_cast<Index>(rng() % rows), static_cast<Index>(rng() % cols),
                     static_cast<double>(rng() % 9) - 4);
    auto a = csr_from_triples(rows, cols, t);
    ASSERT_TRUE(is_valid_csr(a)) << csr_violation(a);
    EXPECT_EQ(densify(a), densify(rows, cols, t));
  }
}

TEST(Csr, ViolationsAreNamed) {
  CsrMatrix a = identity_csr(3);
  a.col_idx[1] = 7;
  EXPECT_NE(csr_violation(a).find("column out of range"), std::string::npos);
  a = identity_csr(3);
  a.row_ptr[1] = 2;
  a.row_ptr[2] = 1;
  EXPECT_NE(csr_violation(a).find("decreases"), std::string::npos);
  a = csr_from_triples(1, 3, {{0, 0, 1}, {0, 2, 1}});
  std::swap(a.col_idx[0], a.col_idx[1]);
  EXPECT_NE(csr_violation(a).find("strictly increasing"), std::string::npos);
}

TEST(Csr, RandomIsDeterministicAndValid) {
  EXPECT_EQ(random_csr(30, 20, 0.2, 9), random_csr(30, 20, 0.2, 9));
  EXPECT_NE(random_csr(30, 20, 0.2, 9), random_csr(30, 20, 0.2, 10));
  for (const auto& m : sgap::testing::matrix_corpus()) EXPECT_TRUE(is_valid_csr(m.A)) << m.name;
  EXPECT_EQ(random_csr(4, 4, 1.0, 1).nnz(), 16);
  EXPECT_EQ(random_csr(4, 4, 0.0, 1).nnz(), 0);
}

TEST(Oracle, MatchesTripleLoop) {
  auto a = random_csr(13, 9, 0.3, 2);
  auto b = random_dense(9, 5, 3);
  auto d = densify(a);
  auto c = dense_spmm_oracle(a, b);
  for (Index i = 0; i < 13; ++i)
    for (Index k = 0; k < 5; ++k) {
      double s = 0;
      for (Index j = 0; j < 9; ++j) s += d.at(i, j) * b.at(j, k);
      EXPECT_DOUBLE_EQ(c.at(i, k), s);
    }
  EXPECT_THROW(dense_spmm_oracle(a, random_dense(8, 5, 3)), DimensionMismatch);
}
