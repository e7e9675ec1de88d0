//===- test_cin.cpp ---------------------------------------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include <gtest/gtest.h>

#include "sgap/cin.hpp"
#include "sgap/cin_parser.hpp"
#include "sgap/design_space.hpp"

using namespace sgap;

namespace {

const TemplateFamily kFamilies[] = {TemplateFamily::NnzSerial, TemplateFamily::RowSerial, TemplateFamily::RowGroup,
                                    TemplateFamily::NnzGroup};

const GroupRel* find_group(const CinStmt& c) {
  for (const auto& r : c.relations())
    if (const auto* g = std::get_if<GroupRel>(&r)) return g;
  return nullptr;
}

}  // namespace

TEST(IntExpr, EvalAndSubstitute) {
  auto e = parse_cin("suchthat(forall(i,forall(j,forall(k,C(i,k)+=A(i,j)*B(j,k)))),split(i,a,b,(p*g/(N/c))))");
  const auto& split = std::get<SplitRel>(e.relations().front());
  EXPECT_EQ(split.factor.str(), "(p*g/(N/c))");
  EXPECT_EQ(split.factor.eval({{"p", 256}, {"g", 32}, {"N", 4}, {"c", 1}}), 2048);
  EXPECT_EQ(split.factor.substitute({{"p", 256}, {"g", 2}}).str(), "(256*2/(N/c))");

  std::string err;
  EXPECT_FALSE(split.factor.eval({{"p", 256}, {"g", 32}, {"N", 4}}, &err));
  EXPECT_NE(err.find("c"), std::string::npos);
  EXPECT_FALSE(split.factor.eval({{"p", 256}, {"g", 1}, {"N", 3}, {"c", 2}}, &err));  // 3/2 is not exact
}

TEST(Cin, BuildSpmm) {
  auto c = build_spmm_cin();
  EXPECT_EQ(print(c), "forall(i,forall(j,forall(k,C(i,k)+=A(i,j)*B(j,k))))");
  const auto* root = c.root().as<Forall>();
  ASSERT_NE(root, nullptr);
  EXPECT_EQ(root->var, "i");
  const auto* leaf = output_assignment(c.root());
  ASSERT_NE(leaf, nullptr);
  EXPECT_EQ(leaf->op, AssignOp::AddAssign);
  EXPECT_TRUE(check_invariants(c).empty());
  EXPECT_EQ(parse_cin(print(c)), c);
}

TEST(Cin, TemplateTextsRoundTrip) {
  for (auto f : kFamilies)
    for (bool grouped : {true, false}) {
      const auto text = listing_text(f, grouped);
      const auto c = parse_cin(text);
      EXPECT_EQ(print(c), normalize_cin_text(text));
      EXPECT_EQ(parse_cin(print(c)), c);
    }
}

TEST(Cin, NormalizeIgnoresLayout) {
  const std::string spaced = "suchthat( forall(i, forall(j, forall(k, C(i,k) += A(i,j) * B(j,k)))),\n"
                             "  split(i, io, ii, 4)   and  bound(io, ib, 8, MaxExact) )";
  const auto c = parse_cin(spaced);
  EXPECT_EQ(print(c), normalize_cin_text(spaced));
  EXPECT_EQ(print(c),
            "suchthat(forall(i,forall(j,forall(k,C(i,k)+=A(i,j)*B(j,k)))),split(i,io,ii,4) and "
            "bound(io,ib,8,MaxExact))");
}

TEST(Cin, GroupAnnotationsParse) {
  const auto five = parse_cin(listing_text(TemplateFamily::RowGroup));
  const auto* g = find_group(five);
  ASSERT_NE(g, nullptr);
  EXPECT_EQ(g->var, "jpos1");
  EXPECT_EQ(g->group_size.str(), "r");
  EXPECT_EQ(g->strategy, ReductionStrategy::Parallel);
  EXPECT_NE(print(five).find("parallelize(jpos1,GPUGroup,r,Atomics)"), std::string::npos);

  const auto six = parse_cin(listing_text(TemplateFamily::NnzGroup));
  ASSERT_NE(find_group(six), nullptr);
  EXPECT_EQ(find_group(six)->strategy, ReductionStrategy::Segment);
  EXPECT_EQ(find_group(parse_cin(listing_text(TemplateFamily::NnzGroup, false))), nullptr);
}

TEST(Cin, SyntaxErrorsHaveLocations) {
  try {
    parse_cin("forall(i, C(i) += )");
    FAIL() << "expected a syntax error";
  } catch (const CinSyntaxError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.column(), 19u);
  }
  try {
    parse_cin("forall(i,\n  forall(j, C(i) += A(i,j)\n")
    ;
    FAIL() << "expected a syntax error";
  } catch (const CinSyntaxError& e) {
    EXPECT_GE(e.line(), 2u);
  }
  for (const char* bad : {"", "forall(i)", "forall(i,C(i)+=A(i),GPUGlobal,NoRaces)",
                          "suchthat(forall(i,C(i)+=A(i)),split(i,a,b))", "forall(i,C(i)+=A(i)) extra",
                          "forall(i,C(i)+=A(i),GPUThread,Racy)", "forall(i,C(i)+=A(i)*)"})
    EXPECT_THROW(parse_cin(bad), CinSyntaxError) << bad;
}

TEST(Cin, UnboundVariableIsRejected) {
  EXPECT_THROW(parse_cin("forall(i,C(i)+=A(i,j))"), CinUnboundVariable);
  EXPECT_NO_THROW(parse_cin("suchthat(forall(f,C(i)+=A(i,j)),fuse(i,j,f))"));
}

TEST(Cin, InvariantViolations) {
  auto two_blocks = parse_cin(
      "forall(i,forall(j,forall(k,C(i,k)+=A(i,j)*B(j,k)),GPUBlock,NoRaces),GPUBlock,NoRaces)");
  auto errs = check_invariants(two_blocks);
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_NE(errs[0].find("duplicate hardware unit GPUBlock"), std::string::npos);

  auto bad_where = parse_cin("forall(i,forall(k,where(C(i,k)+=t,forall(j,s+=A(i,j)*B(j,k)))))");
  errs = check_invariants(bad_where);
  ASSERT_FALSE(errs.empty());
  EXPECT_NE(errs[0].find("workspace"), std::string::npos);
}

TEST(Provenance, DerivedVariablesTraceToRoots) {
  for (auto f : kFamilies) {
    const auto c = parse_cin(listing_text(f));
    ProvenanceGraph g(c);
    EXPECT_TRUE(g.errors().empty()) << g.errors().front();
    for (const auto* loop : foralls(c)) {
      ASSERT_TRUE(g.contains(loop->var)) << loop->var;
      EXPECT_FALSE(g.roots_of(loop->var).empty()) << loop->var;
    }
  }
  ProvenanceGraph g(parse_cin(listing_text(TemplateFamily::NnzSerial)));
  EXPECT_EQ(g.roots_of("nnz"), (std::set<std::string>{"i", "j"}));
  EXPECT_EQ(g.roots_of("dense_val"), (std::set<std::string>{"k"}));
  EXPECT_EQ(g.find("fpos")->provenance, Provenance::PosSpace);
}

TEST(Provenance, DoubleDefinitionAndUnknownParentAreErrors) {
  auto c = parse_cin("suchthat(forall(a,C(i)+=A(i)),split(i,a,b,2) and split(i,a,d,4))");
  ProvenanceGraph g(c);
  ASSERT_FALSE(g.errors().empty());
  EXPECT_NE(g.errors()[0].find("more than one relation"), std::string::npos);

  auto u = parse_cin("suchthat(forall(a,forall(i,C(i)+=A(i))),split(z,a,b,2))");
  ProvenanceGraph h(u);
  ASSERT_FALSE(h.errors().empty());
  EXPECT_NE(h.errors()[0].find("unknown index variable 'z'"), std::string::npos);
}

TEST(Provenance, ReductionVariables) {
  const auto c = parse_cin(listing_text(TemplateFamily::RowGroup));
  EXPECT_TRUE(is_reduction_var(c, "jpos1"));
  EXPECT_TRUE(is_reduction_var(c, "jpos0"));
  EXPECT_FALSE(is_reduction_var(c, "warp"));
  EXPECT_FALSE(is_reduction_var(c, "kii"));
  const auto spmm = build_spmm_cin();
  EXPECT_TRUE(is_reduction_var(spmm, "j"));
  EXPECT_FALSE(is_reduction_var(spmm, "i"));
}
