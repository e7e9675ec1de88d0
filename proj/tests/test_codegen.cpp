//===- test_codegen.cpp -----------------------------------------------===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Golden files live in tests/golden. Set SGAP_UPDATE_GOLDENS=1 to rewrite
// them from the current emitter.
//
//===----------------------------------------------------------------------===//

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sgap/codegen_cuda.hpp"
#include "sgap/design_space.hpp"
#include "sgap/lowering.hpp"

using namespace sgap;

namespace {

std::string emit_point(const std::string& point, const CsrMatrix& A) {
  const KernelConfig cfg{parse_point(point), 4, 256};
  return emit_cuda(lower(algorithm_template(cfg), A, cfg));
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

struct Golden {
  const char* file;
  const char* point;
};

const Golden kGoldens[] = {{"nnz_serial.cu", "nnz:32,col:1,r:1"},
                           {"row_serial.cu", "row:1,col:1,r:1"},
                           {"row_group.cu", "row:1/32,col:1,r:32"},
                           {"nnz_group.cu", "nnz:1,col:1,r:32"}};

}  // namespace

TEST(Codegen, Goldens) {
  const auto A = random_csr(64, 64, 0.1, 1);
  const bool update = std::getenv("SGAP_UPDATE_GOLDENS") != nullptr;
  for (const auto& g : kGoldens) {
    const std::string path = std::string(SGAP_TEST_DATA) + "/golden/" + g.file;
    const auto text = emit_point(g.point, A);
    if (update) {
      std::ofstream(path, std::ios::binary) << text;
      continue;
    }
    std::ifstream in(path, std::ios::binary);
    ASSERT_TRUE(in) << "missing " << path;
    std::stringstream want;
    want << in.rdbuf();
    EXPECT_EQ(text, want.str()) << g.point;
  }
}

TEST(Codegen, DeterministicAndBalanced) {
  const auto A = random_csr(40, 40, 0.2, 3);
  for (const auto& pt : enumerate_space({2, 8, 32}, {1, 2}, {1, 8, 32})) {
    if (!template_problem(pt, 4, 256).empty()) continue;
    const auto a = emit_point(pt.cli_str(), A);
    EXPECT_EQ(a, emit_point(pt.cli_str(), A)) << pt.str();
    EXPECT_EQ(count(a, "{"), count(a, "}")) << pt.str();
    EXPECT_EQ(count(a, "("), count(a, ")")) << pt.str();
    EXPECT_NE(a.find("__global__ void spmm_kernel("), std::string::npos);
  }
}

TEST(Codegen, SegmentKernelShape) {
  const auto text = emit_point("nnz:1,col:1,r:32", random_csr(64, 64, 0.1, 1));
  const auto guard = text.find("if (fposA >= A2_pos[A1_dimension]) {");
  ASSERT_NE(guard, std::string::npos) << text;
  const auto close = text.find('}', guard);
  const auto inside = text.substr(guard, close - guard);
  EXPECT_NE(inside.find("val = 0.0;"), std::string::npos) << inside;
  EXPECT_EQ(inside.find("break"), std::string::npos);
  EXPECT_EQ(inside.find("return"), std::string::npos);
  EXPECT_NE(text.find("segReduceGroup<double,32>(C_vals, "), std::string::npos);
  EXPECT_EQ(count(text, "__device__ void segReduceGroup("), 1u);
  EXPECT_EQ(text.find("atomicAdd("), std::string::npos);
}

TEST(Codegen, SerialKernelShape) {
  const auto text = emit_point("nnz:32,col:1,r:1", random_csr(64, 64, 0.1, 1));
  EXPECT_NE(text.find("break;"), std::string::npos) << text;
  EXPECT_NE(text.find("atomicAdd(&C_vals["), std::string::npos);
  EXPECT_NE(text.find("binarySearchBefore("), std::string::npos);
  EXPECT_NE(text.find("i_blockStarts"), std::string::npos);
  EXPECT_EQ(text.find("template <typename T, int G>"), std::string::npos);
}

TEST(Codegen, RowKernelsHaveNoBlockStarts) {
  const auto A = random_csr(64, 64, 0.1, 1);
  const auto serial = emit_point("row:1,col:1,r:1", A);
  EXPECT_EQ(serial.find("i_blockStarts"), std::string::npos);
  EXPECT_EQ(serial.find("atomicAdd"), std::string::npos);
  const auto group = emit_point("row:1/32,col:1,r:32", A);
  EXPECT_NE(group.find("atomicAddGroup<double,32>(C_vals, "), std::string::npos) << group;
  EXPECT_EQ(count(group, "__device__ void atomicAddGroup("), 1u);
}

TEST(Codegen, HeaderNamesLaunchShape) {
  const auto A = random_csr(64, 64, 0.1, 1);
  const KernelConfig cfg{parse_point("nnz:1,col:1,r:32"), 4, 256};
  const auto k = lower(algorithm_template(cfg), A, cfg);
  const auto text = emit_cuda(k);
  EXPECT_EQ(text.rfind("// spmm_kernel: grid " + std::to_string(k.grid_size) + ", block " +
                           std::to_string(k.block_size) + ", N 4\n",
                       0),
            0u)
      << text.substr(0, 80);
}
