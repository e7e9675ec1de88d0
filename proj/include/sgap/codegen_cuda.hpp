//===- codegen_cuda.hpp - CUDA-flavored text for lowered kernels -*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// The output is meant to be read and diffed. It is close to compilable CUDA,
// but the group macros and the row search are only declared.
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_CODEGEN_CUDA_HPP
#define SGAP_CODEGEN_CUDA_HPP

#include <set>
#include <string>
#include <utility>

#include "sgap/llir.hpp"
#include "sgap/lowering.hpp"

namespace sgap {

namespace detail {

class CudaEmitter {
 public:
  explicit CudaEmitter(const LoweredKernel& k) : k_(k) {
    sp_.block_idx = "blockIdx.x";
    sp_.thread_idx = "threadIdx.x";
    sp_.int_type = "int";
    sp_.float_type = "double";
  }

  std::string run() {
    llir::walk(k_.body, [&](const llir::StmtNode& s) {
      if (s.kind == llir::StmtNode::MacroInstr) macros_.insert(s.macro);
      for (const auto* e : {&s.a, &s.b, &s.c})
        if (*e) scan(*e);
    });

    std::string out;
    out += "// " + k_.name + "_kernel: grid " + std::to_string(k_.grid_size) + ", block " +
           std::to_string(k_.block_size) + ", N " + std::to_string(k_.dense_cols) + "\n";
    for (const auto& n : k_.notes) out += "// note: " + n + "\n";
    out += "\n";
    for (auto m : macros_)
      out += std::string("template <typename T, int G>\n__device__ void ") + llir::to_string(m) +
             "(T* array, int idx, T value);\n";
    if (search_)
      out += "__device__ int " + sp_.binary_search + "(const int* array, int lo, int hi, int target);\n";
    if (!macros_.empty() || search_) out += "\n";

    out += "__global__ void " + k_.name + "_kernel(int A1_dimension, int A2_dimension, int B2_dimension,\n";
    out += "    int C2_dimension, const int* __restrict__ A2_pos, const int* __restrict__ A2_crd,\n";
    out += "    const double* __restrict__ A_vals, const double* __restrict__ B_vals, double* __restrict__ C_vals";
    if (block_starts_) out += ",\n    const int* __restrict__ i_blockStarts";
    out += ") {\n";
    stmt(k_.body, 1, 0, out);
    out += "}\n";
    return out;
  }

 private:
  void scan(const llir::Expr& e) {
    if (e->kind == llir::ExprNode::BinarySearch) search_ = true;
    if (e->kind == llir::ExprNode::Load && e->array == llir::Array::i_blockStarts) block_starts_ = true;
    if (e->kind == llir::ExprNode::BinarySearch && e->array == llir::Array::i_blockStarts) block_starts_ = true;
    for (const auto& a : e->args) scan(a);
  }

  std::string expr(const llir::Expr& e) const { return llir::print(e, sp_); }

  void body(const std::vector<llir::Stmt>& xs, int depth, int loops, std::string& out) const {
    for (const auto& x : xs) stmt(x, depth, loops, out);
  }

  void stmt(const llir::Stmt& s, int depth, int loops, std::string& out) const {
    using K = llir::StmtNode;
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    auto ty = [&](llir::Type t) { return t == llir::Type::Int ? sp_.int_type : sp_.float_type; };
    switch (s->kind) {
      case K::Block: body(s->body, depth, loops, out); return;
      case K::For:
        out += pad + "for (int " + s->name + " = " + expr(s->a) + "; " + s->name + " < " + expr(s->b) + "; " +
               s->name + "++) {\n";
        body(s->body, depth + 1, loops + 1, out);
        out += pad + "}\n";
        return;
      case K::While:
        out += pad + "while (" + expr(s->a) + ") {\n";
        body(s->body, depth + 1, loops + 1, out);
        out += pad + "}\n";
        return;
      case K::If:
        out += pad + "if (" + expr(s->a) + ") {\n";
        body(s->body, depth + 1, loops, out);
        if (!s->orelse.empty()) {
          out += pad + "} else {\n";
          body(s->orelse, depth + 1, loops, out);
        }
        out += pad + "}\n";
        return;
      case K::VarDecl: out += pad + ty(s->type) + " " + s->name + " = " + expr(s->a) + ";\n"; return;
      case K::Assign: out += pad + s->name + " = " + expr(s->a) + ";\n"; return;
      case K::Store:
        out += pad + llir::to_string(s->array) + "[" + expr(s->a) + "] += " + expr(s->b) + ";\n";
        return;
      case K::AtomicAdd:
        out += pad + "atomicAdd(&" + llir::to_string(s->array) + "[" + expr(s->a) + "], " + expr(s->b) + ");\n";
        return;
      case K::MacroInstr:
        out += pad + llir::to_string(s->macro) + "<double," + std::to_string(s->group_size) + ">(" +
               llir::to_string(s->array) + ", " + expr(s->a) + ", " + expr(s->b) + ");\n";
        return;
      case K::Break: out += pad + (loops > 0 ? "break;\n" : "return;\n"); return;
    }
  }

  const LoweredKernel& k_;
  llir::Spelling sp_;
  std::set<llir::Macro> macros_;
  bool search_ = false;
  bool block_starts_ = false;
};

}  // namespace detail

/// CUDA-flavored source for `k`. Deterministic: equal kernels give equal text.
inline std::string emit_cuda(const LoweredKernel& k) { return detail::CudaEmitter(k).run(); }

}  // namespace sgap

#endif  // SGAP_CODEGEN_CUDA_HPP
