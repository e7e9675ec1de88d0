//===- lowering.hpp - Scheduled CIN to LLIR --------------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// The block variable becomes blockIdx; the warp and thread variables are
// the quotient and remainder of threadIdx by the thread extent. Loops left
// unannotated outside the workspace stay serial per lane; every other index
// variable is recomputed from those through its split, bound and fuse
// relations. Iteration over A then takes one of three shapes:
//
//   fused positions   lanes own nonzeros; the row comes from a binary search
//                     over the block's row window plus a row-advance loop
//   row positions     lanes own a row and stride over its positions
//   row coordinates   a lane walks one whole row serially
//
// Under a Segment group the out-of-bounds guard on fused positions assigns
// a zero instead of leaving the loop, so every lane reaches the group
// reduction.
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_LOWERING_HPP
#define SGAP_LOWERING_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgap/cin.hpp"
#include "sgap/design_space.hpp"
#include "sgap/llir.hpp"
#include "sgap/plan.hpp"
#include "sgap/sparse.hpp"

namespace sgap {

class LoweringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoweredKernel {
  std::string name = "spmm";
  llir::Stmt body;
  std::int64_t grid_size = 0;
  std::int64_t block_size = 0;
  std::vector<Index> block_starts;  // row window per block; empty unless lanes own nonzeros

  // Shape the kernel was lowered for.
  Index rows = 0;
  Index cols = 0;
  Index nnz = 0;
  std::int64_t dense_cols = 0;

  IterationKind kind = IterationKind::FusedPositions;
  std::optional<GroupPlan> group;
  std::vector<std::string> notes;
};

/// Largest p in [lo, hi) with a[p] <= target. Returns lo when the window is
/// empty or a[lo] > target.
inline Index binary_search_before(const std::vector<Index>& a, Index lo, Index hi, Index target) {
  hi = std::min<Index>(hi, static_cast<Index>(a.size()));
  if (lo < 0 || lo >= hi || a[static_cast<std::size_t>(lo)] > target) return lo;
  auto it = std::upper_bound(a.begin() + lo, a.begin() + hi, target);
  return static_cast<Index>(it - a.begin()) - 1;
}

/// Entry b is the row containing nonzero b*nnz_per_block; one entry per
/// block plus the end.
inline std::vector<Index> compute_block_starts(const CsrMatrix& a, std::int64_t nnz_per_block) {
  if (nnz_per_block < 1) throw std::invalid_argument("nnz_per_block must be at least 1");
  const Index grid = (a.nnz() + nnz_per_block - 1) / nnz_per_block;
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(grid + 1));
  for (Index b = 0; b <= grid; ++b)
    out.push_back(binary_search_before(a.row_ptr, 0, a.num_rows + 1, b * nnz_per_block));
  return out;
}

namespace detail {

class Lowerer {
 public:
  Lowerer(const SchedulePlan& plan) : plan_(plan) {}

  llir::Stmt run() {
    using namespace llir;
    std::vector<llir::Stmt> top;
    out_ = &top;
    emit(decl(plan_.block_var, hw(Hw::BlockIdx)));
    known_[plan_.block_var] = var(plan_.block_var);
    const auto lanes = plan_.thread_extent();
    if (plan_.warp_var) {
      emit(decl(*plan_.warp_var, hw(Hw::ThreadIdx) / lit(lanes)));
      emit(decl(plan_.thread_var, hw(Hw::ThreadIdx) % lit(lanes)));
      known_[*plan_.warp_var] = var(*plan_.warp_var);
    } else {
      emit(decl(plan_.thread_var, hw(Hw::ThreadIdx)));
    }
    known_[plan_.thread_var] = var(plan_.thread_var);
    for (const auto& v : plan_.outer_loops) known_[v] = var(v);
    for (const auto& v : plan_.producer_loops) known_[v] = var(v);

    std::vector<llir::Stmt> inner;
    out_ = &inner;
    switch (plan_.kind) {
      case IterationKind::FusedPositions:
        if (plan_.form == ReductionForm::ProducerLoop) fused_positions_loop();
        else fused_positions_direct();
        break;
      case IterationKind::RowPositions: row_positions(); break;
      case IterationKind::RowCoordinates: row_coordinates(); break;
    }
    for (auto it = plan_.outer_loops.rbegin(); it != plan_.outer_loops.rend(); ++it)
      inner = {for_loop(*it, lit(0), lit(ext(*it)), std::move(inner))};
    top.insert(top.end(), inner.begin(), inner.end());
    return block(std::move(top));
  }

 private:
  using Overrides = std::map<std::string, llir::Expr>;

  void emit(llir::Stmt s) { out_->push_back(std::move(s)); }

  std::int64_t ext(const std::string& v) const {
    const auto& e = plan_.extents.at(v);
    if (!e.value) throw LoweringError("extent of '" + v + "' is unknown");
    return *e.value;
  }

  /// Expression for `v` in terms of loop and lane variables, or nullopt.
  std::optional<llir::Expr> derive(const std::string& v, const Overrides& ov, std::set<std::string>& visiting) {
    using namespace llir;
    if (auto it = ov.find(v); it != ov.end()) return it->second;
    if (auto it = known_.find(v); it != known_.end()) return it->second;
    if (!visiting.insert(v).second) return std::nullopt;
    std::optional<Expr> result;
    for (const auto& r : plan_.relations) {
      if (result) break;
      if (const auto* s = std::get_if<SplitRel>(&r); s && s->parent == v) {
        auto o = derive(s->outer, ov, visiting);
        auto i = o ? derive(s->inner, ov, visiting) : std::nullopt;
        if (o && i) result = *o * lit(ext(s->inner)) + *i;
      } else if (const auto* b = std::get_if<BoundRel>(&r); b && b->parent == v) {
        result = derive(b->bounded, ov, visiting);
      } else if (const auto* f = std::get_if<FuseRel>(&r); f && (f->outer == v || f->inner == v)) {
        auto fused = derive(f->fused, ov, visiting);
        if (fused) result = f->outer == v ? *fused / lit(ext(f->inner)) : *fused % lit(ext(f->inner));
      }
    }
    visiting.erase(v);
    return result;
  }

  llir::Expr get(const std::string& v, const Overrides& ov = {}) {
    std::set<std::string> visiting;
    auto e = derive(v, ov, visiting);
    if (!e) throw LoweringError("cannot compute index variable '" + v + "' from the loop variables");
    return *e;
  }

  /// Declares fused variables once so their quotient and remainder share them.
  void declare_fused() {
    for (const auto& r : plan_.relations)
      if (const auto* f = std::get_if<FuseRel>(&r)) {
        if (known_.count(f->fused)) continue;
        std::set<std::string> visiting;
        if (auto e = derive(f->fused, {}, visiting)) {
          emit(llir::decl(f->fused, *e));
          known_[f->fused] = llir::var(f->fused);
        }
      }
  }

  /// Declares `v` under its own name unless it already is a plain variable.
  llir::Expr bind(const std::string& v) {
    auto e = get(v);
    if (e->kind == llir::ExprNode::Var && e->name == v) return e;
    emit(llir::decl(v, e));
    known_[v] = llir::var(v);
    return known_[v];
  }

  llir::Expr nnz_end() const { return llir::load(llir::Array::A2_pos, llir::dim(llir::Dim::A1_dimension)); }

  void write(const llir::Expr& index, const llir::Expr& value) {
    using namespace llir;
    if (plan_.group) {
      const auto m = plan_.group->strategy == ReductionStrategy::Segment ? Macro::SegReduceGroup
                                                                         : Macro::AtomicAddGroup;
      emit(macro(m, plan_.group->size, Array::C_vals, index, value));
      return;
    }
    switch (plan_.thread_race) {
      case OutputRace::NoRaces:
      case OutputRace::IgnoreRaces: emit(store(Array::C_vals, index, value)); break;
      case OutputRace::Atomics:
      case OutputRace::ParallelReduction: emit(atomic_add(Array::C_vals, index, value)); break;
    }
  }

  llir::Expr output_index(const llir::Expr& i, const llir::Expr& k) const {
    return i * llir::dim(llir::Dim::C2_dimension) + k;
  }

  /// Row window of the block: [begin, end) in row_ptr.
  std::pair<llir::Expr, llir::Expr> row_window() {
    using namespace llir;
    if (!plan_.nnz_per_block) return {lit(0), dim(Dim::A1_dimension)};
    const Expr b = var(plan_.block_var);
    emit(decl("pA2_begin", load(Array::i_blockStarts, b)));
    emit(decl("pA2_end", bin(Op::Min, load(Array::i_blockStarts, b + lit(1)) + lit(1), dim(Dim::A1_dimension))));
    return {var("pA2_begin"), var("pA2_end")};
  }

  std::string coord_name() const {
    for (const auto& r : plan_.relations)
      if (const auto* f = std::get_if<FuseRel>(&r))
        if (f->inner == plan_.reduction_var) return f->fused;
    return plan_.reduction_var;
  }

  /// while (pos == A2_pos[i_pos+1]) { i_pos = i_pos + 1; i = i_pos; }
  llir::Stmt row_advance(const llir::Expr& pos) {
    using namespace llir;
    const Expr next = load(Array::A2_pos, var("i_pos") + lit(1));
    return while_loop(bin(Op::Eq, pos, next),
                      {assign("i_pos", var("i_pos") + lit(1)), assign(plan_.row_var, var("i_pos"))});
  }

  // Nonzero groups: one nonzero per lane.
  void fused_positions_direct() {
    using namespace llir;
    auto [lo, hi] = row_window();
    const std::string pos = plan_.position_var + "A";
    emit(decl(pos, get(plan_.position_var)));
    const Expr p = var(pos);
    emit(decl("i_pos", binary_search(Array::A2_pos, lo, hi, p)));
    emit(decl(plan_.row_var, var("i_pos")));
    known_[plan_.row_var] = var(plan_.row_var);
    const Expr k = bind(plan_.col_var);
    const Expr i = var(plan_.row_var);
    const std::string f = coord_name();
    const Expr oob = bin(Op::Ge, p, nnz_end());
    const Expr product = load(Array::A_vals, p) * load(Array::B_vals, var("kB"));

    if (plan_.group && plan_.group->strategy == ReductionStrategy::Segment) {
      emit(decl("val", Type::Float, flit(0)));
      emit(if_then(oob, {assign("val", flit(0), true)},
                   {decl(f, load(Array::A2_crd, p)),
                    decl("kB", var(f) * dim(Dim::B2_dimension) + k),
                    row_advance(p),
                    assign("val", product)}));
      emit(decl("kC", output_index(i, k)));
      write(var("kC"), var("val"));
      return;
    }
    emit(if_then(oob, {brk()}));
    emit(decl(f, load(Array::A2_crd, p)));
    emit(decl("kB", var(f) * dim(Dim::B2_dimension) + k));
    emit(row_advance(p));
    emit(decl("kC", output_index(i, k)));
    emit(decl("val", product));
    write(var("kC"), var("val"));
  }

  // Nonzero serial: a serial run of nonzeros per lane, flushed at row changes.
  void fused_positions_loop() {
    using namespace llir;
    const std::string loop = plan_.producer_loops.front();
    auto [lo, hi] = row_window();
    emit(decl(plan_.position_var + "Start", get(plan_.position_var, {{loop, lit(0)}})));
    const Expr start = var(plan_.position_var + "Start");
    emit(if_then(bin(Op::Ge, start, nnz_end()), {brk()}));
    emit(decl("i_pos", binary_search(Array::A2_pos, lo, hi, start)));
    emit(decl(plan_.row_var, var("i_pos")));
    known_[plan_.row_var] = var(plan_.row_var);
    const Expr k = bind(plan_.col_var);
    const Expr i = var(plan_.row_var);
    const std::string ws = plan_.workspace;
    emit(decl(ws, Type::Float, flit(0)));

    std::vector<llir::Stmt> body;
    std::swap(*out_, body);
    const std::string pos = plan_.position_var + "A";
    emit(decl(pos, get(plan_.position_var)));
    const Expr p = var(pos);
    emit(if_then(bin(Op::Ge, p, nnz_end()), {brk()}));
    const std::string f = coord_name();
    emit(decl(f, load(Array::A2_crd, p)));
    emit(decl("kB", var(f) * dim(Dim::B2_dimension) + k));
    {
      std::vector<llir::Stmt> flush;
      std::swap(*out_, flush);
      emit(decl("kC", output_index(i, k)));
      write(var("kC"), var(ws));
      emit(assign(ws, flit(0)));
      emit(row_advance(p));
      std::swap(*out_, flush);
      emit(if_then(bin(Op::Eq, p, load(Array::A2_pos, var("i_pos") + lit(1))), std::move(flush)));
    }
    emit(assign(ws, var(ws) + load(Array::A_vals, p) * load(Array::B_vals, var("kB"))));
    std::swap(*out_, body);
    emit(for_loop(loop, lit(0), lit(ext(loop)), std::move(body)));
    emit(decl("kC", output_index(i, k)));
    write(var("kC"), var(ws));
  }

  void row_prologue() {
    using namespace llir;
    declare_fused();
    bind(plan_.row_var);
    bind(plan_.col_var);
    emit(if_then(bin(Op::Ge, var(plan_.row_var), dim(Dim::A1_dimension)), {brk()}));
    emit(decl(plan_.workspace, Type::Float, flit(0)));
  }

  void accumulate(const llir::Expr& p) {
    using namespace llir;
    const Expr k = var(plan_.col_var);
    emit(decl(plan_.reduction_var, load(Array::A2_crd, p)));
    emit(decl("kB", var(plan_.reduction_var) * dim(Dim::B2_dimension) + k));
    emit(assign(plan_.workspace, var(plan_.workspace) + load(Array::A_vals, p) * load(Array::B_vals, var("kB"))));
  }

  void finish_row() {
    using namespace llir;
    emit(decl("kC", output_index(var(plan_.row_var), var(plan_.col_var))));
    write(var("kC"), var(plan_.workspace));
  }

  // Row groups: lanes stride over the positions of one row.
  void row_positions() {
    using namespace llir;
    row_prologue();
    const std::string loop = plan_.producer_loops.front();
    const Expr i = var(plan_.row_var);
    const Expr row_begin = load(Array::A2_pos, i);
    const Expr row_end = load(Array::A2_pos, i + lit(1));
    Expr trips;
    if (loop == plan_.position_var) {
      trips = row_end - row_begin;
    } else {
      const SplitRel* split = nullptr;
      for (const auto& r : plan_.relations)
        if (const auto* s = std::get_if<SplitRel>(&r); s && s->parent == plan_.position_var && s->outer == loop)
          split = s;
      if (!split) throw LoweringError("loop '" + loop + "' must be the outer half of a split of '" +
                                      plan_.position_var + "'");
      const auto step = ext(split->inner);
      trips = (row_end - row_begin + lit(step - 1)) / lit(step);
    }
    std::vector<llir::Stmt> body;
    std::swap(*out_, body);
    const std::string pos = plan_.position_var + "A";
    emit(decl(pos, row_begin + get(plan_.position_var)));
    emit(if_then(bin(Op::Ge, var(pos), row_end), {brk()}));
    accumulate(var(pos));
    std::swap(*out_, body);
    emit(for_loop(loop, lit(0), trips, std::move(body)));
    finish_row();
  }

  // Row serial: one lane walks a whole row.
  void row_coordinates() {
    using namespace llir;
    row_prologue();
    const Expr i = var(plan_.row_var);
    const std::string pos = plan_.reduction_var + "posA";
    std::vector<llir::Stmt> body;
    std::swap(*out_, body);
    accumulate(var(pos));
    std::swap(*out_, body);
    emit(for_loop(pos, load(Array::A2_pos, i), load(Array::A2_pos, i + lit(1)), std::move(body)));
    finish_row();
  }

  const SchedulePlan& plan_;
  std::map<std::string, llir::Expr> known_;
  std::vector<llir::Stmt>* out_ = nullptr;
};

}  // namespace detail

/// Lowers a scheduled statement for matrix `a`. `env` binds the listing
/// parameters and must contain N, the dense column count.
inline LoweredKernel lower(const CinStmt& cin, const CsrMatrix& a, const ParamEnv& env) {
  auto n = env.find("N");
  if (n == env.end() || n->second < 1) throw LoweringError("dense column count N must be bound and positive");
  ShapeDims dims{a.num_rows, a.num_cols, a.nnz(), n->second};
  auto analysis = analyze_schedule(cin, env, dims);
  if (!analysis.plan) {
    std::string msg = "schedule cannot be lowered:";
    for (const auto& d : analysis.diagnostics) msg += "\n  " + d;
    throw LoweringError(msg);
  }
  const SchedulePlan& plan = *analysis.plan;

  LoweredKernel k;
  k.rows = a.num_rows;
  k.cols = a.num_cols;
  k.nnz = a.nnz();
  k.dense_cols = n->second;
  k.kind = plan.kind;
  k.group = plan.group;
  k.notes = plan.notes;
  k.block_size = plan.block_size();
  const auto& grid = plan.extents.at(plan.block_var);
  if (!grid.value) throw LoweringError("grid size is not derivable");
  k.grid_size = *grid.value;
  if (plan.nnz_per_block) k.block_starts = compute_block_starts(a, *plan.nnz_per_block);
  k.body = detail::Lowerer(plan).run();
  if (auto errs = llir::check(k.body); !errs.empty()) throw LoweringError("malformed kernel: " + errs.front());
  return k;
}

inline LoweredKernel lower(const CinStmt& cin, const CsrMatrix& a, const KernelConfig& cfg) {
  return lower(cin, a, template_env(cfg));
}

/// Stable textual form of a kernel: launch shape, then the body.
inline std::string dump(const LoweredKernel& k) {
  std::string out = "kernel " + k.name + " grid=" + std::to_string(k.grid_size) +
                    " block=" + std::to_string(k.block_size) + "\n";
  for (const auto& n : k.notes) out += "note: " + n + "\n";
  return out + llir::dump(k.body);
}

}  // namespace sgap

#endif  // SGAP_LOWERING_HPP
