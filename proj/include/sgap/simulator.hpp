//===- simulator.hpp - Lock-step SIMT interpreter for LLIR -----*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Blocks run in ascending id, warps of 32 lanes in ascending id within a
// block. A warp executes each statement once for all of its lanes under a
// predication mask: both arms of an If run with complementary masks, and a
// loop keeps iterating while any lane is still inside it. Writes to C are
// applied in (block, warp, lane) order, so results are bit-reproducible.
//
// Cost model, in warp steps: one per statement executed with a non-empty
// mask, one per loop condition check, ceil(log2(window)) extra for a binary
// search over the widest active window, and log2(G)+1 for a group macro.
// An idle lane step is a lane that is masked off during a step, or that
// holds a zero-extension filler while a macro runs.
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_SIMULATOR_HPP
#define SGAP_SIMULATOR_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "sgap/llir.hpp"
#include "sgap/lowering.hpp"
#include "sgap/reduction.hpp"
#include "sgap/sparse.hpp"

namespace sgap {

inline constexpr int kWarpWidth = 32;

struct SimOptions {
  bool single_precision = false;  // round kernel scalars to float
  bool parallel_blocks = false;   // run blocks on worker threads, replay writes in block order
  unsigned threads = 0;           // workers for parallel_blocks; 0 picks hardware concurrency
};

struct WarpRecord {
  std::int64_t block = 0;
  std::int64_t warp = 0;
  std::int64_t steps = 0;
  std::int64_t idle_lane_steps = 0;
  std::int64_t atomic_ops = 0;
};

/// What remains of a finished run: the output and one record per warp.
struct SimState {
  DenseMatrix C;
  std::vector<WarpRecord> warps;
};

struct SimMetrics {
  std::int64_t max_warp_steps = 0;
  std::int64_t total_steps = 0;
  std::int64_t atomic_ops = 0;
  std::int64_t idle_lane_steps = 0;
  std::int64_t warps = 0;
  std::map<std::int64_t, std::int64_t> per_warp_steps;  // steps -> number of warps

  friend bool operator==(const SimMetrics&, const SimMetrics&) = default;
};

inline SimMetrics collect_metrics(const SimState& state) {
  SimMetrics m;
  for (const auto& w : state.warps) {
    m.max_warp_steps = std::max(m.max_warp_steps, w.steps);
    m.total_steps += w.steps;
    m.atomic_ops += w.atomic_ops;
    m.idle_lane_steps += w.idle_lane_steps;
    ++m.per_warp_steps[w.steps];
  }
  m.warps = static_cast<std::int64_t>(state.warps.size());
  return m;
}

struct SimResult {
  DenseMatrix C;
  SimMetrics metrics;
};

namespace detail {

using Mask = std::uint32_t;

struct CExpr {
  llir::ExprNode::Kind kind;
  llir::Type type;
  std::int64_t ival = 0;
  double fval = 0;
  int slot = -1;
  llir::Array array{};
  llir::Op op{};
  llir::Hw hw{};
  llir::Dim dim{};
  int a = -1, b = -1, c = -1;
};

struct CStmt {
  llir::StmtNode::Kind kind;
  int slot = -1;
  llir::Type type = llir::Type::Int;
  int a = -1, b = -1;
  llir::Macro macro{};
  std::int64_t group_size = 0;
  bool zero_extension = false;
  int value_slot = -1;  // macro value held in a plain variable
  std::vector<int> body, orelse;
  std::string text;
};

/// LLIR with variable names resolved to register slots.
struct Program {
  std::vector<CExpr> exprs;
  std::vector<CStmt> stmts;
  std::vector<llir::Type> slot_types;
  int root = -1;

  explicit Program(const llir::Stmt& s) { root = stmt(s); }

 private:
  std::unordered_map<std::string, int> slots_;

  int slot(const std::string& name, llir::Type t) {
    auto [it, fresh] = slots_.emplace(name, static_cast<int>(slot_types.size()));
    if (fresh) slot_types.push_back(t);
    return it->second;
  }

  int expr(const llir::Expr& e) {
    CExpr c{e->kind, e->type, e->ival, e->fval};
    c.array = e->array;
    c.op = e->op;
    c.hw = e->hw;
    c.dim = e->dim;
    if (e->kind == llir::ExprNode::Var) {
      auto it = slots_.find(e->name);
      if (it == slots_.end()) throw SimulationFault("variable '" + e->name + "' is read before any declaration");
      c.slot = it->second;
      c.type = slot_types[static_cast<std::size_t>(c.slot)];
    }
    if (e->args.size() > 0) c.a = expr(e->args[0]);
    if (e->args.size() > 1) c.b = expr(e->args[1]);
    if (e->args.size() > 2) c.c = expr(e->args[2]);
    exprs.push_back(c);
    return static_cast<int>(exprs.size()) - 1;
  }

  int stmt(const llir::Stmt& s) {
    CStmt c{s->kind};
    c.text = llir::headline(*s);
    c.macro = s->macro;
    c.group_size = s->group_size;
    c.zero_extension = s->zero_extension;
    switch (s->kind) {
      case llir::StmtNode::For:
        c.a = expr(s->a);
        c.b = expr(s->b);
        c.slot = slot(s->name, llir::Type::Int);
        break;
      case llir::StmtNode::VarDecl:
        c.a = expr(s->a);
        c.slot = slot(s->name, s->type);
        c.type = s->type;
        break;
      case llir::StmtNode::Assign: {
        c.a = expr(s->a);
        auto it = slots_.find(s->name);
        if (it == slots_.end()) throw SimulationFault("assignment to undeclared '" + s->name + "'");
        c.slot = it->second;
        c.type = slot_types[static_cast<std::size_t>(c.slot)];
        break;
      }
      default:
        if (s->a) c.a = expr(s->a);
        if (s->b) c.b = expr(s->b);
        if (s->kind == llir::StmtNode::MacroInstr && s->b->kind == llir::ExprNode::Var)
          c.value_slot = slots_.at(s->b->name);
    }
    for (const auto& x : s->body) c.body.push_back(stmt(x));
    for (const auto& x : s->orelse) c.orelse.push_back(stmt(x));
    stmts.push_back(std::move(c));
    return static_cast<int>(stmts.size()) - 1;
  }
};

struct Write {
  Index idx;
  double val;
};

struct Globals {
  const CsrMatrix* A;
  const DenseMatrix* B;
  const std::vector<Index>* block_starts;
  Index rows, cols, N;
  bool single;
};

/// Executes the warps of one block.
class BlockRunner {
 public:
  BlockRunner(const Program& prog, const Globals& g, std::int64_t block_size)
      : prog_(prog), g_(g), warps_per_block_(block_size / kWarpWidth),
        iregs_(prog.slot_types.size() * kWarpWidth), fregs_(prog.slot_types.size() * kWarpWidth),
        filler_(prog.slot_types.size()) {}

  /// Runs block `b`; writes are appended to `writes` in execution order.
  void run(std::int64_t b, std::vector<WarpRecord>& records, std::vector<Write>& writes) {
    writes_ = &writes;
    block_ = b;
    for (std::int64_t w = 0; w < warps_per_block_; ++w) {
      std::fill(iregs_.begin(), iregs_.end(), 0);
      std::fill(fregs_.begin(), fregs_.end(), 0.0);
      std::fill(filler_.begin(), filler_.end(), 0u);
      rec_ = WarpRecord{b, w};
      base_tid_ = w * kWarpWidth;
      break_mask_ = exit_mask_ = 0;
      depth_ = 0;
      exec(prog_.root, ~Mask{0});
      records.push_back(rec_);
    }
  }

 private:
  using IntLanes = std::array<std::int64_t, kWarpWidth>;
  using FloatLanes = std::array<double, kWarpWidth>;

  template <typename Fn>
  static void each(Mask m, Fn&& fn) {
    while (m) {
      const int l = std::countr_zero(m);
      fn(l);
      m &= m - 1;
    }
  }

  [[noreturn]] void fault(int lane, const std::string& what) const {
    throw SimulationFault("block " + std::to_string(block_) + " lane " + std::to_string(base_tid_ + lane) +
                          " at '" + prog_.stmts[static_cast<std::size_t>(current_)].text + "': " + what);
  }

  void charge(Mask m, std::int64_t cost, int extra_idle = 0) {
    rec_.steps += cost;
    rec_.idle_lane_steps += cost * (kWarpWidth - std::popcount(m) + extra_idle);
  }

  double round(double v) const { return g_.single ? static_cast<double>(static_cast<float>(v)) : v; }

  std::int64_t& ireg(int slot, int lane) { return iregs_[static_cast<std::size_t>(slot * kWarpWidth + lane)]; }
  double& freg(int slot, int lane) { return fregs_[static_cast<std::size_t>(slot * kWarpWidth + lane)]; }

  std::int64_t load_int(llir::Array a, std::int64_t i, int lane) const {
    const std::vector<Index>* v = nullptr;
    switch (a) {
      case llir::Array::A2_pos: v = &g_.A->row_ptr; break;
      case llir::Array::A2_crd: v = &g_.A->col_idx; break;
      case llir::Array::i_blockStarts: v = g_.block_starts; break;
      default: fault(lane, "integer load from a value array");
    }
    if (i < 0 || i >= static_cast<std::int64_t>(v->size()))
      fault(lane, std::string("out-of-bounds read ") + llir::to_string(a) + "[" + std::to_string(i) + "] (size " +
                      std::to_string(v->size()) + ")");
    return (*v)[static_cast<std::size_t>(i)];
  }

  double load_float(llir::Array a, std::int64_t i, int lane) const {
    const std::vector<double>* v = nullptr;
    switch (a) {
      case llir::Array::A_vals: v = &g_.A->vals; break;
      case llir::Array::B_vals: v = &g_.B->vals; break;
      default: fault(lane, std::string("unsupported read of ") + llir::to_string(a));
    }
    if (i < 0 || i >= static_cast<std::int64_t>(v->size()))
      fault(lane, std::string("out-of-bounds read ") + llir::to_string(a) + "[" + std::to_string(i) + "] (size " +
                      std::to_string(v->size()) + ")");
    return round((*v)[static_cast<std::size_t>(i)]);
  }

  std::int64_t dim(llir::Dim d) const {
    switch (d) {
      case llir::Dim::A1_dimension: return g_.rows;
      case llir::Dim::A2_dimension: return g_.cols;
      case llir::Dim::B2_dimension:
      case llir::Dim::C2_dimension: return g_.N;
    }
    return 0;
  }

  void eval_int(int ei, Mask m, IntLanes& out) {
    const CExpr& e = prog_.exprs[static_cast<std::size_t>(ei)];
    using K = llir::ExprNode;
    switch (e.kind) {
      case K::IntLit: each(m, [&](int l) { out[l] = e.ival; }); return;
      case K::Var: each(m, [&](int l) { out[l] = ireg(e.slot, l); }); return;
      case K::HwIndex: {
        const std::int64_t v = e.hw == llir::Hw::BlockIdx ? block_ : 0;
        each(m, [&](int l) { out[l] = e.hw == llir::Hw::BlockIdx ? v : base_tid_ + l; });
        return;
      }
      case K::DimRef: each(m, [&](int l) { out[l] = dim(e.dim); }); return;
      case K::Load: {
        IntLanes idx;
        eval_int(e.a, m, idx);
        each(m, [&](int l) { out[l] = load_int(e.array, idx[l], l); });
        return;
      }
      case K::BinarySearch: {
        IntLanes lo, hi, t;
        eval_int(e.a, m, lo);
        eval_int(e.b, m, hi);
        eval_int(e.c, m, t);
        std::int64_t window = 1;
        const std::vector<Index>& arr = e.array == llir::Array::A2_pos ? g_.A->row_ptr : *g_.block_starts;
        each(m, [&](int l) {
          window = std::max<std::int64_t>(window, hi[l] - lo[l]);
          if (lo[l] < 0 || hi[l] > static_cast<std::int64_t>(arr.size()))
            fault(l, "binary search window [" + std::to_string(lo[l]) + ", " + std::to_string(hi[l]) +
                         ") is out of bounds");
          out[l] = binary_search_before(arr, lo[l], hi[l], t[l]);
        });
        search_cost_ = std::max<std::int64_t>(search_cost_, static_cast<std::int64_t>(std::ceil(std::log2(
                                                                 static_cast<double>(window)))));
        return;
      }
      case K::Bin: {
        const CExpr& lhs = prog_.exprs[static_cast<std::size_t>(e.a)];
        const CExpr& rhs = prog_.exprs[static_cast<std::size_t>(e.b)];
        if (lhs.type == llir::Type::Float || rhs.type == llir::Type::Float) {
          FloatLanes x, y;
          eval_float(e.a, m, x);
          eval_float(e.b, m, y);
          each(m, [&](int l) { out[l] = compare(e.op, x[l], y[l], l); });
          return;
        }
        IntLanes x, y;
        eval_int(e.a, m, x);
        eval_int(e.b, m, y);
        each(m, [&](int l) { out[l] = arith(e.op, x[l], y[l], l); });
        return;
      }
      case K::FloatLit: break;
    }
    fault(std::countr_zero(m), "float expression in integer context");
  }

  std::int64_t compare(llir::Op op, double x, double y, int lane) const {
    switch (op) {
      case llir::Op::Lt: return x < y;
      case llir::Op::Le: return x <= y;
      case llir::Op::Gt: return x > y;
      case llir::Op::Ge: return x >= y;
      case llir::Op::Eq: return x == y;
      case llir::Op::Ne: return x != y;
      default: fault(lane, "float arithmetic in integer context");
    }
  }

  std::int64_t arith(llir::Op op, std::int64_t x, std::int64_t y, int lane) const {
    switch (op) {
      case llir::Op::Add: return x + y;
      case llir::Op::Sub: return x - y;
      case llir::Op::Mul: return x * y;
      case llir::Op::Div:
        if (y == 0) fault(lane, "integer division by zero");
        return x / y;
      case llir::Op::Mod:
        if (y == 0) fault(lane, "integer division by zero");
        return x % y;
      case llir::Op::Min: return std::min(x, y);
      case llir::Op::Lt: return x < y;
      case llir::Op::Le: return x <= y;
      case llir::Op::Gt: return x > y;
      case llir::Op::Ge: return x >= y;
      case llir::Op::Eq: return x == y;
      case llir::Op::Ne: return x != y;
    }
    return 0;
  }

  void eval_float(int ei, Mask m, FloatLanes& out) {
    const CExpr& e = prog_.exprs[static_cast<std::size_t>(ei)];
    using K = llir::ExprNode;
    if (e.type == llir::Type::Int) {
      IntLanes v;
      eval_int(ei, m, v);
      each(m, [&](int l) { out[l] = static_cast<double>(v[l]); });
      return;
    }
    switch (e.kind) {
      case K::FloatLit: each(m, [&](int l) { out[l] = round(e.fval); }); return;
      case K::Var: each(m, [&](int l) { out[l] = freg(e.slot, l); }); return;
      case K::Load: {
        IntLanes idx;
        eval_int(e.a, m, idx);
        each(m, [&](int l) { out[l] = load_float(e.array, idx[l], l); });
        return;
      }
      case K::Bin: {
        FloatLanes x, y;
        eval_float(e.a, m, x);
        eval_float(e.b, m, y);
        each(m, [&](int l) {
          double v = 0;
          switch (e.op) {
            case llir::Op::Add: v = x[l] + y[l]; break;
            case llir::Op::Sub: v = x[l] - y[l]; break;
            case llir::Op::Mul: v = x[l] * y[l]; break;
            case llir::Op::Div: v = x[l] / y[l]; break;
            case llir::Op::Min: v = std::min(x[l], y[l]); break;
            default: fault(l, "unsupported float operator");
          }
          out[l] = round(v);
        });
        return;
      }
      default: fault(std::countr_zero(m), "integer-only expression in float context");
    }
  }

  void write_value(Index idx, double v, int lane) {
    if (idx < 0 || idx >= g_.rows * g_.N)
      fault(lane, "out-of-bounds write C_vals[" + std::to_string(idx) + "] (size " +
                      std::to_string(g_.rows * g_.N) + ")");
    writes_->push_back({idx, v});
  }

  void exec_list(const std::vector<int>& body, Mask m) {
    for (int s : body) {
      const Mask live = m & ~(break_mask_ | exit_mask_);
      if (!live) return;
      exec(s, live);
    }
  }

  void store_value(const CStmt& s, Mask m) {
    const CExpr& v = prog_.exprs[static_cast<std::size_t>(s.a)];
    if (s.type == llir::Type::Float || v.type == llir::Type::Float) {
      FloatLanes x;
      eval_float(s.a, m, x);
      each(m, [&](int l) { freg(s.slot, l) = x[l]; });
    } else {
      IntLanes x;
      eval_int(s.a, m, x);
      each(m, [&](int l) { ireg(s.slot, l) = x[l]; });
    }
    if (s.zero_extension) filler_[static_cast<std::size_t>(s.slot)] |= m;
    else filler_[static_cast<std::size_t>(s.slot)] &= ~m;
  }

  void exec(int si, Mask m) {
    const CStmt& s = prog_.stmts[static_cast<std::size_t>(si)];
    current_ = si;
    using K = llir::StmtNode;
    switch (s.kind) {
      case K::Block: exec_list(s.body, m); return;
      case K::VarDecl:
      case K::Assign: {
        search_cost_ = 0;
        store_value(s, m);
        charge(m, 1 + search_cost_);
        return;
      }
      case K::If: {
        search_cost_ = 0;
        IntLanes cond;
        eval_int(s.a, m, cond);
        charge(m, 1 + search_cost_);
        Mask t = 0;
        each(m, [&](int l) { t |= cond[l] ? (Mask{1} << l) : 0; });
        if (t) exec_list(s.body, t);
        const Mask f = m & ~t;
        if (f && !s.orelse.empty()) exec_list(s.orelse, f);
        return;
      }
      case K::For: {
        IntLanes begin, end;
        eval_int(s.a, m, begin);
        eval_int(s.b, m, end);
        each(m, [&](int l) { ireg(s.slot, l) = begin[l]; });
        loop(s, m, [&](Mask active) {
          Mask keep = 0;
          each(active, [&](int l) { keep |= ireg(s.slot, l) < end[l] ? (Mask{1} << l) : 0; });
          return keep;
        }, [&](Mask active) { each(active, [&](int l) { ++ireg(s.slot, l); }); });
        return;
      }
      case K::While: {
        loop(s, m, [&](Mask active) {
          current_ = si;
          search_cost_ = 0;
          IntLanes cond;
          eval_int(s.a, active, cond);
          Mask keep = 0;
          each(active, [&](int l) { keep |= cond[l] ? (Mask{1} << l) : 0; });
          return keep;
        }, [](Mask) {});
        return;
      }
      case K::Break:
        charge(m, 1);
        if (depth_ > 0) break_mask_ |= m;
        else exit_mask_ |= m;
        return;
      case K::Store:
      case K::AtomicAdd: {
        IntLanes idx;
        FloatLanes val;
        eval_int(s.a, m, idx);
        eval_float(s.b, m, val);
        charge(m, 1);
        if (s.kind == K::AtomicAdd) rec_.atomic_ops += std::popcount(m);
        each(m, [&](int l) { write_value(idx[l], val[l], l); });
        return;
      }
      case K::MacroInstr: exec_macro(s, m); return;
    }
  }

  template <typename Cond, typename Step>
  void loop(const CStmt& s, Mask m, Cond&& cond, Step&& step) {
    const Mask saved = break_mask_;
    ++depth_;
    Mask active = m;
    while (true) {
      current_ = static_cast<int>(&s - prog_.stmts.data());
      search_cost_ = 0;
      const Mask keep = cond(active);
      charge(active, 1 + search_cost_);
      active = keep;
      if (!active) break;
      break_mask_ = 0;
      exec_list(s.body, active);
      active &= ~(break_mask_ | exit_mask_);
      if (!active) break;
      step(active);
    }
    --depth_;
    break_mask_ = saved;
  }

  void exec_macro(const CStmt& s, Mask m) {
    const auto G = s.group_size;
    IntLanes idx;
    FloatLanes val;
    eval_int(s.a, m, idx);
    eval_float(s.b, m, val);
    const Mask filler = s.value_slot >= 0 ? filler_[static_cast<std::size_t>(s.value_slot)] & m : 0;
    const auto cost = static_cast<std::int64_t>(std::countr_zero(static_cast<std::uint64_t>(G))) + 1;
    charge(m, cost, std::popcount(filler));
    std::array<ReductionLane, kWarpWidth> lanes{};
    for (int l = 0; l < kWarpWidth; ++l) lanes[l] = {((m >> l) & 1u) != 0, idx[l], val[l]};
    for (int start = 0; start < kWarpWidth; start += static_cast<int>(G)) {
      std::span<const ReductionLane> group(lanes.data() + start, static_cast<std::size_t>(G));
      auto wb = [&](Index i, double v) { write_value(i, v, start); };
      try {
        rec_.atomic_ops += static_cast<std::int64_t>(s.macro == llir::Macro::AtomicAddGroup
                                                         ? exec_atomic_add_group(group, wb)
                                                         : exec_seg_reduce_group(group, wb));
      } catch (const SimulationFault& f) {
        if (std::string(f.what()).rfind("block ", 0) == 0) throw;
        fault(start, f.what());
      }
    }
  }

  const Program& prog_;
  const Globals& g_;
  std::int64_t warps_per_block_;
  std::vector<std::int64_t> iregs_;
  std::vector<double> fregs_;
  std::vector<Mask> filler_;

  std::vector<Write>* writes_ = nullptr;
  WarpRecord rec_;
  std::int64_t block_ = 0;
  std::int64_t base_tid_ = 0;
  Mask break_mask_ = 0, exit_mask_ = 0;
  int depth_ = 0;
  int current_ = 0;
  std::int64_t search_cost_ = 0;
};

}  // namespace detail

/// Executes `k` on A and B starting from C0 and returns C with the run's
/// metrics. Throws SimulationFault on an out-of-bounds access or a broken
/// group-reduction contract.
inline SimResult run(const LoweredKernel& k, const CsrMatrix& A, const DenseMatrix& B, const DenseMatrix& C0,
                     const SimOptions& opt = {}) {
  if (A.num_cols != B.num_rows) throw DimensionMismatch("A has " + std::to_string(A.num_cols) +
                                                        " columns but B has " + std::to_string(B.num_rows) + " rows");
  if (B.num_cols != k.dense_cols)
    throw DimensionMismatch("kernel was lowered for N=" + std::to_string(k.dense_cols) + ", B has " +
                            std::to_string(B.num_cols) + " columns");
  if (C0.num_rows != A.num_rows || C0.num_cols != B.num_cols)
    throw DimensionMismatch("C0 must be " + std::to_string(A.num_rows) + "x" + std::to_string(B.num_cols));
  if (A.num_rows != k.rows || A.nnz() != k.nnz)
    throw DimensionMismatch("kernel was lowered for a different matrix shape");
  if (k.block_size % kWarpWidth != 0) throw SimulationFault("block size must be a multiple of 32");

  const detail::Program prog(k.body);
  const detail::Globals g{&A, &B, &k.block_starts, A.num_rows, A.num_cols, B.num_cols, opt.single_precision};

  SimState state;
  state.C = C0;
  auto apply = [&](const std::vector<detail::Write>& writes) {
    for (const auto& w : writes) {
      double& c = state.C.vals[static_cast<std::size_t>(w.idx)];
      c = opt.single_precision ? static_cast<double>(static_cast<float>(c + w.val)) : c + w.val;
    }
  };

  if (!opt.parallel_blocks || k.grid_size <= 1) {
    detail::BlockRunner runner(prog, g, k.block_size);
    std::vector<detail::Write> writes;
    for (std::int64_t b = 0; b < k.grid_size; ++b) {
      writes.clear();
      runner.run(b, state.warps, writes);
      apply(writes);
    }
  } else {
    struct BlockLog {
      std::vector<WarpRecord> warps;
      std::vector<detail::Write> writes;
      std::string fault;
    };
    std::vector<BlockLog> logs(static_cast<std::size_t>(k.grid_size));
    std::atomic<std::int64_t> next{0};
    unsigned n = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::int64_t>(n, k.grid_size));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t)
      pool.emplace_back([&] {
        detail::BlockRunner runner(prog, g, k.block_size);
        for (std::int64_t b; (b = next.fetch_add(1)) < k.grid_size;) {
          auto& log = logs[static_cast<std::size_t>(b)];
          try {
            runner.run(b, log.warps, log.writes);
          } catch (const SimulationFault& f) {
            log.fault = f.what();
          }
        }
      });
    for (auto& t : pool) t.join();
    for (auto& log : logs) {
      if (!log.fault.empty()) throw SimulationFault(log.fault);
      state.warps.insert(state.warps.end(), log.warps.begin(), log.warps.end());
      apply(log.writes);
    }
  }
  return {std::move(state.C), collect_metrics(state)};
}

inline SimResult run(const LoweredKernel& k, const CsrMatrix& A, const DenseMatrix& B, const SimOptions& opt = {}) {
  return run(k, A, B, DenseMatrix(A.num_rows, B.num_cols), opt);
}

/// Largest elementwise |x - y| / (|y| + 1).
inline double max_relative_error(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.num_rows != y.num_rows || x.num_cols != y.num_cols) throw DimensionMismatch("shape mismatch");
  double worst = 0;
  for (std::size_t n = 0; n < x.vals.size(); ++n)
    worst = std::max(worst, std::abs(x.vals[n] - y.vals[n]) / (std::abs(y.vals[n]) + 1));
  return worst;
}

}  // namespace sgap

#endif  // SGAP_SIMULATOR_HPP
