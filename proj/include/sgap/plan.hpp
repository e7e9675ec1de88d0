//===- plan.hpp - Structural analysis of a scheduled statement --*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Scheduling validation and lowering share one reading of a statement: which
// loops are bound to the block and lane ids, which run serially outside the
// reduction, which iterate inside the producer of the scalar workspace, how
// every index variable's extent follows from the relations, and where the
// group reduction sits. analyze_schedule() produces that reading or a list of
// diagnostics explaining why the statement cannot be lowered.
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_PLAN_HPP
#define SGAP_PLAN_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sgap/cin.hpp"

namespace sgap {

/// Matrix-dependent sizes. Validation runs without a matrix; lowering fills
/// rows/nnz in.
struct ShapeDims {
  std::optional<std::int64_t> rows;
  std::optional<std::int64_t> cols;
  std::optional<std::int64_t> nnz;
  std::int64_t dense_cols = 0;  // N
};

struct Extent {
  enum Kind { Static, MatrixDependent, PerRow } kind = Static;
  std::optional<std::int64_t> value;  // known for Static, and for MatrixDependent once dims are known

  static Extent fixed(std::int64_t v) { return {Static, v}; }
  static Extent matrix(std::optional<std::int64_t> v) { return {MatrixDependent, v}; }
  static Extent per_row() { return {PerRow, std::nullopt}; }
};

enum class IterationKind {
  FusedPositions,  // fuse(i,j,f) and pos(f,fpos,A): lanes walk nonzeros
  RowPositions,    // pos(j,jpos,A(i,j)): lanes walk positions of one row
  RowCoordinates,  // forall(j) inside the producer: serial walk of one row
};

enum class ReductionForm {
  Direct,          // the product is reduced straight into C (or a workspace with no loop)
  ProducerLoop,    // a serial producer loop accumulates into the workspace
};

struct GroupPlan {
  std::string named_var;      // as written in the statement
  std::string var;            // resolved lane variable
  bool alias_resolved = false;  // named_var did not exist; resolved to the GPUThread variable
  std::int64_t size = 0;
  ReductionStrategy strategy = ReductionStrategy::Parallel;
};

struct SchedulePlan {
  ParamEnv env;
  std::string block_var;
  std::optional<std::string> warp_var;
  std::string thread_var;
  OutputRace thread_race = OutputRace::NoRaces;

  std::vector<std::string> outer_loops;     // serial, outside the reduction, in nest order
  std::vector<std::string> producer_loops;  // serial, inside the producer
  IterationKind kind = IterationKind::FusedPositions;
  ReductionForm form = ReductionForm::Direct;
  std::string workspace;     // scalar accumulated by the producer ("val" when none is named)
  std::string position_var;  // fpos or jpos; empty for RowCoordinates
  std::string row_var = "i";
  std::string col_var = "k";
  std::string reduction_var = "j";
  std::optional<GroupPlan> group;
  std::vector<std::string> notes;  // non-fatal observations

  std::map<std::string, Extent> extents;
  std::vector<Relation> relations;

  /// Nonzeros per block when the block variable is the outer half of a split
  /// of the position variable.
  std::optional<std::int64_t> nnz_per_block;

  std::int64_t thread_extent() const { return extents.at(thread_var).value.value_or(0); }
  std::int64_t warp_extent() const {
    return warp_var ? extents.at(*warp_var).value.value_or(0) : 1;
  }
  std::int64_t block_size() const { return warp_extent() * thread_extent(); }
};

struct PlanResult {
  std::optional<SchedulePlan> plan;
  std::vector<std::string> diagnostics;
};

namespace detail {

class PlanBuilder {
 public:
  PlanBuilder(const CinStmt& c, const ParamEnv& env, const ShapeDims& dims)
      : cin_(c), graph_(c), dims_(dims) {
    plan_.env = env;
    plan_.relations = c.relations();
  }

  PlanResult run() {
    for (const auto& e : check_invariants(cin_)) diag(e);
    for (const auto& e : graph_.errors()) diag(e);
    if (!diags_.empty()) return finish();

    walk_structure();
    if (!diags_.empty()) return finish();
    compute_extents();
    if (!diags_.empty()) return finish();
    classify();
    if (!diags_.empty()) return finish();
    check_hardware();
    check_group();
    return finish();
  }

 private:
  void diag(std::string d) {
    if (std::find(diags_.begin(), diags_.end(), d) == diags_.end()) diags_.push_back(std::move(d));
  }

  PlanResult finish() {
    if (!diags_.empty()) return {std::nullopt, diags_};
    return {plan_, {}};
  }

  // -- loop structure ------------------------------------------------------

  void bind_hardware(const Forall& f) {
    switch (f.annotation->unit) {
      case ParallelUnit::GPUBlock:
        if (!plan_.block_var.empty()) diag("duplicate hardware unit GPUBlock");
        plan_.block_var = f.var;
        break;
      case ParallelUnit::GPUWarp:
        if (plan_.warp_var) diag("duplicate hardware unit GPUWarp");
        plan_.warp_var = f.var;
        break;
      case ParallelUnit::GPUThread:
        if (!plan_.thread_var.empty()) diag("duplicate hardware unit GPUThread");
        plan_.thread_var = f.var;
        plan_.thread_race = f.annotation->race;
        break;
      case ParallelUnit::GPUGroup:
        diag("GPUGroup must be bound through a suchthat parallelize relation");
        break;
    }
  }

  void walk_structure() {
    Stmt s = cin_.body();
    while (const auto* f = s.as<Forall>()) {
      if (f->annotation) bind_hardware(*f);
      else plan_.outer_loops.push_back(f->var);
      s = f->body;
    }
    const Assignment* compute = nullptr;
    if (const auto* w = s.as<Where>()) {
      const Assignment& consumer = w->consumer;
      if (consumer.factors.size() != 1 || !consumer.factors[0].is_scalar() ||
          consumer.op != AssignOp::AddAssign)
        diag("where consumer must reduce a scalar workspace into the output");
      else
        plan_.workspace = consumer.factors[0].tensor;
      Stmt p = w->producer;
      while (const auto* f = p.as<Forall>()) {
        if (f->annotation) {
          if (f->annotation->unit != ParallelUnit::GPUThread)
            diag("only the GPUThread loop may appear inside a where producer");
          bind_hardware(*f);
        } else {
          plan_.producer_loops.push_back(f->var);
        }
        p = f->body;
      }
      compute = p.as<Assignment>();
      if (!compute) diag("where producer must end in an assignment");
      plan_.form = plan_.producer_loops.empty() ? ReductionForm::Direct : ReductionForm::ProducerLoop;
      if (compute && (!compute->lhs.is_scalar() || compute->lhs.tensor != plan_.workspace))
        diag("where producer must write the workspace its consumer reads");
    } else if (const auto* a = s.as<Assignment>()) {
      compute = a;
      plan_.workspace = "val";
      plan_.form = ReductionForm::Direct;
      if (a->op != AssignOp::AddAssign) diag("output assignment must accumulate with +=");
    } else {
      diag("unsupported statement below the loop nest");
    }
    if (plan_.block_var.empty()) diag("missing GPUBlock binding");
    if (plan_.thread_var.empty()) diag("missing GPUThread binding");
    if (!compute) return;

    // The SpMM shape C(i,k) (+)= A(i,j)*B(j,k).
    const Assignment* out = output_assignment(cin_.body());
    if (!out || out->lhs.tensor != "C" || out->lhs.indices.size() != 2 || compute->factors.size() != 2 ||
        compute->factors[0].tensor != "A" || compute->factors[1].tensor != "B" ||
        compute->factors[0].indices.size() != 2 || compute->factors[1].indices.size() != 2) {
      diag("only C(i,k) += A(i,j)*B(j,k) is supported");
      return;
    }
    plan_.row_var = out->lhs.indices[0];
    plan_.col_var = out->lhs.indices[1];
    plan_.reduction_var = compute->factors[0].indices[1];
  }

  // -- extents -------------------------------------------------------------

  std::optional<std::int64_t> eval(const IntExpr& e, const std::string& where) {
    std::string err;
    auto v = e.eval(plan_.env, &err);
    if (!v) diag(where + ": " + err);
    else if (*v < 1) diag(where + ": factor must be positive, got " + std::to_string(*v));
    return v;
  }

  void compute_extents() {
    auto& ext = plan_.extents;
    ext[plan_.row_var] = Extent::matrix(dims_.rows);
    ext[plan_.col_var] = Extent::fixed(dims_.dense_cols);
    ext[plan_.reduction_var] = Extent::matrix(dims_.cols);

    auto known = [&](const std::string& v, const std::string& text) {
      if (ext.count(v)) return true;
      diag(text + ": '" + v + "' is used before it is defined");
      return false;
    };
    for (const auto& r : plan_.relations) {
      const std::string text = print(r);
      if (const auto* f = std::get_if<FuseRel>(&r)) {
        if (!known(f->outer, text) || !known(f->inner, text)) continue;
        const Extent& a = ext.at(f->outer);
        const Extent& b = ext.at(f->inner);
        if (a.kind == Extent::PerRow || b.kind == Extent::PerRow) {
          diag(text + ": cannot fuse a per-row variable");
          continue;
        }
        std::optional<std::int64_t> v;
        if (a.value && b.value) v = *a.value * *b.value;
        ext[f->fused] = (a.kind == Extent::Static && b.kind == Extent::Static) ? Extent::fixed(*v)
                                                                                 : Extent::matrix(v);
      } else if (const auto* p = std::get_if<PosRel>(&r)) {
        if (!known(p->var, text)) continue;
        if (p->access.tensor != "A") {
          diag(text + ": position space requires the compressed operand A");
          continue;
        }
        const auto* src = graph_.find(p->var);
        if (src && src->provenance == Provenance::Fused) ext[p->pos_var] = Extent::matrix(dims_.nnz);
        else if (p->var == plan_.reduction_var) ext[p->pos_var] = Extent::per_row();
        else diag(text + ": unsupported position-space variable");
      } else if (const auto* s = std::get_if<SplitRel>(&r)) {
        if (!known(s->parent, text)) continue;
        auto factor = eval(s->factor, text);
        if (!factor) continue;
        const Extent& parent = ext.at(s->parent);
        ext[s->inner] = Extent::fixed(*factor);
        if (parent.kind == Extent::PerRow) {
          ext[s->outer] = Extent::per_row();
        } else if (parent.kind == Extent::Static) {
          if (*parent.value % *factor != 0)
            diag(text + ": extent " + std::to_string(*parent.value) + " of '" + s->parent +
                 "' is not divisible by " + std::to_string(*factor));
          ext[s->outer] = Extent::fixed((*parent.value + *factor - 1) / *factor);
        } else {
          std::optional<std::int64_t> v;
          if (parent.value) v = (*parent.value + *factor - 1) / *factor;
          ext[s->outer] = Extent::matrix(v);
        }
      } else if (const auto* b = std::get_if<BoundRel>(&r)) {
        if (!known(b->parent, text)) continue;
        auto bound = eval(b->extent, text);
        if (!bound) continue;
        const Extent& parent = ext.at(b->parent);
        if (parent.kind != Extent::Static)
          diag(text + ": only statically sized variables can be bounded");
        else if (*parent.value != *bound)
          diag(text + ": MaxExact bound " + std::to_string(*bound) + " differs from extent " +
               std::to_string(*parent.value) + " of '" + b->parent + "'");
        ext[b->bounded] = Extent::fixed(*bound);
      }
    }
    for (const auto* f : foralls(cin_))
      if (!ext.count(f->var)) diag("loop variable '" + f->var + "' has no derivable extent");
  }

  // -- classification ------------------------------------------------------

  /// Variables derivable from the given loop variables through the relations.
  std::set<std::string> derivable(std::set<std::string> known) const {
    bool changed = true;
    while (changed) {
      changed = false;
      auto add = [&](const std::string& v) {
        if (known.insert(v).second) changed = true;
      };
      for (const auto& r : plan_.relations) {
        if (const auto* s = std::get_if<SplitRel>(&r)) {
          if (known.count(s->outer) && known.count(s->inner)) add(s->parent);
        } else if (const auto* b = std::get_if<BoundRel>(&r)) {
          if (known.count(b->bounded)) add(b->parent);
        } else if (const auto* f = std::get_if<FuseRel>(&r)) {
          if (known.count(f->fused)) {
            add(f->outer);
            add(f->inner);
          }
        }
      }
    }
    return known;
  }

  std::set<std::string> hardware_vars() const {
    std::set<std::string> hw{plan_.block_var, plan_.thread_var};
    if (plan_.warp_var) hw.insert(*plan_.warp_var);
    return hw;
  }

  void classify() {
    std::set<std::string> outer = hardware_vars();
    outer.insert(plan_.outer_loops.begin(), plan_.outer_loops.end());
    std::set<std::string> all = outer;
    all.insert(plan_.producer_loops.begin(), plan_.producer_loops.end());
    const auto from_outer = derivable(outer);
    const auto from_all = derivable(all);

    const PosRel* pos = nullptr;
    for (const auto& r : plan_.relations)
      if (const auto* p = std::get_if<PosRel>(&r)) {
        if (pos) diag("at most one pos relation is supported");
        pos = p;
      }

    if (!from_outer.count(plan_.col_var))
      diag("dense column '" + plan_.col_var + "' must be determined outside the reduction");

    if (pos && graph_.find(pos->var) && graph_.find(pos->var)->provenance == Provenance::Fused) {
      plan_.kind = IterationKind::FusedPositions;
      plan_.position_var = pos->pos_var;
      if (!from_all.count(pos->pos_var))
        diag("position variable '" + pos->pos_var + "' is not determined by the loops");
      if (plan_.producer_loops.size() > 1) diag("at most one serial producer loop over positions");
      for (const auto& v : plan_.producer_loops)
        if (!graph_.roots_of(v).count(plan_.reduction_var))
          diag("producer loop '" + v + "' must iterate positions of A");
      for (const auto& r : plan_.relations)
        if (const auto* s = std::get_if<SplitRel>(&r))
          if (s->parent == pos->pos_var && s->outer == plan_.block_var)
            plan_.nnz_per_block = plan_.extents.at(s->inner).value;
    } else if (pos) {
      plan_.kind = IterationKind::RowPositions;
      plan_.position_var = pos->pos_var;
      if (!from_outer.count(plan_.row_var))
        diag("row '" + plan_.row_var + "' must be determined outside the reduction");
      std::set<std::string> lanes_and_producer{plan_.thread_var};
      lanes_and_producer.insert(plan_.producer_loops.begin(), plan_.producer_loops.end());
      if (!derivable(lanes_and_producer).count(pos->pos_var))
        diag("position variable '" + pos->pos_var + "' must be determined by the lane and producer loops");
      if (plan_.producer_loops.size() > 1) diag("at most one serial producer loop over positions");
      if (plan_.producer_loops.empty()) diag("row positions need a producer loop");
    } else {
      plan_.kind = IterationKind::RowCoordinates;
      if (!from_outer.count(plan_.row_var))
        diag("row '" + plan_.row_var + "' must be determined outside the reduction");
      if (plan_.producer_loops != std::vector<std::string>{plan_.reduction_var})
        diag("coordinate iteration needs a single producer loop over '" + plan_.reduction_var + "'");
    }
  }

  // -- hardware ------------------------------------------------------------

  void check_hardware() {
    auto need_static = [&](const std::string& v, const char* unit) {
      const Extent& e = plan_.extents.at(v);
      if (e.kind != Extent::Static) diag(std::string(unit) + " variable '" + v + "' needs a static extent");
    };
    need_static(plan_.thread_var, "GPUThread");
    if (plan_.warp_var) need_static(*plan_.warp_var, "GPUWarp");
    if (plan_.extents.at(plan_.block_var).kind == Extent::PerRow)
      diag("GPUBlock variable '" + plan_.block_var + "' cannot have a per-row extent");
    for (const auto& v : plan_.outer_loops)
      if (plan_.extents.at(v).kind != Extent::Static)
        diag("serial loop '" + v + "' outside the reduction needs a static extent");
    if (!diags_.empty()) return;
    const auto bs = plan_.block_size();
    if (bs <= 0 || bs % 32 != 0)
      diag("threads per block (" + std::to_string(bs) + ") must be a positive multiple of 32");
  }

  // -- group ---------------------------------------------------------------

  /// Whether `target` depends on the lane variable through the relations.
  bool depends_on(const std::string& target, const std::string& lane) const {
    std::set<std::string> others = hardware_vars();
    others.erase(lane);
    others.insert(plan_.outer_loops.begin(), plan_.outer_loops.end());
    return !derivable(others).count(target);
  }

  void check_group() {
    const GroupRel* rel = nullptr;
    for (const auto& r : plan_.relations)
      if (const auto* g = std::get_if<GroupRel>(&r)) {
        if (rel) diag("at most one GPUGroup binding is allowed");
        rel = g;
      }
    if (!rel) return;

    GroupPlan g;
    g.named_var = rel->var;
    g.strategy = rel->strategy;
    std::string err;
    auto size = rel->group_size.eval(plan_.env, &err);
    if (!size) {
      diag("GPUGroup size: " + err);
      return;
    }
    if (*size != 2 && *size != 4 && *size != 8 && *size != 16 && *size != 32) {
      diag("GPUGroup size " + std::to_string(*size) + " is outside {2,4,8,16,32}");
      return;
    }
    g.size = *size;

    const bool exists = plan_.extents.count(rel->var) != 0;
    if (!exists) {
      g.var = plan_.thread_var;
      g.alias_resolved = true;
      plan_.notes.push_back("GPUGroup variable '" + rel->var + "' is undefined; read as GPUThread variable '" +
                            plan_.thread_var + "'");
    } else {
      g.var = rel->var;
    }
    if (g.var != plan_.thread_var) {
      diag("GPUGroup must bind the innermost lane variable '" + plan_.thread_var + "', not '" + g.var + "'");
      return;
    }
    if (!is_reduction_var(cin_, g.var)) {
      diag("GPUGroup variable '" + g.var + "' is not a reduction variable");
      return;
    }
    const auto lanes = plan_.thread_extent();
    if (lanes % g.size != 0) {
      diag("GPUGroup of " + std::to_string(g.size) + " lanes would straddle '" + plan_.thread_var +
           "' (extent " + std::to_string(lanes) + ")");
      return;
    }
    if (depends_on(plan_.col_var, g.var))
      diag("dense column must be uniform across a GPUGroup");
    if (plan_.kind == IterationKind::FusedPositions && plan_.form == ReductionForm::ProducerLoop)
      diag("group reduction after a serial loop over nonzero positions is not supported");
    if (g.strategy == ReductionStrategy::Parallel) {
      if (plan_.kind == IterationKind::FusedPositions)
        diag("parallel group reduction over nonzero positions cannot guarantee one writeback index; use Segment");
      else if (depends_on(plan_.row_var, g.var))
        diag("parallel group reduction requires every lane of a group to share one row");
    }
    plan_.group = g;
  }

  const CinStmt& cin_;
  ProvenanceGraph graph_;
  ShapeDims dims_;
  SchedulePlan plan_;
  std::vector<std::string> diags_;
};

}  // namespace detail

inline PlanResult analyze_schedule(const CinStmt& c, const ParamEnv& env, const ShapeDims& dims) {
  return detail::PlanBuilder(c, env, dims).run();
}

}  // namespace sgap

#endif  // SGAP_PLAN_HPP
