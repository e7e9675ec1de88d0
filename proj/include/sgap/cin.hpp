//===- cin.hpp - Concrete index notation and index-variable provenance -*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Statement-level IR: foralls (optionally bound to a GPU unit), where
// statements with a scalar workspace, SpMM-shaped assignments, and a suchthat
// list of index-variable relations installed by schedules.
//
// Trees are immutable; every transformation builds a new tree and shares
// untouched subtrees.
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_CIN_HPP
#define SGAP_CIN_HPP

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sgap/int_expr.hpp"

namespace sgap {

enum class ParallelUnit { GPUBlock, GPUWarp, GPUThread, GPUGroup };
enum class OutputRace { NoRaces, IgnoreRaces, Atomics, ParallelReduction };
enum class ReductionStrategy { Parallel, Segment };
enum class BoundType { MaxExact };

inline const char* to_string(ParallelUnit u) {
  switch (u) {
    case ParallelUnit::GPUBlock: return "GPUBlock";
    case ParallelUnit::GPUWarp: return "GPUWarp";
    case ParallelUnit::GPUThread: return "GPUThread";
    case ParallelUnit::GPUGroup: return "GPUGroup";
  }
  return "?";
}

inline const char* to_string(OutputRace r) {
  switch (r) {
    case OutputRace::NoRaces: return "NoRaces";
    case OutputRace::IgnoreRaces: return "IgnoreRaces";
    case OutputRace::Atomics: return "Atomics";
    case OutputRace::ParallelReduction: return "ParallelReduction";
  }
  return "?";
}

/// Textual spelling of a group reduction strategy: parallel reduction is
/// written with its writeback race strategy, "Atomics".
inline const char* to_string(ReductionStrategy s) {
  return s == ReductionStrategy::Parallel ? "Atomics" : "Segment";
}

/// Binding of a loop to a GPU parallel unit. GPUGroup carries the reduction
/// strategy and group size; the other units carry only a race strategy.
struct ParallelAnnotation {
  ParallelUnit unit = ParallelUnit::GPUThread;
  OutputRace race = OutputRace::NoRaces;
  std::optional<ReductionStrategy> strategy;
  std::optional<IntExpr> group_size;

  static ParallelAnnotation hardware(ParallelUnit u, OutputRace r) {
    if (u == ParallelUnit::GPUGroup)
      throw std::invalid_argument("GPUGroup needs a reduction strategy and group size");
    return {u, r, std::nullopt, std::nullopt};
  }
  static ParallelAnnotation group(IntExpr size, ReductionStrategy s) {
    return {ParallelUnit::GPUGroup, OutputRace::Atomics, s, std::move(size)};
  }

  friend bool operator==(const ParallelAnnotation&, const ParallelAnnotation&) = default;
};

struct Access {
  std::string tensor;
  std::vector<std::string> indices;  // empty for a scalar workspace

  bool is_scalar() const { return indices.empty(); }
  friend bool operator==(const Access&, const Access&) = default;
};

enum class AssignOp { Assign, AddAssign };

struct Assignment {
  Access lhs;
  AssignOp op = AssignOp::AddAssign;
  std::vector<Access> factors;  // rhs is the product of the factors

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct FuseRel {
  std::string outer, inner, fused;
  friend bool operator==(const FuseRel&, const FuseRel&) = default;
};
struct PosRel {
  std::string var, pos_var;
  Access access;
  friend bool operator==(const PosRel&, const PosRel&) = default;
};
struct SplitRel {
  std::string parent, outer, inner;
  IntExpr factor;
  friend bool operator==(const SplitRel&, const SplitRel&) = default;
};
struct BoundRel {
  std::string parent, bounded;
  IntExpr extent;
  BoundType type = BoundType::MaxExact;
  friend bool operator==(const BoundRel&, const BoundRel&) = default;
};
/// parallelize(var, GPUGroup, size, strategy) as it appears in a suchthat list.
struct GroupRel {
  std::string var;
  IntExpr group_size;
  ReductionStrategy strategy = ReductionStrategy::Parallel;
  friend bool operator==(const GroupRel&, const GroupRel&) = default;
};

using Relation = std::variant<FuseRel, PosRel, SplitRel, BoundRel, GroupRel>;

class Stmt;
struct Forall;
struct Where;
struct SuchThat;

class Stmt {
 public:
  using Node = std::variant<Assignment, Forall, Where, SuchThat>;

  Stmt() = default;
  Stmt(Assignment a);  // NOLINT
  Stmt(Forall f);      // NOLINT
  Stmt(Where w);       // NOLINT
  Stmt(SuchThat s);    // NOLINT

  bool defined() const;
  const Node& node() const;

  template <typename T> const T* as() const;

  friend bool operator==(const Stmt& a, const Stmt& b);

 private:
  std::shared_ptr<const Node> node_;
};

struct Forall {
  std::string var;
  Stmt body;
  std::optional<ParallelAnnotation> annotation;
  friend bool operator==(const Forall&, const Forall&) = default;
};

struct Where {
  Assignment consumer;
  Stmt producer;
  friend bool operator==(const Where&, const Where&) = default;
};

struct SuchThat {
  Stmt body;
  std::vector<Relation> relations;
  friend bool operator==(const SuchThat&, const SuchThat&) = default;
};

inline bool Stmt::defined() const { return static_cast<bool>(node_); }
inline const Stmt::Node& Stmt::node() const { return *node_; }
template <typename T> const T* Stmt::as() const { return node_ ? std::get_if<T>(node_.get()) : nullptr; }

inline Stmt::Stmt(Assignment a) : node_(std::make_shared<Node>(std::move(a))) {}
inline Stmt::Stmt(Forall f) : node_(std::make_shared<Node>(std::move(f))) {}
inline Stmt::Stmt(Where w) : node_(std::make_shared<Node>(std::move(w))) {}
inline Stmt::Stmt(SuchThat s) : node_(std::make_shared<Node>(std::move(s))) {}

inline bool operator==(const Stmt& a, const Stmt& b) {
  if (a.node_ == b.node_) return true;
  if (!a.node_ || !b.node_) return false;
  return *a.node_ == *b.node_;
}

/// A whole statement: an optional suchthat wrapper around the loop nest.
class CinStmt {
 public:
  CinStmt() = default;
  explicit CinStmt(Stmt root) : root_(std::move(root)) {}

  const Stmt& root() const { return root_; }

  /// The loop nest without the suchthat wrapper.
  const Stmt& body() const {
    if (const auto* s = root_.as<SuchThat>()) return s->body;
    return root_;
  }

  const std::vector<Relation>& relations() const {
    static const std::vector<Relation> none;
    if (const auto* s = root_.as<SuchThat>()) return s->relations;
    return none;
  }

  CinStmt with(Stmt body, std::vector<Relation> rels) const {
    if (rels.empty()) return CinStmt(std::move(body));
    return CinStmt(Stmt(SuchThat{std::move(body), std::move(rels)}));
  }

  friend bool operator==(const CinStmt&, const CinStmt&) = default;

 private:
  Stmt root_;
};

// ---------------------------------------------------------------------------
// Printing

inline std::string print(const Access& a) {
  if (a.is_scalar()) return a.tensor;
  std::string s = a.tensor + "(";
  for (std::size_t n = 0; n < a.indices.size(); ++n) s += (n ? "," : "") + a.indices[n];
  return s + ")";
}

inline std::string print(const Assignment& a) {
  std::string s = print(a.lhs) + (a.op == AssignOp::AddAssign ? "+=" : "=");
  for (std::size_t n = 0; n < a.factors.size(); ++n) s += (n ? "*" : "") + print(a.factors[n]);
  return s;
}

inline std::string print(const Relation& r) {
  return std::visit(
      [](const auto& rel) -> std::string {
        using T = std::decay_t<decltype(rel)>;
        if constexpr (std::is_same_v<T, FuseRel>)
          return "fuse(" + rel.outer + "," + rel.inner + "," + rel.fused + ")";
        else if constexpr (std::is_same_v<T, PosRel>)
          return "pos(" + rel.var + "," + rel.pos_var + "," + print(rel.access) + ")";
        else if constexpr (std::is_same_v<T, SplitRel>)
          return "split(" + rel.parent + "," + rel.outer + "," + rel.inner + "," +
                 rel.factor.str() + ")";
        else if constexpr (std::is_same_v<T, BoundRel>)
          return "bound(" + rel.parent + "," + rel.bounded + "," + rel.extent.str() + ",MaxExact)";
        else
          return "parallelize(" + rel.var + ",GPUGroup," + rel.group_size.str() + "," +
                 to_string(rel.strategy) + ")";
      },
      r);
}

inline std::string print(const Stmt& s) {
  if (const auto* a = s.as<Assignment>()) return print(*a);
  if (const auto* f = s.as<Forall>()) {
    std::string out = "forall(" + f->var + "," + print(f->body);
    if (f->annotation)
      out += std::string(",") + to_string(f->annotation->unit) + "," + to_string(f->annotation->race);
    return out + ")";
  }
  if (const auto* w = s.as<Where>()) return "where(" + print(w->consumer) + "," + print(w->producer) + ")";
  const auto& st = std::get<SuchThat>(s.node());
  std::string out = "suchthat(" + print(st.body) + ",";
  for (std::size_t n = 0; n < st.relations.size(); ++n)
    out += (n ? " and " : "") + print(st.relations[n]);
  return out + ")";
}

inline std::string print(const CinStmt& c) { return print(c.root()); }

// ---------------------------------------------------------------------------
// Queries

inline void collect_foralls(const Stmt& s, std::vector<const Forall*>& out) {
  if (const auto* f = s.as<Forall>()) {
    out.push_back(f);
    collect_foralls(f->body, out);
  } else if (const auto* w = s.as<Where>()) {
    collect_foralls(w->producer, out);
  } else if (const auto* st = s.as<SuchThat>()) {
    collect_foralls(st->body, out);
  }
}

inline std::vector<const Forall*> foralls(const CinStmt& c) {
  std::vector<const Forall*> out;
  collect_foralls(c.root(), out);
  return out;
}

/// The innermost computing assignment (the producer side of any where).
inline const Assignment* innermost_assignment(const Stmt& s) {
  if (const auto* a = s.as<Assignment>()) return a;
  if (const auto* f = s.as<Forall>()) return innermost_assignment(f->body);
  if (const auto* w = s.as<Where>()) return innermost_assignment(w->producer);
  if (const auto* st = s.as<SuchThat>()) return innermost_assignment(st->body);
  return nullptr;
}

/// The output assignment: a where's consumer, or the assignment itself.
inline const Assignment* output_assignment(const Stmt& s) {
  if (const auto* a = s.as<Assignment>()) return a;
  if (const auto* f = s.as<Forall>()) return output_assignment(f->body);
  if (const auto* w = s.as<Where>()) return &w->consumer;
  if (const auto* st = s.as<SuchThat>()) return output_assignment(st->body);
  return nullptr;
}

inline const Where* find_where(const Stmt& s) {
  if (const auto* w = s.as<Where>()) return w;
  if (const auto* f = s.as<Forall>()) return find_where(f->body);
  if (const auto* st = s.as<SuchThat>()) return find_where(st->body);
  return nullptr;
}

/// Index variables named by tensor accesses of the computation (i, j, k).
inline std::vector<std::string> access_vars(const CinStmt& c) {
  std::vector<std::string> out;
  auto add = [&](const Access& a) {
    for (const auto& v : a.indices)
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  };
  if (const auto* o = output_assignment(c.root())) add(o->lhs);
  if (const auto* a = innermost_assignment(c.root())) {
    add(a->lhs);
    for (const auto& f : a->factors) add(f);
  }
  return out;
}

inline std::vector<std::string> output_vars(const CinStmt& c) {
  if (const auto* o = output_assignment(c.root())) return o->lhs.indices;
  return {};
}

// ---------------------------------------------------------------------------
// Provenance

enum class Provenance { Root, SplitOuter, SplitInner, Fused, PosSpace, Bounded };

struct IndexVar {
  std::string name;
  Provenance provenance = Provenance::Root;
  std::vector<std::string> parents;  // empty for roots
  std::optional<IntExpr> amount;     // split factor or bound extent
  std::optional<Access> access;      // PosSpace only
};

/// Derived-variable graph of a statement's relations. Construction never
/// throws; problems are reported through errors().
class ProvenanceGraph {
 public:
  explicit ProvenanceGraph(const CinStmt& c) {
    for (const auto& v : access_vars(c)) vars_[v] = IndexVar{v, Provenance::Root, {}, {}, {}};
    for (const auto& r : c.relations()) add(r);
    check_acyclic();
  }

  const std::vector<std::string>& errors() const { return errors_; }
  bool contains(const std::string& v) const { return vars_.count(v) != 0; }
  const IndexVar* find(const std::string& v) const {
    auto it = vars_.find(v);
    return it == vars_.end() ? nullptr : &it->second;
  }
  const std::map<std::string, IndexVar>& vars() const { return vars_; }

  /// Root variables a variable is derived from.
  std::set<std::string> roots_of(const std::string& v) const {
    std::set<std::string> out;
    std::set<std::string> seen;
    collect_roots(v, out, seen);
    return out;
  }

  /// The relation (if any) that splits, fuses, positions, or bounds `v` away.
  std::vector<const IndexVar*> children_of(const std::string& v) const {
    std::vector<const IndexVar*> out;
    for (const auto& [name, iv] : vars_)
      if (std::find(iv.parents.begin(), iv.parents.end(), v) != iv.parents.end()) out.push_back(&iv);
    return out;
  }

 private:
  void define(const std::string& child, IndexVar iv) {
    if (vars_.count(child) && vars_[child].provenance != Provenance::Root) {
      errors_.push_back("index variable '" + child + "' is derived by more than one relation");
      return;
    }
    if (vars_.count(child) && vars_[child].provenance == Provenance::Root) {
      errors_.push_back("root index variable '" + child + "' cannot be redefined");
      return;
    }
    vars_[child] = std::move(iv);
  }

  void require(const std::string& v, const std::string& rel) {
    if (!vars_.count(v))
      errors_.push_back("relation " + rel + " refers to unknown index variable '" + v + "'");
  }

  void add(const Relation& r) {
    const std::string text = print(r);
    if (const auto* f = std::get_if<FuseRel>(&r)) {
      require(f->outer, text);
      require(f->inner, text);
      define(f->fused, {f->fused, Provenance::Fused, {f->outer, f->inner}, {}, {}});
    } else if (const auto* p = std::get_if<PosRel>(&r)) {
      require(p->var, text);
      define(p->pos_var, {p->pos_var, Provenance::PosSpace, {p->var}, {}, p->access});
    } else if (const auto* s = std::get_if<SplitRel>(&r)) {
      require(s->parent, text);
      define(s->outer, {s->outer, Provenance::SplitOuter, {s->parent}, s->factor, {}});
      define(s->inner, {s->inner, Provenance::SplitInner, {s->parent}, s->factor, {}});
    } else if (const auto* b = std::get_if<BoundRel>(&r)) {
      require(b->parent, text);
      define(b->bounded, {b->bounded, Provenance::Bounded, {b->parent}, b->extent, {}});
    }
    // GroupRel annotates; it derives nothing.
  }

  void check_acyclic() {
    std::map<std::string, int> state;  // 0 new, 1 visiting, 2 done
    std::function<bool(const std::string&)> visit = [&](const std::string& v) {
      if (state[v] == 1) return false;
      if (state[v] == 2) return true;
      state[v] = 1;
      if (const auto* iv = find(v))
        for (const auto& p : iv->parents)
          if (!visit(p)) return false;
      state[v] = 2;
      return true;
    };
    for (const auto& [name, iv] : vars_)
      if (!visit(name)) {
        errors_.push_back("provenance cycle through '" + name + "'");
        return;
      }
  }

  void collect_roots(const std::string& v, std::set<std::string>& out,
                     std::set<std::string>& seen) const {
    if (!seen.insert(v).second) return;
    const auto* iv = find(v);
    if (!iv) return;
    if (iv->provenance == Provenance::Root) {
      out.insert(v);
      return;
    }
    for (const auto& p : iv->parents) collect_roots(p, out, seen);
  }

  std::map<std::string, IndexVar> vars_;
  std::vector<std::string> errors_;
};

/// A reduction variable is derived from at least one index that does not
/// appear on the output's left-hand side.
inline bool is_reduction_var(const CinStmt& c, const std::string& v) {
  ProvenanceGraph g(c);
  const auto outs = output_vars(c);
  for (const auto& r : g.roots_of(v))
    if (std::find(outs.begin(), outs.end(), r) == outs.end()) return true;
  return false;
}

/// Structural invariants of a statement tree; empty when it is well formed.
inline std::vector<std::string> check_invariants(const CinStmt& c) {
  std::vector<std::string> errs;
  ProvenanceGraph g(c);
  for (const auto& e : g.errors()) errs.push_back(e);

  std::set<std::string> declared;
  for (const auto* f : foralls(c)) declared.insert(f->var);
  for (const auto& r : c.relations()) {
    std::visit(
        [&](const auto& rel) {
          using T = std::decay_t<decltype(rel)>;
          if constexpr (std::is_same_v<T, FuseRel>) declared.insert({rel.outer, rel.inner, rel.fused});
          else if constexpr (std::is_same_v<T, PosRel>) declared.insert({rel.var, rel.pos_var});
          else if constexpr (std::is_same_v<T, SplitRel>) declared.insert({rel.parent, rel.outer, rel.inner});
          else if constexpr (std::is_same_v<T, BoundRel>) declared.insert({rel.parent, rel.bounded});
        },
        r);
  }
  for (const auto& v : access_vars(c))
    if (!declared.count(v)) errs.push_back("index variable '" + v + "' is not bound");

  std::map<ParallelUnit, int> units;
  for (const auto* f : foralls(c))
    if (f->annotation) ++units[f->annotation->unit];
  for (auto u : {ParallelUnit::GPUBlock, ParallelUnit::GPUWarp, ParallelUnit::GPUThread})
    if (units[u] > 1) errs.push_back(std::string("duplicate hardware unit ") + to_string(u));

  if (const auto* w = find_where(c.root())) {
    if (!w->consumer.factors.empty()) {
      const auto* produced = innermost_assignment(w->producer);
      bool reads_ws = std::any_of(w->consumer.factors.begin(), w->consumer.factors.end(),
                                  [&](const Access& a) { return produced && a == produced->lhs; });
      if (!produced || !produced->lhs.is_scalar() || !reads_ws)
        errs.push_back("where producer must write the scalar workspace its consumer reads");
    }
  }
  return errs;
}

/// The unscheduled statement forall(i,forall(j,forall(k,C(i,k)+=A(i,j)*B(j,k)))).
inline CinStmt build_spmm_cin() {
  Assignment a{{"C", {"i", "k"}}, AssignOp::AddAssign, {{"A", {"i", "j"}}, {"B", {"j", "k"}}}};
  Stmt k(Forall{"k", Stmt(a), std::nullopt});
  Stmt j(Forall{"j", k, std::nullopt});
  return CinStmt(Stmt(Forall{"i", j, std::nullopt}));
}

}  // namespace sgap

#endif  // SGAP_CIN_HPP
