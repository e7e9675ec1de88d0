//===- scheduler.hpp - Schedule transformations on CIN ---------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_SCHEDULER_HPP
#define SGAP_SCHEDULER_HPP

#include <algorithm>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sgap/cin.hpp"
#include "sgap/plan.hpp"

namespace sgap {

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace cmd {

struct Fuse { std::string outer, inner, fused; };
struct Pos { std::string var, pos_var; Access access; };
struct Split { std::string var, outer, inner; IntExpr factor; };
struct Bound { std::string var, bounded; IntExpr extent; BoundType type = BoundType::MaxExact; };
struct Parallelize { std::string var; ParallelAnnotation annotation; };

/// Scalar-workspace insertion, done as a direct tree rewrite. The loops in
/// `producer_loops` move under a where producer that accumulates `workspace`;
/// the consumer reduces the workspace into the output. `consumer_order`, when
/// non-empty, is the order of the loops that stay outside.
struct Precompute {
  std::string workspace;
  std::vector<std::string> producer_loops;
  std::vector<std::string> consumer_order;
};

}  // namespace cmd

using ScheduleCmd =
    std::variant<cmd::Fuse, cmd::Pos, cmd::Split, cmd::Bound, cmd::Parallelize, cmd::Precompute>;

namespace detail {

/// Rewrites the forall over `var`; nullopt when no such loop exists.
inline std::optional<Stmt> rewrite_forall(const Stmt& s, const std::string& var,
                                          const std::function<Stmt(const Forall&)>& fn) {
  if (const auto* f = s.as<Forall>()) {
    if (f->var == var) return fn(*f);
    if (auto body = rewrite_forall(f->body, var, fn)) return Stmt(Forall{f->var, *body, f->annotation});
    return std::nullopt;
  }
  if (const auto* w = s.as<Where>()) {
    if (auto p = rewrite_forall(w->producer, var, fn)) return Stmt(Where{w->consumer, *p});
    return std::nullopt;
  }
  return std::nullopt;
}

inline void literal_at_least_one(const IntExpr& e, const char* what) {
  if (auto v = e.eval({}); v && *v < 1)
    throw ScheduleError(std::string(what) + " must be at least 1, got " + std::to_string(*v));
}

inline void check_new_name(const CinStmt& c, const std::string& name) {
  ProvenanceGraph g(c);
  for (const auto* f : foralls(c))
    if (f->var == name) throw ScheduleError("index variable '" + name + "' already exists");
  if (g.contains(name)) throw ScheduleError("index variable '" + name + "' already exists");
}

inline Stmt require_forall(const CinStmt& c, const std::string& var,
                           const std::function<Stmt(const Forall&)>& fn) {
  auto body = rewrite_forall(c.body(), var, fn);
  if (!body) throw ScheduleError("unknown variable '" + var + "': no loop iterates it");
  return *body;
}

inline CinStmt add_relation(const CinStmt& c, Stmt body, Relation r) {
  auto rels = c.relations();
  rels.push_back(std::move(r));
  return c.with(std::move(body), std::move(rels));
}

inline Stmt nest(const std::vector<const Forall*>& loops, std::size_t from, Stmt inner) {
  for (std::size_t n = loops.size(); n-- > from;)
    inner = Stmt(Forall{loops[n]->var, inner, loops[n]->annotation});
  return inner;
}

}  // namespace detail

inline CinStmt apply(const CinStmt& c, const cmd::Fuse& f) {
  detail::check_new_name(c, f.fused);
  Stmt body = detail::require_forall(c, f.outer, [&](const Forall& outer) {
    const auto* inner = outer.body.as<Forall>();
    if (!inner || inner->var != f.inner)
      throw ScheduleError("cannot fuse '" + f.outer + "' and '" + f.inner + "': loops are not directly nested");
    if (outer.annotation || inner->annotation)
      throw ScheduleError("cannot fuse parallelized loops");
    return Stmt(Forall{f.fused, inner->body, std::nullopt});
  });
  return detail::add_relation(c, body, FuseRel{f.outer, f.inner, f.fused});
}

inline CinStmt apply(const CinStmt& c, const cmd::Pos& p) {
  if (p.access.tensor != "A")
    throw ScheduleError("pos on '" + print(p.access) + "': only the compressed operand A has a position space");
  detail::check_new_name(c, p.pos_var);
  Stmt body = detail::require_forall(c, p.var, [&](const Forall& f) {
    return Stmt(Forall{p.pos_var, f.body, f.annotation});
  });
  return detail::add_relation(c, body, PosRel{p.var, p.pos_var, p.access});
}

inline CinStmt apply(const CinStmt& c, const cmd::Split& s) {
  detail::literal_at_least_one(s.factor, "split factor");
  detail::check_new_name(c, s.outer);
  detail::check_new_name(c, s.inner);
  Stmt body = detail::require_forall(c, s.var, [&](const Forall& f) {
    return Stmt(Forall{s.outer, Stmt(Forall{s.inner, f.body, std::nullopt}), f.annotation});
  });
  return detail::add_relation(c, body, SplitRel{s.var, s.outer, s.inner, s.factor});
}

inline CinStmt apply(const CinStmt& c, const cmd::Bound& b) {
  detail::literal_at_least_one(b.extent, "bound extent");
  detail::check_new_name(c, b.bounded);
  Stmt body = detail::require_forall(c, b.var, [&](const Forall& f) {
    return Stmt(Forall{b.bounded, f.body, f.annotation});
  });
  return detail::add_relation(c, body, BoundRel{b.var, b.bounded, b.extent, b.type});
}

inline CinStmt apply(const CinStmt& c, const cmd::Parallelize& p) {
  if (p.annotation.unit == ParallelUnit::GPUGroup) {
    bool exists = false;
    for (const auto* f : foralls(c)) exists |= f->var == p.var;
    if (!exists) throw ScheduleError("unknown variable '" + p.var + "': no loop iterates it");
    if (!is_reduction_var(c, p.var))
      throw ScheduleError("GPUGroup requires a reduction variable; '" + p.var + "' indexes the output");
    for (const auto& r : c.relations())
      if (std::holds_alternative<GroupRel>(r))
        throw ScheduleError("second annotation on the same hardware unit GPUGroup");
    if (!p.annotation.strategy || !p.annotation.group_size)
      throw ScheduleError("GPUGroup needs a reduction strategy and group size");
    return detail::add_relation(c, c.body(), GroupRel{p.var, *p.annotation.group_size, *p.annotation.strategy});
  }
  for (const auto* f : foralls(c))
    if (f->annotation && f->annotation->unit == p.annotation.unit)
      throw ScheduleError(std::string("second annotation on the same hardware unit ") +
                          to_string(p.annotation.unit));
  Stmt body = detail::require_forall(c, p.var, [&](const Forall& f) {
    return Stmt(Forall{f.var, f.body, p.annotation});
  });
  return c.with(body, c.relations());
}

inline CinStmt apply(const CinStmt& c, const cmd::Precompute& p) {
  std::vector<const Forall*> chain;
  Stmt s = c.body();
  while (const auto* f = s.as<Forall>()) {
    chain.push_back(f);
    s = f->body;
  }
  const auto* a = s.as<Assignment>();
  if (!a) throw ScheduleError("precompute needs a perfect loop nest around a single assignment");
  if (a->op != AssignOp::AddAssign) throw ScheduleError("precompute needs an accumulating assignment");

  std::vector<const Forall*> consumer, producer;
  for (const auto& v : p.producer_loops) {
    auto it = std::find_if(chain.begin(), chain.end(), [&](const Forall* f) { return f->var == v; });
    if (it == chain.end()) throw ScheduleError("unknown variable '" + v + "': no loop iterates it");
    producer.push_back(*it);
  }
  for (const auto* f : chain)
    if (std::find(producer.begin(), producer.end(), f) == producer.end()) consumer.push_back(f);
  if (!p.consumer_order.empty()) {
    if (p.consumer_order.size() != consumer.size())
      throw ScheduleError("consumer order must list every loop outside the workspace");
    std::vector<const Forall*> ordered;
    for (const auto& v : p.consumer_order) {
      auto it = std::find_if(consumer.begin(), consumer.end(), [&](const Forall* f) { return f->var == v; });
      if (it == consumer.end()) throw ScheduleError("consumer order names unknown loop '" + v + "'");
      ordered.push_back(*it);
    }
    consumer = ordered;
  }

  Access ws{p.workspace, {}};
  Assignment compute{ws, producer.empty() ? AssignOp::Assign : AssignOp::AddAssign, a->factors};
  Stmt produced = detail::nest(producer, 0, Stmt(compute));
  Stmt where(Where{Assignment{a->lhs, AssignOp::AddAssign, {ws}}, produced});
  return c.with(detail::nest(consumer, 0, where), c.relations());
}

inline CinStmt apply(const CinStmt& c, const ScheduleCmd& command) {
  return std::visit([&](const auto& x) { return sgap::apply(c, x); }, command);
}

inline CinStmt apply_all(CinStmt c, const std::vector<ScheduleCmd>& commands) {
  for (const auto& x : commands) c = sgap::apply(c, x);
  return c;
}

/// Diagnostics explaining why `c` cannot be lowered; empty iff it can. `env`
/// resolves symbolic factors (p, g, c, N, r); it must bind N.
inline std::vector<std::string> validate_schedule(const CinStmt& c, const ParamEnv& env = {}) {
  ShapeDims dims;
  auto n = env.find("N");
  if (n == env.end()) return {"dense column count N is not bound"};
  dims.dense_cols = n->second;
  return analyze_schedule(c, env, dims).diagnostics;
}

}  // namespace sgap

#endif  // SGAP_SCHEDULER_HPP
