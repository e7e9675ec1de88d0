//===- llir.hpp - Imperative low-level IR for lowered kernels --*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Expressions and statements are immutable trees shared through
// shared_ptr. Every lane of a kernel sees the same tree; per-lane values
// live only in the simulator.
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_LLIR_HPP
#define SGAP_LLIR_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace sgap::llir {

enum class Type { Int, Float };

enum class Array { A2_pos, A2_crd, A_vals, B_vals, C_vals, i_blockStarts };
enum class Dim { A1_dimension, A2_dimension, B2_dimension, C2_dimension };
enum class Hw { BlockIdx, ThreadIdx };
enum class Op { Add, Sub, Mul, Div, Mod, Min, Lt, Le, Gt, Ge, Eq, Ne };
enum class Macro { AtomicAddGroup, SegReduceGroup };

inline const char* to_string(Array a) {
  switch (a) {
    case Array::A2_pos: return "A2_pos";
    case Array::A2_crd: return "A2_crd";
    case Array::A_vals: return "A_vals";
    case Array::B_vals: return "B_vals";
    case Array::C_vals: return "C_vals";
    case Array::i_blockStarts: return "i_blockStarts";
  }
  return "?";
}

inline Type element_type(Array a) {
  return (a == Array::A_vals || a == Array::B_vals || a == Array::C_vals) ? Type::Float : Type::Int;
}

inline const char* to_string(Dim d) {
  switch (d) {
    case Dim::A1_dimension: return "A1_dimension";
    case Dim::A2_dimension: return "A2_dimension";
    case Dim::B2_dimension: return "B2_dimension";
    case Dim::C2_dimension: return "C2_dimension";
  }
  return "?";
}

inline const char* to_string(Op op) {
  switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Mod: return "%";
    case Op::Min: return "min";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::Eq: return "==";
    case Op::Ne: return "!=";
  }
  return "?";
}

inline bool is_comparison(Op op) { return op >= Op::Lt; }

// ---------------------------------------------------------------------------
// Expressions

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  enum Kind { IntLit, FloatLit, Var, Load, Bin, BinarySearch, HwIndex, DimRef } kind;
  Type type = Type::Int;
  std::int64_t ival = 0;
  double fval = 0;
  std::string name;        // Var
  Array array{};           // Load, BinarySearch
  Op op{};                 // Bin
  Hw hw{};                 // HwIndex
  Dim dim{};               // DimRef
  std::vector<Expr> args;  // Load: index; Bin: lhs, rhs; BinarySearch: lo, hi, target
};

inline Expr make(ExprNode n) { return std::make_shared<const ExprNode>(std::move(n)); }

inline Expr lit(std::int64_t v) { return make({ExprNode::IntLit, Type::Int, v}); }
inline Expr flit(double v) { return make({ExprNode::FloatLit, Type::Float, 0, v}); }
inline Expr var(std::string name, Type t = Type::Int) {
  ExprNode n{ExprNode::Var, t};
  n.name = std::move(name);
  return make(std::move(n));
}
inline Expr load(Array a, Expr index) {
  ExprNode n{ExprNode::Load, element_type(a)};
  n.array = a;
  n.args = {std::move(index)};
  return make(std::move(n));
}
inline Expr hw(Hw h) {
  ExprNode n{ExprNode::HwIndex, Type::Int};
  n.hw = h;
  return make(std::move(n));
}
inline Expr dim(Dim d) {
  ExprNode n{ExprNode::DimRef, Type::Int};
  n.dim = d;
  return make(std::move(n));
}
inline Expr binary_search(Array a, Expr lo, Expr hi, Expr target) {
  ExprNode n{ExprNode::BinarySearch, Type::Int};
  n.array = a;
  n.args = {std::move(lo), std::move(hi), std::move(target)};
  return make(std::move(n));
}

inline bool is_int_lit(const Expr& e, std::int64_t v) {
  return e->kind == ExprNode::IntLit && e->ival == v;
}

/// Builds lhs op rhs, folding integer literals and identities.
inline Expr bin(Op op, Expr lhs, Expr rhs) {
  const bool ints = lhs->type == Type::Int && rhs->type == Type::Int;
  if (ints && lhs->kind == ExprNode::IntLit && rhs->kind == ExprNode::IntLit && !is_comparison(op)) {
    const auto a = lhs->ival, b = rhs->ival;
    switch (op) {
      case Op::Add: return lit(a + b);
      case Op::Sub: return lit(a - b);
      case Op::Mul: return lit(a * b);
      case Op::Div: if (b != 0) return lit(a / b); break;
      case Op::Mod: if (b != 0) return lit(a % b); break;
      case Op::Min: return lit(a < b ? a : b);
      default: break;
    }
  }
  if (ints) {
    if (op == Op::Add && is_int_lit(rhs, 0)) return lhs;
    if (op == Op::Add && is_int_lit(lhs, 0)) return rhs;
    if (op == Op::Sub && is_int_lit(rhs, 0)) return lhs;
    if (op == Op::Mul && (is_int_lit(lhs, 0) || is_int_lit(rhs, 0))) return lit(0);
    if (op == Op::Mul && is_int_lit(rhs, 1)) return lhs;
    if (op == Op::Mul && is_int_lit(lhs, 1)) return rhs;
    if (op == Op::Div && is_int_lit(rhs, 1)) return lhs;
    if (op == Op::Mod && is_int_lit(rhs, 1)) return lit(0);
  }
  ExprNode n{ExprNode::Bin, is_comparison(op) || ints ? Type::Int : Type::Float};
  n.op = op;
  n.args = {std::move(lhs), std::move(rhs)};
  return make(std::move(n));
}

inline Expr operator+(Expr a, Expr b) { return bin(Op::Add, std::move(a), std::move(b)); }
inline Expr operator-(Expr a, Expr b) { return bin(Op::Sub, std::move(a), std::move(b)); }
inline Expr operator*(Expr a, Expr b) { return bin(Op::Mul, std::move(a), std::move(b)); }
inline Expr operator/(Expr a, Expr b) { return bin(Op::Div, std::move(a), std::move(b)); }
inline Expr operator%(Expr a, Expr b) { return bin(Op::Mod, std::move(a), std::move(b)); }

// ---------------------------------------------------------------------------
// Statements

struct StmtNode;
using Stmt = std::shared_ptr<const StmtNode>;

struct StmtNode {
  enum Kind { Block, For, While, If, VarDecl, Assign, Store, AtomicAdd, MacroInstr, Break } kind;
  std::string name;         // For: loop variable; VarDecl/Assign: target
  Type type = Type::Int;    // VarDecl
  Expr a, b, c;             // For: begin, end; While/If: cond; VarDecl/Assign: value;
                            // Store/AtomicAdd/MacroInstr: index (a), value (b)
  Array array = Array::C_vals;
  Macro macro = Macro::AtomicAddGroup;
  std::int64_t group_size = 0;
  bool zero_extension = false;  // Assign of a filler value to a group-reduced workspace
  std::vector<Stmt> body;       // Block, For, While, If (then)
  std::vector<Stmt> orelse;     // If
};

inline Stmt mk(StmtNode n) { return std::make_shared<const StmtNode>(std::move(n)); }

inline Stmt block(std::vector<Stmt> body) {
  StmtNode n{StmtNode::Block};
  n.body = std::move(body);
  return mk(std::move(n));
}
inline Stmt for_loop(std::string v, Expr begin, Expr end, std::vector<Stmt> body) {
  StmtNode n{StmtNode::For, std::move(v)};
  n.a = std::move(begin);
  n.b = std::move(end);
  n.body = std::move(body);
  return mk(std::move(n));
}
inline Stmt while_loop(Expr cond, std::vector<Stmt> body) {
  StmtNode n{StmtNode::While};
  n.a = std::move(cond);
  n.body = std::move(body);
  return mk(std::move(n));
}
inline Stmt if_then(Expr cond, std::vector<Stmt> then, std::vector<Stmt> orelse = {}) {
  StmtNode n{StmtNode::If};
  n.a = std::move(cond);
  n.body = std::move(then);
  n.orelse = std::move(orelse);
  return mk(std::move(n));
}
inline Stmt decl(std::string name, Expr init) {
  StmtNode n{StmtNode::VarDecl, std::move(name), init->type};
  n.a = std::move(init);
  return mk(std::move(n));
}
inline Stmt decl(std::string name, Type t, Expr init) {
  StmtNode n{StmtNode::VarDecl, std::move(name), t};
  n.a = std::move(init);
  return mk(std::move(n));
}
inline Stmt assign(std::string name, Expr value, bool zero_extension = false) {
  StmtNode n{StmtNode::Assign, std::move(name), value->type};
  n.a = std::move(value);
  n.zero_extension = zero_extension;
  return mk(std::move(n));
}
inline Stmt store(Array arr, Expr index, Expr value) {
  StmtNode n{StmtNode::Store};
  n.array = arr;
  n.a = std::move(index);
  n.b = std::move(value);
  return mk(std::move(n));
}
inline Stmt atomic_add(Array arr, Expr index, Expr value) {
  StmtNode n{StmtNode::AtomicAdd};
  n.array = arr;
  n.a = std::move(index);
  n.b = std::move(value);
  return mk(std::move(n));
}
inline Stmt macro(Macro m, std::int64_t g, Array arr, Expr index, Expr value) {
  StmtNode n{StmtNode::MacroInstr};
  n.macro = m;
  n.group_size = g;
  n.array = arr;
  n.a = std::move(index);
  n.b = std::move(value);
  return mk(std::move(n));
}
inline Stmt brk() { return mk({StmtNode::Break}); }

// ---------------------------------------------------------------------------
// Printing

/// How hardware indices and scalar types are spelled.
struct Spelling {
  std::string block_idx = "blockIdx";
  std::string thread_idx = "threadIdx";
  std::string int_type = "int";
  std::string float_type = "float";
  std::string binary_search = "binarySearchBefore";
};

inline int precedence(const Expr& e) {
  if (e->kind != ExprNode::Bin || e->op == Op::Min) return 10;
  switch (e->op) {
    case Op::Mul: case Op::Div: case Op::Mod: return 5;
    case Op::Add: case Op::Sub: return 4;
    case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge: return 3;
    default: return 2;
  }
}

inline std::string format_float(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  std::string s = os.str();
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string print(const Expr& e, const Spelling& sp = {}) {
  switch (e->kind) {
    case ExprNode::IntLit: return std::to_string(e->ival);
    case ExprNode::FloatLit: return format_float(e->fval);
    case ExprNode::Var: return e->name;
    case ExprNode::Load: return std::string(to_string(e->array)) + "[" + print(e->args[0], sp) + "]";
    case ExprNode::HwIndex: return e->hw == Hw::BlockIdx ? sp.block_idx : sp.thread_idx;
    case ExprNode::DimRef: return to_string(e->dim);
    case ExprNode::BinarySearch:
      return sp.binary_search + "(" + to_string(e->array) + ", " + print(e->args[0], sp) + ", " +
             print(e->args[1], sp) + ", " + print(e->args[2], sp) + ")";
    case ExprNode::Bin: {
      if (e->op == Op::Min) return "min(" + print(e->args[0], sp) + ", " + print(e->args[1], sp) + ")";
      const int p = precedence(e);
      const auto& l = e->args[0];
      const auto& r = e->args[1];
      std::string ls = print(l, sp), rs = print(r, sp);
      if (precedence(l) < p) ls = "(" + ls + ")";
      const bool assoc = r->kind == ExprNode::Bin && r->op == e->op && (e->op == Op::Add || e->op == Op::Mul);
      if (precedence(r) < p || (precedence(r) == p && !assoc)) rs = "(" + rs + ")";
      return ls + " " + to_string(e->op) + " " + rs;
    }
  }
  return "?";
}

inline const char* to_string(Macro m) {
  return m == Macro::AtomicAddGroup ? "atomicAddGroup" : "segReduceGroup";
}

/// One-line description of a statement, used in dumps and fault messages.
inline std::string headline(const StmtNode& s, const Spelling& sp = {}) {
  auto ty = [&](Type t) { return t == Type::Int ? sp.int_type : sp.float_type; };
  switch (s.kind) {
    case StmtNode::Block: return "{";
    case StmtNode::For:
      return "for " + s.name + " in [" + print(s.a, sp) + ", " + print(s.b, sp) + ")";
    case StmtNode::While: return "while (" + print(s.a, sp) + ")";
    case StmtNode::If: return "if (" + print(s.a, sp) + ")";
    case StmtNode::VarDecl: return ty(s.type) + " " + s.name + " = " + print(s.a, sp);
    case StmtNode::Assign:
      return s.name + " = " + print(s.a, sp) + (s.zero_extension ? "  // zero extension" : "");
    case StmtNode::Store:
      return std::string(to_string(s.array)) + "[" + print(s.a, sp) + "] += " + print(s.b, sp);
    case StmtNode::AtomicAdd:
      return std::string("atomic ") + to_string(s.array) + "[" + print(s.a, sp) + "] += " + print(s.b, sp);
    case StmtNode::MacroInstr:
      return std::string(to_string(s.macro)) + "<" + std::to_string(s.group_size) + ">(" + to_string(s.array) +
             ", " + print(s.a, sp) + ", " + print(s.b, sp) + ")";
    case StmtNode::Break: return "break";
  }
  return "?";
}

namespace detail {

inline void dump(const Stmt& s, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  auto nested = [&](const std::vector<Stmt>& body) {
    for (const auto& c : body) dump(c, depth + 1, out);
  };
  switch (s->kind) {
    case StmtNode::Block:
      for (const auto& c : s->body) dump(c, depth, out);
      return;
    case StmtNode::For:
    case StmtNode::While:
      out += pad + headline(*s) + " {\n";
      nested(s->body);
      out += pad + "}\n";
      return;
    case StmtNode::If:
      out += pad + headline(*s) + " {\n";
      nested(s->body);
      if (!s->orelse.empty()) {
        out += pad + "} else {\n";
        nested(s->orelse);
      }
      out += pad + "}\n";
      return;
    default:
      out += pad + headline(*s) + "\n";
  }
}

}  // namespace detail

/// Stable textual form of a statement tree.
inline std::string dump(const Stmt& s) {
  std::string out;
  detail::dump(s, 0, out);
  return out;
}

// ---------------------------------------------------------------------------
// Structural checks

namespace detail {

inline void check_expr(const Expr& e, const std::set<std::string>& scope, std::vector<std::string>& errs) {
  if (e->kind == ExprNode::Var && !scope.count(e->name))
    errs.push_back("'" + e->name + "' is used outside the scope of its declaration");
  for (const auto& a : e->args) check_expr(a, scope, errs);
}

inline void check_stmts(const std::vector<Stmt>& body, std::set<std::string> scope, std::vector<std::string>& errs);

inline void check_stmt(const Stmt& s, std::set<std::string>& scope, std::vector<std::string>& errs) {
  for (const Expr* e : {&s->a, &s->b, &s->c})
    if (*e) check_expr(*e, scope, errs);
  switch (s->kind) {
    case StmtNode::Block: check_stmts(s->body, scope, errs); break;
    case StmtNode::For: {
      auto inner = scope;
      inner.insert(s->name);
      check_stmts(s->body, inner, errs);
      break;
    }
    case StmtNode::While: check_stmts(s->body, scope, errs); break;
    case StmtNode::If:
      check_stmts(s->body, scope, errs);
      check_stmts(s->orelse, scope, errs);
      break;
    case StmtNode::VarDecl: scope.insert(s->name); break;
    case StmtNode::Assign:
      if (!scope.count(s->name)) errs.push_back("assignment to undeclared '" + s->name + "'");
      break;
    case StmtNode::MacroInstr: {
      const auto g = s->group_size;
      if (g != 2 && g != 4 && g != 8 && g != 16 && g != 32)
        errs.push_back("macro group size " + std::to_string(g) + " is outside {2,4,8,16,32}");
      break;
    }
    default: break;
  }
}

inline void check_stmts(const std::vector<Stmt>& body, std::set<std::string> scope, std::vector<std::string>& errs) {
  for (const auto& s : body) check_stmt(s, scope, errs);
}

}  // namespace detail

/// Problems with scoping and macro group sizes; empty for a well-formed tree.
inline std::vector<std::string> check(const Stmt& s) {
  std::vector<std::string> errs;
  std::set<std::string> scope;
  detail::check_stmt(s, scope, errs);
  return errs;
}

/// Visits every statement in pre-order.
template <typename Fn>
void walk(const Stmt& s, Fn&& fn) {
  fn(*s);
  for (const auto& c : s->body) walk(c, fn);
  for (const auto& c : s->orelse) walk(c, fn);
}

}  // namespace sgap::llir

#endif  // SGAP_LLIR_HPP
