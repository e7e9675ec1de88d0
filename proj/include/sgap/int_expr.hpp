//===- int_expr.hpp - Symbolic integer factors for schedules -----*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Split factors and bound extents are written symbolically in schedules
// (e.g. "(p*g/(N/c))"). Parentheses are kept as explicit nodes so that a
// parsed factor prints back exactly as written.
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_INT_EXPR_HPP
#define SGAP_INT_EXPR_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace sgap {

using ParamEnv = std::map<std::string, std::int64_t>;

class IntExpr {
 public:
  struct Lit { std::int64_t value; };
  struct Sym { std::string name; };
  struct Bin;
  struct Paren;
  using Node = std::variant<Lit, Sym, Bin, Paren>;

  IntExpr() : IntExpr(Lit{0}) {}
  IntExpr(std::int64_t v) : IntExpr(Lit{v}) {}  // NOLINT: literals convert implicitly
  IntExpr(Lit n);
  IntExpr(Sym n);
  IntExpr(Bin n);
  IntExpr(Paren n);

  static IntExpr sym(std::string name) { return IntExpr(Sym{std::move(name)}); }
  static IntExpr paren(IntExpr e);

  const Node& node() const;

  std::string str() const;

  /// Evaluates with exact integer semantics. Returns nullopt and fills `error`
  /// on an unknown symbol, division by zero, or a non-exact division.
  std::optional<std::int64_t> eval(const ParamEnv& env, std::string* error = nullptr) const;

  /// Replaces every bound symbol by its literal value; structure is kept.
  IntExpr substitute(const ParamEnv& env) const;

  friend bool operator==(const IntExpr& a, const IntExpr& b) { return a.str() == b.str(); }

 private:
  std::shared_ptr<const Node> node_;
};

struct IntExpr::Bin { char op; IntExpr lhs; IntExpr rhs; };
struct IntExpr::Paren { IntExpr inner; };

inline IntExpr::IntExpr(Lit n) : node_(std::make_shared<Node>(n)) {}
inline IntExpr::IntExpr(Sym n) : node_(std::make_shared<Node>(std::move(n))) {}
inline IntExpr::IntExpr(Bin n) : node_(std::make_shared<Node>(std::move(n))) {}
inline IntExpr::IntExpr(Paren n) : node_(std::make_shared<Node>(std::move(n))) {}
inline const IntExpr::Node& IntExpr::node() const { return *node_; }
inline IntExpr IntExpr::paren(IntExpr e) { return IntExpr(Paren{std::move(e)}); }

inline std::string IntExpr::str() const {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Lit>) return std::to_string(n.value);
        else if constexpr (std::is_same_v<T, Sym>) return n.name;
        else if constexpr (std::is_same_v<T, Bin>) return n.lhs.str() + n.op + n.rhs.str();
        else return "(" + n.inner.str() + ")";
      },
      *node_);
}

inline std::optional<std::int64_t> IntExpr::eval(const ParamEnv& env, std::string* error) const {
  auto fail = [&](std::string msg) -> std::optional<std::int64_t> {
    if (error) *error = std::move(msg);
    return std::nullopt;
  };
  if (const auto* l = std::get_if<Lit>(node_.get())) return l->value;
  if (const auto* s = std::get_if<Sym>(node_.get())) {
    auto it = env.find(s->name);
    if (it == env.end()) return fail("unbound parameter '" + s->name + "'");
    return it->second;
  }
  if (const auto* p = std::get_if<Paren>(node_.get())) return p->inner.eval(env, error);
  const auto& b = std::get<Bin>(*node_);
  auto lhs = b.lhs.eval(env, error);
  if (!lhs) return std::nullopt;
  auto rhs = b.rhs.eval(env, error);
  if (!rhs) return std::nullopt;
  switch (b.op) {
    case '+': return *lhs + *rhs;
    case '-': return *lhs - *rhs;
    case '*': return *lhs * *rhs;
    case '/':
      if (*rhs == 0) return fail("division by zero in '" + str() + "'");
      if (*lhs % *rhs != 0)
        return fail("'" + str() + "' = " + std::to_string(*lhs) + "/" + std::to_string(*rhs) +
                    " is not an integer");
      return *lhs / *rhs;
    default: return fail(std::string("unknown operator '") + b.op + "'");
  }
}

inline IntExpr IntExpr::substitute(const ParamEnv& env) const {
  return std::visit(
      [&](const auto& n) -> IntExpr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Lit>) return IntExpr(n);
        else if constexpr (std::is_same_v<T, Sym>) {
          auto it = env.find(n.name);
          return it == env.end() ? IntExpr(n) : IntExpr(it->second);
        } else if constexpr (std::is_same_v<T, Bin>)
          return IntExpr(Bin{n.op, n.lhs.substitute(env), n.rhs.substitute(env)});
        else return IntExpr(Paren{n.inner.substitute(env)});
      },
      *node_);
}

}  // namespace sgap

#endif  // SGAP_INT_EXPR_HPP
