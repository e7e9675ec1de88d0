//===- cin_parser.hpp - Textual concrete index notation --------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Grammar (whitespace-insensitive):
//
//   stmt      := suchthat | forall | where | assign
//   suchthat  := 'suchthat' '(' stmt ',' rel ('and' rel)* ')'
//   forall    := 'forall' '(' ID ',' stmt [',' UNIT ',' RACE] ')'
//   where     := 'where' '(' assign ',' stmt ')'
//   assign    := access ('+=' | '=') access ('*' access)*
//   access    := ID ['(' ID (',' ID)* ')']
//   rel       := 'fuse' '(' ID ',' ID ',' ID ')'
//              | 'pos' '(' ID ',' ID ',' access ')'
//              | 'split' '(' ID ',' ID ',' ID ',' iexpr ')'
//              | 'bound' '(' ID ',' ID ',' iexpr ',' 'MaxExact' ')'
//              | 'parallelize' '(' ID ',' 'GPUGroup' ',' iexpr ',' ('Atomics'|'Segment') ')'
//   iexpr     := iterm (('+'|'-') iterm)*
//   iterm     := ifactor (('*'|'/') ifactor)*
//   ifactor   := INT | ID | '(' iexpr ')'
//
// The normalized form of a text is its token sequence with no whitespace
// except a single space on each side of 'and'; print() emits exactly that.
//
//===----------------------------------------------------------------------===//

#ifndef SGAP_CIN_PARSER_HPP
#define SGAP_CIN_PARSER_HPP

#include <cctype>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgap/cin.hpp"

namespace sgap {

class CinSyntaxError : public std::runtime_error {
 public:
  CinSyntaxError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_, column_;
};

/// Raised for a well-formed text that uses an index variable nothing binds.
class CinUnboundVariable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct CinToken {
  enum Kind { Ident, Int, Punct, End } kind;
  std::string text;
  std::size_t line, column;
};

inline std::vector<CinToken> tokenize_cin(const std::string& src) {
  std::vector<CinToken> out;
  std::size_t line = 1, col = 1;
  for (std::size_t p = 0; p < src.size();) {
    const char ch = src[p];
    if (ch == '\n') {
      ++line, col = 1, ++p;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++col, ++p;
      continue;
    }
    const std::size_t start = p, start_col = col;
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      while (p < src.size() && (std::isalnum(static_cast<unsigned char>(src[p])) || src[p] == '_')) ++p;
      out.push_back({CinToken::Ident, src.substr(start, p - start), line, start_col});
    } else if (std::isdigit(static_cast<unsigned char>(ch))) {
      while (p < src.size() && std::isdigit(static_cast<unsigned char>(src[p]))) ++p;
      out.push_back({CinToken::Int, src.substr(start, p - start), line, start_col});
    } else if (ch == '+' && p + 1 < src.size() && src[p + 1] == '=') {
      p += 2;
      out.push_back({CinToken::Punct, "+=", line, start_col});
    } else if (std::string("(),=*/+-").find(ch) != std::string::npos) {
      ++p;
      out.push_back({CinToken::Punct, std::string(1, ch), line, start_col});
    } else {
      throw CinSyntaxError(line, col, std::string("unexpected character '") + ch + "'");
    }
    col += p - start;
  }
  out.push_back({CinToken::End, "", line, col});
  return out;
}

class CinParser {
 public:
  explicit CinParser(const std::string& src) : toks_(tokenize_cin(src)) {}

  CinStmt parse() {
    Stmt s = stmt();
    if (peek().kind != CinToken::End) fail("unexpected trailing input '" + peek().text + "'");
    return CinStmt(std::move(s));
  }

  IntExpr parse_int() {
    IntExpr e = iexpr();
    if (peek().kind != CinToken::End) fail("unexpected trailing input '" + peek().text + "'");
    return e;
  }

 private:
  const CinToken& peek() const { return toks_[pos_]; }
  const CinToken& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw CinSyntaxError(peek().line, peek().column, msg);
  }

  bool accept(const std::string& text) {
    if (peek().kind != CinToken::End && peek().text == text) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(const std::string& text) {
    if (!accept(text))
      fail("expected '" + text + "' but found '" + (peek().kind == CinToken::End ? "<end>" : peek().text) + "'");
  }

  std::string ident() {
    if (peek().kind != CinToken::Ident)
      fail("expected identifier but found '" + (peek().kind == CinToken::End ? "<end>" : peek().text) + "'");
    return next().text;
  }

  Stmt stmt() {
    if (peek().kind == CinToken::Ident && toks_[pos_ + 1].text == "(") {
      const std::string& kw = peek().text;
      if (kw == "suchthat") return suchthat();
      if (kw == "forall") return forall();
      if (kw == "where") return where();
    }
    return Stmt(assignment());
  }

  Stmt suchthat() {
    expect("suchthat");
    expect("(");
    Stmt body = stmt();
    expect(",");
    std::vector<Relation> rels{relation()};
    while (accept("and")) rels.push_back(relation());
    expect(")");
    return Stmt(SuchThat{std::move(body), std::move(rels)});
  }

  Stmt forall() {
    expect("forall");
    expect("(");
    std::string var = ident();
    expect(",");
    Stmt body = stmt();
    std::optional<ParallelAnnotation> annot;
    if (accept(",")) {
      const std::string unit = ident();
      ParallelUnit u;
      if (unit == "GPUBlock") u = ParallelUnit::GPUBlock;
      else if (unit == "GPUWarp") u = ParallelUnit::GPUWarp;
      else if (unit == "GPUThread") u = ParallelUnit::GPUThread;
      else fail("unknown parallel unit '" + unit + "'");
      expect(",");
      annot = ParallelAnnotation::hardware(u, race(ident()));
    }
    expect(")");
    return Stmt(Forall{std::move(var), std::move(body), std::move(annot)});
  }

  OutputRace race(const std::string& r) {
    if (r == "NoRaces") return OutputRace::NoRaces;
    if (r == "IgnoreRaces") return OutputRace::IgnoreRaces;
    if (r == "Atomics") return OutputRace::Atomics;
    if (r == "ParallelReduction") return OutputRace::ParallelReduction;
    fail("unknown output race strategy '" + r + "'");
  }

  Stmt where() {
    expect("where");
    expect("(");
    Assignment consumer = assignment();
    expect(",");
    Stmt producer = stmt();
    expect(")");
    return Stmt(Where{std::move(consumer), std::move(producer)});
  }

  Access access() {
    Access a{ident(), {}};
    if (accept("(")) {
      a.indices.push_back(ident());
      while (accept(",")) a.indices.push_back(ident());
      expect(")");
    }
    return a;
  }

  Assignment assignment() {
    Assignment a;
    a.lhs = access();
    if (accept("+=")) a.op = AssignOp::AddAssign;
    else if (accept("=")) a.op = AssignOp::Assign;
    else fail("expected '+=' or '='");
    a.factors.push_back(access());
    while (accept("*")) a.factors.push_back(access());
    return a;
  }

  Relation relation() {
    const std::string kw = ident();
    expect("(");
    Relation r;
    if (kw == "fuse") {
      FuseRel f;
      f.outer = ident(), expect(","), f.inner = ident(), expect(","), f.fused = ident();
      r = f;
    } else if (kw == "pos") {
      PosRel p;
      p.var = ident(), expect(","), p.pos_var = ident(), expect(",");
      p.access = access();
      r = p;
    } else if (kw == "split") {
      SplitRel s;
      s.parent = ident(), expect(","), s.outer = ident(), expect(","), s.inner = ident(), expect(",");
      s.factor = iexpr();
      r = s;
    } else if (kw == "bound") {
      BoundRel b;
      b.parent = ident(), expect(","), b.bounded = ident(), expect(",");
      b.extent = iexpr();
      expect(",");
      if (ident() != "MaxExact") fail("only MaxExact bounds are supported");
      r = b;
    } else if (kw == "parallelize") {
      GroupRel g;
      g.var = ident();
      expect(",");
      if (ident() != "GPUGroup") fail("suchthat parallelize only binds GPUGroup");
      expect(",");
      g.group_size = iexpr();
      expect(",");
      const std::string strat = ident();
      if (strat == "Atomics") g.strategy = ReductionStrategy::Parallel;
      else if (strat == "Segment") g.strategy = ReductionStrategy::Segment;
      else fail("unknown reduction strategy '" + strat + "'");
      r = g;
    } else {
      --pos_;
      fail("unknown relation '" + kw + "'");
    }
    expect(")");
    return r;
  }

  IntExpr iexpr() {
    IntExpr lhs = iterm();
    while (peek().text == "+" || peek().text == "-") {
      char op = next().text[0];
      lhs = IntExpr(IntExpr::Bin{op, lhs, iterm()});
    }
    return lhs;
  }

  IntExpr iterm() {
    IntExpr lhs = ifactor();
    while (peek().text == "*" || peek().text == "/") {
      char op = next().text[0];
      lhs = IntExpr(IntExpr::Bin{op, lhs, ifactor()});
    }
    return lhs;
  }

  IntExpr ifactor() {
    if (peek().kind == CinToken::Int) return IntExpr(static_cast<std::int64_t>(std::stoll(next().text)));
    if (peek().kind == CinToken::Ident) return IntExpr::sym(next().text);
    expect("(");
    IntExpr inner = iexpr();
    expect(")");
    return IntExpr::paren(inner);
  }

  std::vector<CinToken> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses CIN text. Throws CinSyntaxError (with location) on malformed input
/// and CinUnboundVariable when an access uses an index nothing binds.
inline CinStmt parse_cin(const std::string& text) {
  CinStmt c = detail::CinParser(text).parse();
  for (const auto& e : check_invariants(c))
    if (e.find("is not bound") != std::string::npos) throw CinUnboundVariable(e);
  return c;
}

/// Parses an integer expression such as "(p*g/(N/c))".
inline IntExpr parse_int_expr(const std::string& text) { return detail::CinParser(text).parse_int(); }

inline std::string normalize_cin_text(const std::string& text) {
  std::string out;
  for (const auto& t : detail::tokenize_cin(text)) {
    if (t.kind == detail::CinToken::End) break;
    out += t.text == "and" ? " and " : t.text;
  }
  return out;
}

}  // namespace sgap

#endif  // SGAP_CIN_PARSER_HPP
