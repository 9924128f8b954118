#pragma once

// Pushdown predicate language: one comparison per invocation, each side an
// operand or a single binary arithmetic expression.
//
//   cmp     := arith CMPOP arith
//   arith   := operand (ARITHOP operand)?
//   operand := IDENT | NUMBER | '?' IDENT
//
// Operand types are inferred from literals. int32 widens to int64; mixing
// integer and float operands is a type error. Attributes and parameters take
// the unified type of the predicate (int32 when it has no literal).

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rpusim/error.hpp"

namespace rpusim {

enum class OpKind {
  compare_lt,
  compare_le,
  compare_eq,
  compare_ne,
  compare_ge,
  compare_gt,
  arith_add,
  arith_sub,
  arith_mul,
};

enum class OperandType { int32, int64, float32 };

inline constexpr std::array<std::pair<OpKind, std::string_view>, 9> kOpKindNames{{
    {OpKind::compare_lt, "compare_lt"},
    {OpKind::compare_le, "compare_le"},
    {OpKind::compare_eq, "compare_eq"},
    {OpKind::compare_ne, "compare_ne"},
    {OpKind::compare_ge, "compare_ge"},
    {OpKind::compare_gt, "compare_gt"},
    {OpKind::arith_add, "arith_add"},
    {OpKind::arith_sub, "arith_sub"},
    {OpKind::arith_mul, "arith_mul"},
}};

inline std::string_view to_string(OpKind k) {
  for (const auto& [kind, name] : kOpKindNames)
    if (kind == k) return name;
  return "?";
}

inline std::optional<OpKind> op_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kOpKindNames)
    if (name == s) return kind;
  return std::nullopt;
}

inline std::string_view to_string(OperandType t) {
  switch (t) {
    case OperandType::int32: return "int32";
    case OperandType::int64: return "int64";
    case OperandType::float32: return "float";
  }
  return "?";
}

inline std::optional<OperandType> operand_type_from_string(std::string_view s) {
  if (s == "int32") return OperandType::int32;
  if (s == "int64") return OperandType::int64;
  if (s == "float") return OperandType::float32;
  return std::nullopt;
}

inline bool is_comparison(OpKind k) { return k <= OpKind::compare_gt; }

inline std::string_view symbol(OpKind k) {
  switch (k) {
    case OpKind::compare_lt: return "<";
    case OpKind::compare_le: return "<=";
    case OpKind::compare_eq: return "=";
    case OpKind::compare_ne: return "!=";
    case OpKind::compare_ge: return ">=";
    case OpKind::compare_gt: return ">";
    case OpKind::arith_add: return "+";
    case OpKind::arith_sub: return "-";
    case OpKind::arith_mul: return "*";
  }
  return "?";
}

/// One hardware operator: what it computes and on which type.
struct OperatorShape {
  OpKind kind;
  OperandType operand_type;

  auto operator<=>(const OperatorShape&) const = default;
};

// ---------------------------------------------------------------------------
// AST

struct Attribute {
  std::string name;
  OperandType type = OperandType::int32;
  bool operator==(const Attribute&) const = default;
};

struct Literal {
  std::variant<std::int64_t, double> value;
  OperandType type = OperandType::int32;
  bool operator==(const Literal&) const = default;
};

struct Parameter {
  std::string name;
  OperandType type = OperandType::int32;
  bool operator==(const Parameter&) const = default;
};

using Operand = std::variant<Attribute, Literal, Parameter>;

struct Arithmetic {
  OpKind op = OpKind::arith_add;
  Operand lhs;
  Operand rhs;
  OperandType type = OperandType::int32;
  bool operator==(const Arithmetic&) const = default;
};

using Term = std::variant<Operand, Arithmetic>;

/// Root comparison node. Comparisons can only appear here.
struct PredicateAst {
  OpKind op = OpKind::compare_eq;
  Term lhs;
  Term rhs;
  OperandType type = OperandType::int32;
  bool operator==(const PredicateAst&) const = default;
};

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline std::string format_float(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), end);
  // Keep the literal recognisable as float when re-parsed.
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

inline std::string print_operand(const Operand& o) {
  struct {
    std::string operator()(const Attribute& a) const { return a.name; }
    std::string operator()(const Parameter& p) const { return "?" + p.name; }
    std::string operator()(const Literal& l) const {
      if (const auto* i = std::get_if<std::int64_t>(&l.value)) return std::to_string(*i);
      return format_float(std::get<double>(l.value));
    }
  } v;
  return std::visit(v, o);
}

inline std::string print_term(const Term& t) {
  if (const auto* o = std::get_if<Operand>(&t)) return print_operand(*o);
  const auto& a = std::get<Arithmetic>(t);
  return print_operand(a.lhs) + " " + std::string(symbol(a.op)) + " " + print_operand(a.rhs);
}

}  // namespace detail

inline std::string print_predicate(const PredicateAst& p) {
  return detail::print_term(p.lhs) + " " + std::string(symbol(p.op)) + " " +
         detail::print_term(p.rhs);
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

enum class Tok { ident, number, param, cmp, arith, end };

struct Token {
  Tok kind;
  std::string text;
  std::size_t column;  // 1-based
};

inline std::string describe(const Token& t) {
  return t.kind == Tok::end ? "end of input" : "'" + t.text + "'";
}

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  auto error = [&](std::size_t pos, const std::string& msg) {
    return ParseError("syntax error at column " + std::to_string(pos + 1) + ": " + msg);
  };

  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_ident_start(c)) {
      while (i < src.size() && is_ident_char(src[i])) ++i;
      out.push_back({Tok::ident, std::string(src.substr(start, i - start)), start + 1});
    } else if (is_digit(c)) {
      while (i < src.size() && is_digit(src[i])) ++i;
      if (i < src.size() && src[i] == '.') {
        ++i;
        if (i >= src.size() || !is_digit(src[i])) throw error(i, "expected digit after '.'");
        while (i < src.size() && is_digit(src[i])) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        ++i;
        if (i < src.size() && (src[i] == '+' || src[i] == '-')) ++i;
        if (i >= src.size() || !is_digit(src[i])) throw error(i, "expected exponent digits");
        while (i < src.size() && is_digit(src[i])) ++i;
      }
      out.push_back({Tok::number, std::string(src.substr(start, i - start)), start + 1});
    } else if (c == '?') {
      ++i;
      if (i >= src.size() || !is_ident_start(src[i]))
        throw error(i, "expected parameter name after '?'");
      while (i < src.size() && is_ident_char(src[i])) ++i;
      out.push_back({Tok::param, std::string(src.substr(start + 1, i - start - 1)), start + 1});
    } else if (c == '<' || c == '>' || c == '!') {
      ++i;
      if (i < src.size() && src[i] == '=') ++i;
      std::string text(src.substr(start, i - start));
      if (text == "!") throw error(start, "expected '!='");
      out.push_back({Tok::cmp, std::move(text), start + 1});
    } else if (c == '=') {
      ++i;
      out.push_back({Tok::cmp, "=", start + 1});
    } else if (c == '+' || c == '-' || c == '*') {
      ++i;
      out.push_back({Tok::arith, std::string(1, c), start + 1});
    } else {
      throw error(start, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::end, "", src.size() + 1});
  return out;
}

inline OpKind cmp_kind(const std::string& s) {
  if (s == "<") return OpKind::compare_lt;
  if (s == "<=") return OpKind::compare_le;
  if (s == "=") return OpKind::compare_eq;
  if (s == "!=") return OpKind::compare_ne;
  if (s == ">=") return OpKind::compare_ge;
  return OpKind::compare_gt;
}

inline OpKind arith_kind(const std::string& s) {
  if (s == "+") return OpKind::arith_add;
  if (s == "-") return OpKind::arith_sub;
  return OpKind::arith_mul;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  PredicateAst parse() {
    PredicateAst p;
    p.lhs = term();
    const Token& op = peek();
    if (op.kind != Tok::cmp) fail(op, "comparison operator");
    p.op = cmp_kind(op.text);
    ++pos_;
    p.rhs = term();
    if (peek().kind != Tok::end) fail(peek(), "end of input");
    return p;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }

  [[noreturn]] void fail(const Token& t, const std::string& expected) const {
    throw ParseError("syntax error at column " + std::to_string(t.column) + ": expected " +
                     expected + ", found " + describe(t));
  }

  Term term() {
    Operand lhs = operand();
    if (peek().kind != Tok::arith) return lhs;
    const OpKind op = arith_kind(peek().text);
    ++pos_;
    Operand rhs = operand();
    return Arithmetic{op, std::move(lhs), std::move(rhs), OperandType::int32};
  }

  Operand operand() {
    const Token& t = peek();
    bool negative = false;
    if (t.kind == Tok::arith && t.text == "-" && toks_[pos_ + 1].kind == Tok::number &&
        toks_[pos_ + 1].column == t.column + 1) {
      negative = true;
      ++pos_;
    }
    const Token& cur = peek();
    switch (cur.kind) {
      case Tok::ident:
        ++pos_;
        return Attribute{cur.text, OperandType::int32};
      case Tok::param:
        ++pos_;
        return Parameter{cur.text, OperandType::int32};
      case Tok::number: {
        ++pos_;
        return number(cur, negative);
      }
      default:
        fail(cur, "operand (identifier, number or ?parameter)");
    }
  }

  Literal number(const Token& t, bool negative) const {
    const std::string text = (negative ? "-" : "") + t.text;
    const bool is_float = t.text.find_first_of(".eE") != std::string::npos;
    if (is_float) {
      double v = 0;
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || !std::isfinite(v))
        throw ParseError("syntax error at column " + std::to_string(t.column) +
                         ": float literal out of range");
      return Literal{v, OperandType::float32};
    }
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{})
      throw ParseError("syntax error at column " + std::to_string(t.column) +
                       ": integer literal out of range");
    const bool fits32 = v >= std::numeric_limits<std::int32_t>::min() &&
                        v <= std::numeric_limits<std::int32_t>::max();
    return Literal{v, fits32 ? OperandType::int32 : OperandType::int64};
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

inline std::optional<OperandType> declared_type(const Operand& o) {
  if (const auto* l = std::get_if<Literal>(&o)) return l->type;
  return std::nullopt;
}

inline void set_type(Operand& o, OperandType t) {
  std::visit(
      [t](auto& x) {
        using X = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<X, Literal>) {
          // Integer literals widen; the stored value stays integral.
          if (x.type != OperandType::float32) x.type = t;
        } else {
          x.type = t;
        }
      },
      o);
}

template <typename F>
void for_each_operand(PredicateAst& p, F&& f) {
  for (Term* t : {&p.lhs, &p.rhs}) {
    if (auto* o = std::get_if<Operand>(t)) {
      f(*o);
    } else {
      auto& a = std::get<Arithmetic>(*t);
      f(a.lhs);
      f(a.rhs);
    }
  }
}

/// Unifies every node type in `p`. Throws TypeError on int/float mixing.
inline void infer_types(PredicateAst& p, const std::string& text) {
  std::optional<OperandType> unified;
  for_each_operand(p, [&](Operand& o) {
    auto t = declared_type(o);
    if (!t) return;
    if (!unified) {
      unified = t;
    } else if (*unified != *t) {
      const bool a_float = *unified == OperandType::float32;
      const bool b_float = *t == OperandType::float32;
      if (a_float != b_float)
        throw TypeError("type error in '" + text + "': mixed " + std::string(to_string(*unified)) +
                        " and " + std::string(to_string(*t)) + " operands");
      unified = OperandType::int64;
    }
  });
  const OperandType type = unified.value_or(OperandType::int32);
  for_each_operand(p, [&](Operand& o) { set_type(o, type); });
  for (Term* t : {&p.lhs, &p.rhs})
    if (auto* a = std::get_if<Arithmetic>(t)) a->type = type;
  p.type = type;
}

}  // namespace detail

/// Parses a predicate string. Errors carry 1-based column positions.
inline PredicateAst parse_predicate(std::string_view text) {
  detail::Parser parser(detail::tokenize(text));
  PredicateAst p = parser.parse();
  detail::infer_types(p, std::string(text));
  return p;
}

/// Every operator shape the predicate needs from the hardware.
inline std::set<OperatorShape> required_shapes(const PredicateAst& p) {
  std::set<OperatorShape> out{{p.op, p.type}};
  for (const Term* t : {&p.lhs, &p.rhs})
    if (const auto* a = std::get_if<Arithmetic>(t)) out.insert({a->op, a->type});
  return out;
}

}  // namespace rpusim
