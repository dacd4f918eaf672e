#ifndef ALPHALAB_ALPHA_HPP
#define ALPHALAB_ALPHA_HPP

// Formulaic-alpha expressions: AST, parser, renderer and evaluator.
//
// Grammar (whitespace between tokens is ignored):
//
//   expr    = term , { ( "+" | "-" ) , term } ;
//   term    = unary , { ( "*" | "/" ) , unary } ;
//   unary   = "-" , unary | primary ;
//   primary = number
//           | identifier                 (* canonical id, e.g. ROE *)
//           | "[" , display-name , "]"   (* e.g. [P/E] *)
//           | "log" , "(" , expr , ")"   (* natural log *)
//           | "(" , expr , ")" ;
//   number  = digit , { digit } , [ "." , { digit } ] , [ exponent ]
//           | "." , digit , { digit } , [ exponent ] ;
//
// Binary operators are left-associative.

#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "alphalab/cross_section.hpp"
#include "alphalab/error.hpp"
#include "alphalab/signals.hpp"
#include "alphalab/text.hpp"

namespace alphalab {

enum class ExprKind { Const, Signal, Neg, Add, Sub, Mul, Div, Log };

/// Immutable expression tree. Copies share nodes.
class AlphaExpr {
 public:
  static AlphaExpr constant(double v) { return AlphaExpr(make(ExprKind::Const, v, {}, {}, {})); }
  static AlphaExpr signal(std::string id) {
    return AlphaExpr(make(ExprKind::Signal, 0.0, std::move(id), {}, {}));
  }
  static AlphaExpr neg(AlphaExpr e) { return unary(ExprKind::Neg, std::move(e)); }
  static AlphaExpr log(AlphaExpr e) { return unary(ExprKind::Log, std::move(e)); }
  static AlphaExpr add(AlphaExpr l, AlphaExpr r) { return binary(ExprKind::Add, std::move(l), std::move(r)); }
  static AlphaExpr sub(AlphaExpr l, AlphaExpr r) { return binary(ExprKind::Sub, std::move(l), std::move(r)); }
  static AlphaExpr mul(AlphaExpr l, AlphaExpr r) { return binary(ExprKind::Mul, std::move(l), std::move(r)); }
  static AlphaExpr div(AlphaExpr l, AlphaExpr r) { return binary(ExprKind::Div, std::move(l), std::move(r)); }

  ExprKind kind() const noexcept { return node_->kind; }
  double value() const noexcept { return node_->value; }
  const std::string& signal_id() const noexcept { return node_->signal; }
  /// Operand of a unary node, or left operand of a binary one.
  const AlphaExpr& lhs() const { return *node_->lhs; }
  const AlphaExpr& rhs() const { return *node_->rhs; }

  bool is_binary() const noexcept {
    const auto k = kind();
    return k == ExprKind::Add || k == ExprKind::Sub || k == ExprKind::Mul || k == ExprKind::Div;
  }
  bool is_unary() const noexcept { return kind() == ExprKind::Neg || kind() == ExprKind::Log; }

  /// Structural equality.
  friend bool operator==(const AlphaExpr& a, const AlphaExpr& b) {
    if (a.node_ == b.node_) return true;
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
      case ExprKind::Const: return a.value() == b.value();
      case ExprKind::Signal: return a.signal_id() == b.signal_id();
      case ExprKind::Neg:
      case ExprKind::Log: return a.lhs() == b.lhs();
      default: return a.lhs() == b.lhs() && a.rhs() == b.rhs();
    }
  }

  std::size_t depth() const {
    if (is_binary()) return 1 + std::max(lhs().depth(), rhs().depth());
    if (is_unary()) return 1 + lhs().depth();
    return 1;
  }

 private:
  struct Node {
    ExprKind kind;
    double value;
    std::string signal;
    std::shared_ptr<const AlphaExpr> lhs;
    std::shared_ptr<const AlphaExpr> rhs;
  };

  explicit AlphaExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static std::shared_ptr<const Node> make(ExprKind k, double v, std::string s,
                                          std::shared_ptr<const AlphaExpr> l,
                                          std::shared_ptr<const AlphaExpr> r) {
    return std::make_shared<const Node>(Node{k, v, std::move(s), std::move(l), std::move(r)});
  }
  static AlphaExpr unary(ExprKind k, AlphaExpr e) {
    return AlphaExpr(make(k, 0.0, {}, std::make_shared<const AlphaExpr>(std::move(e)), {}));
  }
  static AlphaExpr binary(ExprKind k, AlphaExpr l, AlphaExpr r) {
    return AlphaExpr(make(k, 0.0, {}, std::make_shared<const AlphaExpr>(std::move(l)),
                          std::make_shared<const AlphaExpr>(std::move(r))));
  }

  std::shared_ptr<const Node> node_;
};

/// Canonical ids referenced by `e`, sorted.
inline std::set<std::string> referenced_signals(const AlphaExpr& e) {
  std::set<std::string> out;
  std::function<void(const AlphaExpr&)> walk = [&](const AlphaExpr& x) {
    if (x.kind() == ExprKind::Signal) out.insert(x.signal_id());
    if (x.is_unary() || x.is_binary()) walk(x.lhs());
    if (x.is_binary()) walk(x.rhs());
  };
  walk(e);
  return out;
}

namespace detail {

class AlphaParser {
 public:
  AlphaParser(std::string_view text, const AliasTable& aliases)
      : text_(text), aliases_(aliases) {}

  AlphaExpr parse() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError(pos_, "empty formula");
    auto e = expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError(pos_, std::string("unexpected '") + text_[pos_] + "'");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ == text_.size())
        throw ParseError(pos_, std::string("expected '") + c + "' but reached end of input");
      throw ParseError(pos_, std::string("expected '") + c + "', found '" + text_[pos_] + "'");
    }
  }

  AlphaExpr expr() {
    auto lhs = term();
    while (true) {
      if (accept('+')) lhs = AlphaExpr::add(std::move(lhs), term());
      else if (accept('-')) lhs = AlphaExpr::sub(std::move(lhs), term());
      else return lhs;
    }
  }

  AlphaExpr term() {
    auto lhs = unary();
    while (true) {
      if (accept('*')) lhs = AlphaExpr::mul(std::move(lhs), unary());
      else if (accept('/')) lhs = AlphaExpr::div(std::move(lhs), unary());
      else return lhs;
    }
  }

  AlphaExpr unary() {
    if (accept('-')) return AlphaExpr::neg(unary());
    return primary();
  }

  AlphaExpr primary() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError(pos_, "unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      auto e = expr();
      expect(')');
      return e;
    }
    if (c == '[') return bracketed();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    throw ParseError(pos_, std::string("unexpected '") + c + "'");
  }

  AlphaExpr number() {
    const auto start = pos_;
    auto digits = [&] {
      const auto b = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - b;
    };
    auto n = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) throw ParseError(start, "malformed number");
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const auto save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // 'e' belongs to whatever follows
    }
    const auto v = text::parse_real(text_.substr(start, pos_ - start));
    if (!v) throw ParseError(start, "number out of range");
    return AlphaExpr::constant(*v);
  }

  AlphaExpr identifier() {
    const auto start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const auto word = text_.substr(start, pos_ - start);
    if (word == "log") {
      expect('(');
      auto e = expr();
      expect(')');
      return AlphaExpr::log(std::move(e));
    }
    if (!is_canonical_signal(word)) throw UnknownSignalError(std::string(word));
    return AlphaExpr::signal(std::string(word));
  }

  AlphaExpr bracketed() {
    const auto open = pos_++;
    const auto close = text_.find(']', pos_);
    if (close == std::string_view::npos) throw ParseError(open, "unterminated '['");
    const auto name = text_.substr(pos_, close - pos_);
    pos_ = close + 1;
    auto id = aliases_.resolve(name);
    if (!id) throw UnknownSignalError(std::string(name));
    return AlphaExpr::signal(std::move(*id));
  }

  std::string_view text_;
  const AliasTable& aliases_;
  std::size_t pos_ = 0;
};

inline int precedence(const AlphaExpr& e) {
  switch (e.kind()) {
    case ExprKind::Add:
    case ExprKind::Sub: return 1;
    case ExprKind::Mul:
    case ExprKind::Div: return 2;
    default: return 3;
  }
}

inline void render_into(const AlphaExpr& e, std::string& out) {
  auto child = [&](const AlphaExpr& c, bool parens) {
    if (parens) out += '(';
    render_into(c, out);
    if (parens) out += ')';
  };
  switch (e.kind()) {
    case ExprKind::Const: out += text::format_real(e.value()); return;
    case ExprKind::Signal: out += e.signal_id(); return;
    case ExprKind::Neg:
      out += '-';
      child(e.lhs(), precedence(e.lhs()) < 3);
      return;
    case ExprKind::Log:
      out += "log(";
      render_into(e.lhs(), out);
      out += ')';
      return;
    default: break;
  }
  const char* op = e.kind() == ExprKind::Add   ? " + "
                   : e.kind() == ExprKind::Sub ? " - "
                   : e.kind() == ExprKind::Mul ? " * "
                                               : " / ";
  const int p = precedence(e);
  child(e.lhs(), precedence(e.lhs()) < p);
  out += op;
  child(e.rhs(), precedence(e.rhs()) <= p);
}

}  // namespace detail

/// Parses a formula. Throws ParseError or UnknownSignalError.
inline AlphaExpr parse_alpha(std::string_view text, const AliasTable& aliases = AliasTable{}) {
  return detail::AlphaParser(text, aliases).parse();
}

/// Minimal-parenthesis rendering; parse_alpha(render_alpha(e)) == e.
inline std::string render_alpha(const AlphaExpr& e) {
  std::string out;
  detail::render_into(e, out);
  return out;
}

/// Scalar evaluation. `lookup` returns a signal's value or nullopt. Division
/// by zero, log of a non-positive value, a missing signal value and any
/// non-finite intermediate all yield nullopt.
template <typename Lookup>
std::optional<double> evaluate(const AlphaExpr& e, const Lookup& lookup) {
  auto finite = [](double v) -> std::optional<double> {
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  };
  switch (e.kind()) {
    case ExprKind::Const: return finite(e.value());
    case ExprKind::Signal: {
      const std::optional<double> v = lookup(e.signal_id());
      return v ? finite(*v) : std::nullopt;
    }
    case ExprKind::Neg: {
      auto v = evaluate(e.lhs(), lookup);
      return v ? finite(-*v) : std::nullopt;
    }
    case ExprKind::Log: {
      auto v = evaluate(e.lhs(), lookup);
      if (!v || *v <= 0.0) return std::nullopt;
      return finite(std::log(*v));
    }
    default: break;
  }
  auto l = evaluate(e.lhs(), lookup);
  if (!l) return std::nullopt;
  auto r = evaluate(e.rhs(), lookup);
  if (!r) return std::nullopt;
  switch (e.kind()) {
    case ExprKind::Add: return finite(*l + *r);
    case ExprKind::Sub: return finite(*l - *r);
    case ExprKind::Mul: return finite(*l * *r);
    default:
      if (*r == 0.0) return std::nullopt;
      return finite(*l / *r);
  }
}

/// Column-wise evaluation over a cross-section, one entry per company.
inline std::vector<std::optional<double>> eval_alpha(const AlphaExpr& e, const CrossSection& cs) {
  std::map<std::string, Eigen::Index> index;
  for (const auto& id : referenced_signals(e)) {
    auto j = cs.column_index(id);
    if (!j) throw UnknownSignalError(id);
    index.emplace(id, static_cast<Eigen::Index>(*j));
  }
  std::vector<std::optional<double>> out(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    out[i] = evaluate(e, [&](const std::string& id) -> std::optional<double> {
      return cs.signal_matrix(row, index.at(id));
    });
  }
  return out;
}

enum class Provenance { Builtin, UserSupplied, Mined };

inline std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::Builtin: return "builtin";
    case Provenance::UserSupplied: return "user";
    default: return "mined";
  }
}

struct AlphaDef {
  std::string name;
  std::string abbreviation;
  AlphaExpr expr;
  Provenance provenance = Provenance::UserSupplied;
};

/// The six LLM-generated signals. RAPS uses a fixed beta of 2.
inline std::vector<AlphaDef> builtin_alphas() {
  auto def = [](const char* name, const char* abbr, const char* formula) {
    return AlphaDef{name, abbr, parse_alpha(formula), Provenance::Builtin};
  };
  return {
      def("Profitable Valuation Score", "PVS", "ROE / PE"),
      def("Risk-Adjusted Performance Score", "RAPS", "ROE / (PE * 2)"),
      def("Efficiency Value Composite", "EVC", "1.0 / ROA * (1.0 / EBITDA) * (1.0 / PCF)"),
      def("Valuation Efficiency Composite Score", "VEC", "(PE + ROE + FCF) / 3.0"),
      def("Profitability Leverage Factor", "PLF", "ROE * GM / PE"),
      def("Investment Quality Score", "IQS", "ROE * (1 / PE) * (1 / PB) * log(SPS)"),
  };
}

/// A labelled expression: a model regressor or correlation column.
struct Column {
  std::string label;
  AlphaExpr expr;

  static Column of_signal(const std::string& id) {
    if (!is_canonical_signal(id)) throw UnknownSignalError(id);
    return {id, AlphaExpr::signal(id)};
  }
  static Column of_alpha(const AlphaDef& def) { return {def.abbreviation, def.expr}; }
};

inline std::vector<Column> signal_columns(const std::vector<std::string>& ids) {
  std::vector<Column> out;
  for (const auto& id : ids) out.push_back(Column::of_signal(id));
  return out;
}

}  // namespace alphalab

#endif  // ALPHALAB_ALPHA_HPP
