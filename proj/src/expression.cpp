#include "cogmove/expression.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

namespace cogmove {

struct Expression::Node {
  enum class Op {
    Number, VarX, VarT, ConstPi, ConstE,
    Neg, Sin, Cos, Exp, Log, Abs, Sqrt,
    Add, Sub, Mul, Div, Pow,
    Gauss, TopHat,
  };
  Op op;
  double value = 0.0;
  NodePtr a;
  NodePtr b;
};

namespace {

using Node = Expression::Node;
using Op = Node::Op;
using NodePtr = Expression::NodePtr;

NodePtr make_node(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double value = 0.0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->value = value;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

double eval_node(const Node& n, double x, double t) {
  switch (n.op) {
    case Op::Number: return n.value;
    case Op::VarX: return x;
    case Op::VarT: return t;
    case Op::ConstPi: return pi;
    case Op::ConstE: return std::exp(1.0);
    case Op::Neg: return -eval_node(*n.a, x, t);
    case Op::Sin: return std::sin(eval_node(*n.a, x, t));
    case Op::Cos: return std::cos(eval_node(*n.a, x, t));
    case Op::Exp: return std::exp(eval_node(*n.a, x, t));
    case Op::Log: return std::log(eval_node(*n.a, x, t));
    case Op::Abs: return std::abs(eval_node(*n.a, x, t));
    case Op::Sqrt: return std::sqrt(eval_node(*n.a, x, t));
    case Op::Add: return eval_node(*n.a, x, t) + eval_node(*n.b, x, t);
    case Op::Sub: return eval_node(*n.a, x, t) - eval_node(*n.b, x, t);
    case Op::Mul: return eval_node(*n.a, x, t) * eval_node(*n.b, x, t);
    case Op::Div: return eval_node(*n.a, x, t) / eval_node(*n.b, x, t);
    case Op::Pow: return std::pow(eval_node(*n.a, x, t), eval_node(*n.b, x, t));
    case Op::Gauss: {
      const double c = eval_node(*n.a, x, t);
      const double w = eval_node(*n.b, x, t);
      const double z = (x - c) / w;
      return std::exp(-0.5 * z * z) / (w * std::sqrt(2.0 * pi));
    }
    case Op::TopHat: {
      const double c = eval_node(*n.a, x, t);
      const double h = eval_node(*n.b, x, t);
      return std::abs(x - c) <= h ? 1.0 / (2.0 * h) : 0.0;
    }
  }
  return 0.0;
}

bool node_depends_on_t(const Node& n) {
  if (n.op == Op::VarT) return true;
  if (n.a && node_depends_on_t(*n.a)) return true;
  if (n.b && node_depends_on_t(*n.b)) return true;
  // gauss/tophat evaluate at x but their arguments may reference t
  return false;
}

bool node_equal(const Node& lhs, const Node& rhs) {
  if (lhs.op != rhs.op) return false;
  if (lhs.op == Op::Number) {
    // bitwise comparison so that -0.0 and 0.0 round-trip distinguishably
    return lhs.value == rhs.value && std::signbit(lhs.value) == std::signbit(rhs.value);
  }
  if (static_cast<bool>(lhs.a) != static_cast<bool>(rhs.a)) return false;
  if (static_cast<bool>(lhs.b) != static_cast<bool>(rhs.b)) return false;
  if (lhs.a && !node_equal(*lhs.a, *rhs.a)) return false;
  if (lhs.b && !node_equal(*lhs.b, *rhs.b)) return false;
  return true;
}

std::string format_number(double v) {
  std::array<char, 40> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

// Precedence levels used by both the parser and the printer.
// 1: + -   2: * /   3: unary -   4: ^   5: atoms
int node_precedence(const Node& n) {
  switch (n.op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

void print_node(const Node& n, std::string& out);

void print_child(const Node& child, int parent_prec, bool needs_paren_at_equal,
                 std::string& out) {
  const int prec = node_precedence(child);
  const bool paren = prec < parent_prec || (prec == parent_prec && needs_paren_at_equal);
  if (paren) out += '(';
  print_node(child, out);
  if (paren) out += ')';
}

void print_node(const Node& n, std::string& out) {
  switch (n.op) {
    case Op::Number: out += format_number(n.value); return;
    case Op::VarX: out += 'x'; return;
    case Op::VarT: out += 't'; return;
    case Op::ConstPi: out += "pi"; return;
    case Op::ConstE: out += 'e'; return;
    case Op::Neg:
      out += '-';
      // -x^2 must reprint as -x^2, not (-x)^2, so ^ stays unparenthesized
      print_child(*n.a, 3, false, out);
      return;
    case Op::Sin: out += "sin("; print_node(*n.a, out); out += ')'; return;
    case Op::Cos: out += "cos("; print_node(*n.a, out); out += ')'; return;
    case Op::Exp: out += "exp("; print_node(*n.a, out); out += ')'; return;
    case Op::Log: out += "log("; print_node(*n.a, out); out += ')'; return;
    case Op::Abs: out += "abs("; print_node(*n.a, out); out += ')'; return;
    case Op::Sqrt: out += "sqrt("; print_node(*n.a, out); out += ')'; return;
    case Op::Add:
      print_child(*n.a, 1, false, out);
      out += '+';
      print_child(*n.b, 1, true, out);
      return;
    case Op::Sub:
      print_child(*n.a, 1, false, out);
      out += '-';
      print_child(*n.b, 1, true, out);
      return;
    case Op::Mul:
      print_child(*n.a, 2, false, out);
      out += '*';
      print_child(*n.b, 2, true, out);
      return;
    case Op::Div:
      print_child(*n.a, 2, false, out);
      out += '/';
      print_child(*n.b, 2, true, out);
      return;
    case Op::Pow:
      // right associative; left operand at equal precedence needs parens
      print_child(*n.a, 4, true, out);
      out += '^';
      print_child(*n.b, 4, false, out);
      return;
    case Op::Gauss:
      out += "gauss(";
      print_node(*n.a, out);
      out += ',';
      print_node(*n.b, out);
      out += ')';
      return;
    case Op::TopHat:
      out += "tophat(";
      print_node(*n.a, out);
      out += ',';
      print_node(*n.b, out);
      out += ')';
      return;
  }
}

struct Token {
  enum class Kind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };
  Kind kind;
  double number = 0.0;
  std::string ident;
  std::size_t offset = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space();
    Token tok;
    tok.offset = pos_;
    if (pos_ >= text_.size()) {
      tok.kind = Token::Kind::End;
      return tok;
    }
    const char c = text_[pos_];
    switch (c) {
      case '+': ++pos_; tok.kind = Token::Kind::Plus; return tok;
      case '-': ++pos_; tok.kind = Token::Kind::Minus; return tok;
      case '*': ++pos_; tok.kind = Token::Kind::Star; return tok;
      case '/': ++pos_; tok.kind = Token::Kind::Slash; return tok;
      case '^': ++pos_; tok.kind = Token::Kind::Caret; return tok;
      case '(': ++pos_; tok.kind = Token::Kind::LParen; return tok;
      case ')': ++pos_; tok.kind = Token::Kind::RParen; return tok;
      case ',': ++pos_; tok.kind = Token::Kind::Comma; return tok;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = text_.data() + pos_;
      char* end = nullptr;
      tok.number = std::strtod(begin, &end);
      if (end == begin) {
        throw ExpressionError("malformed number at offset " + std::to_string(pos_), pos_);
      }
      pos_ += static_cast<std::size_t>(end - begin);
      tok.kind = Token::Kind::Number;
      return tok;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      tok.kind = Token::Kind::Ident;
      tok.ident = std::string(text_.substr(start, pos_ - start));
      return tok;
    }
    throw ExpressionError(
        "unexpected character '" + std::string(1, c) + "' at offset " + std::to_string(pos_),
        pos_);
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1,
                         diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

const char* suggest_identifier(std::string_view name) {
  static constexpr std::array<const char*, 12> known = {
      "x", "t", "pi", "e", "sin", "cos", "exp", "log", "abs", "sqrt", "gauss", "tophat"};
  const char* best = nullptr;
  std::size_t best_dist = 3;  // only suggest when reasonably close
  for (const char* k : known) {
    const std::size_t d = edit_distance(name, k);
    if (d < best_dist) {
      best_dist = d;
      best = k;
    }
  }
  return best;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { advance(); }

  NodePtr parse() {
    NodePtr root = parse_sum();
    if (current_.kind != Token::Kind::End) {
      throw ExpressionError("unexpected token at offset " + std::to_string(current_.offset),
                            current_.offset);
    }
    return root;
  }

 private:
  void advance() { current_ = lexer_.next(); }

  NodePtr parse_sum() {
    NodePtr lhs = parse_term();
    while (current_.kind == Token::Kind::Plus || current_.kind == Token::Kind::Minus) {
      const Op op = current_.kind == Token::Kind::Plus ? Op::Add : Op::Sub;
      advance();
      lhs = make_node(op, lhs, parse_term());
    }
    return lhs;
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    while (current_.kind == Token::Kind::Star || current_.kind == Token::Kind::Slash) {
      const Op op = current_.kind == Token::Kind::Star ? Op::Mul : Op::Div;
      advance();
      lhs = make_node(op, lhs, parse_unary());
    }
    return lhs;
  }

  NodePtr parse_unary() {
    if (current_.kind == Token::Kind::Minus) {
      advance();
      return make_node(Op::Neg, parse_unary());
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (current_.kind == Token::Kind::Caret) {
      advance();
      // exponent may itself carry a unary minus: 2^-3
      return make_node(Op::Pow, base, parse_unary());
    }
    return base;
  }

  NodePtr parse_primary() {
    const Token tok = current_;
    switch (tok.kind) {
      case Token::Kind::Number:
        advance();
        return make_node(Op::Number, nullptr, nullptr, tok.number);
      case Token::Kind::LParen: {
        advance();
        NodePtr inner = parse_sum();
        expect(Token::Kind::RParen, "expected ')'");
        return inner;
      }
      case Token::Kind::Ident:
        advance();
        return parse_identifier(tok);
      default:
        throw ExpressionError("syntax error at offset " + std::to_string(tok.offset), tok.offset);
    }
  }

  NodePtr parse_identifier(const Token& tok) {
    const std::string& name = tok.ident;
    if (name == "x") return make_node(Op::VarX);
    if (name == "t") return make_node(Op::VarT);
    if (name == "pi") return make_node(Op::ConstPi);
    if (name == "e") return make_node(Op::ConstE);

    Op op;
    int arity = 1;
    if (name == "sin") op = Op::Sin;
    else if (name == "cos") op = Op::Cos;
    else if (name == "exp") op = Op::Exp;
    else if (name == "log") op = Op::Log;
    else if (name == "abs") op = Op::Abs;
    else if (name == "sqrt") op = Op::Sqrt;
    else if (name == "gauss") { op = Op::Gauss; arity = 2; }
    else if (name == "tophat") { op = Op::TopHat; arity = 2; }
    else {
      std::string msg = "unknown identifier '" + name + "' at offset " + std::to_string(tok.offset);
      if (const char* hint = suggest_identifier(name)) {
        msg += " (did you mean '" + std::string(hint) + "'?)";
      }
      throw ExpressionError(msg, tok.offset);
    }

    expect(Token::Kind::LParen, "expected '(' after '" + name + "'");
    NodePtr first = parse_sum();
    NodePtr second;
    if (arity == 2) {
      expect(Token::Kind::Comma, "expected ',' in '" + name + "(...)'");
      second = parse_sum();
    }
    expect(Token::Kind::RParen, "expected ')'");
    return make_node(op, first, second);
  }

  void expect(Token::Kind kind, const std::string& what) {
    if (current_.kind != kind) {
      throw ExpressionError(what + " at offset " + std::to_string(current_.offset),
                            current_.offset);
    }
    advance();
  }

  Lexer lexer_;
  Token current_;
};

}  // namespace

double Expression::eval(double x, double t) const {
  if (!root_) throw ConfigError("evaluating an empty expression");
  return eval_node(*root_, x, t);
}

bool Expression::depends_on_t() const { return root_ && node_depends_on_t(*root_); }

std::string Expression::pretty_print() const {
  if (!root_) return "";
  std::string out;
  print_node(*root_, out);
  return out;
}

bool Expression::operator==(const Expression& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return node_equal(*root_, *other.root_);
}

Expression parse_expression(std::string_view text) {
  Parser parser(text);
  Expression expr(parser.parse());
  expr.set_source(std::string(text));
  return expr;
}

Expression constant_expression(double value) {
  Expression expr(make_node(Op::Number, nullptr, nullptr, value));
  expr.set_source(format_number(value));
  return expr;
}

}  // namespace cogmove
