#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "cogmove/common.hpp"

namespace cogmove {

// Landscape expression language: arithmetic over x and t plus a handful of
// shape primitives. gauss(c, w) is the unit-mass Gaussian bump
// exp(-(x-c)^2 / (2 w^2)) / (w sqrt(2 pi)); tophat(c, h) is the matching
// uniform bump 1/(2h) on |x - c| <= h.
class Expression {
 public:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;

  Expression() = default;
  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  bool valid() const { return root_ != nullptr; }
  double eval(double x, double t) const;
  bool depends_on_t() const;
  std::string pretty_print() const;
  std::string source() const { return source_; }
  void set_source(std::string s) { source_ = std::move(s); }

  bool operator==(const Expression& other) const;

  const NodePtr& root() const { return root_; }

 private:
  NodePtr root_;
  std::string source_;
};

// Thrown on malformed input; carries the 0-based byte offset of the problem.
class ExpressionError : public ConfigError {
 public:
  ExpressionError(const std::string& msg, std::size_t offset)
      : ConfigError(msg), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Precedence: ^ binds tightest, then unary minus, then * /, then + -.
// + - * / associate left, ^ associates right.
Expression parse_expression(std::string_view text);

// Constant helper for programmatic defaults.
Expression constant_expression(double value);

}  // namespace cogmove
