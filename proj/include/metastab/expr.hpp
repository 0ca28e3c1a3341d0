#pragma once

// Potential expressions: parsing, unparsing and exact evaluation of value,
// gradient and Hessian by forward-mode jet propagation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace metastab::expr {

inline constexpr int kMaxDim = 2;

/// Raised for malformed input; carries the byte offset of the problem.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Raised when an admitted expression is evaluated outside its natural domain
/// (log of a non-positive number, division by zero, ...).
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, std::string subexpr)
      : std::runtime_error(what + " in '" + subexpr + "'"), subexpr_(std::move(subexpr)) {}
  const std::string& subexpression() const { return subexpr_; }

 private:
  std::string subexpr_;
};

enum class Op : std::uint8_t {
  constant,
  variable,
  add,
  sub,
  mul,
  div,
  pow,
  neg,
  exp,
  log,
  sin,
  cos,
  sqrt,
  tanh,
};

int arity(Op op);
const char* op_name(Op op);

/// One AST node. Nodes live in a flat vector in post-order: every child index
/// is smaller than its parent's, so a single forward sweep evaluates the tree.
struct Node {
  Op op = Op::constant;
  double value = 0.0;  // constant payload
  int var = -1;        // variable index (0 = x, 1 = y)
  std::array<std::int32_t, 2> kids{-1, -1};
};

/// A point in model coordinates, dimension 1 or 2.
struct EvalPoint {
  std::array<double, kMaxDim> c{0.0, 0.0};
  int dim = 1;

  EvalPoint() = default;
  explicit EvalPoint(double x) : c{x, 0.0}, dim(1) {}
  EvalPoint(double x, double y) : c{x, y}, dim(2) {}

  double operator[](int i) const { return c[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
};

using Vec = std::array<double, kMaxDim>;
using Mat = std::array<std::array<double, kMaxDim>, kMaxDim>;

/// Value, gradient and Hessian at one point. Entries past `dim` are zero.
struct Jet {
  double value = 0.0;
  Vec grad{0.0, 0.0};
  Mat hess{};
  int dim = 1;
};

class ExpressionTree {
 public:
  ExpressionTree() = default;
  ExpressionTree(std::vector<Node> nodes, int dim, std::string source);

  int dimension() const { return dim_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::int32_t root() const { return static_cast<std::int32_t>(nodes_.size()) - 1; }
  const std::string& source() const { return source_; }

  std::size_t depth() const;
  std::set<int> free_variables() const;

  /// Fully parenthesised canonical text; parsing it yields a structurally
  /// identical tree.
  std::string unparse() const;
  std::string unparse(std::int32_t node) const;

  double evaluate(const EvalPoint& p) const;
  Vec gradient(const EvalPoint& p) const;
  Mat hessian(const EvalPoint& p) const;
  /// Value, gradient and Hessian from one second-order jet pass.
  Jet jet(const EvalPoint& p) const;
  /// Value and gradient from one first-order pass (cheaper than jet()).
  double value_and_gradient(const EvalPoint& p, Vec& grad) const;

  friend bool structurally_equal(const ExpressionTree& a, const ExpressionTree& b);

 private:
  void check_point(const EvalPoint& p) const;

  std::vector<Node> nodes_;
  std::vector<char> const_exp_;  // pow nodes whose exponent has no variable
  int dim_ = 1;
  std::string source_;
};

bool structurally_equal(const ExpressionTree& a, const ExpressionTree& b);

/// Parses `src` as a potential in `dim` variables (x, or x and y).
///
/// Grammar (whitespace ignored):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | '+' unary | power
///   power   := primary ('^' unary)?          right-associative
///   primary := number | 'x' | 'y' | 'pi' | func '(' expr ')' | '(' expr ')'
///   func    := exp | log | sin | cos | sqrt | tanh
///
/// `-x^2` therefore reads as `-(x^2)`, and `2^-x` as `2^(-x)`.
ExpressionTree parse_potential(std::string_view src, int dim);

}  // namespace metastab::expr
