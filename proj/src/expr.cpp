#include "metastab/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>

namespace metastab::expr {

int arity(Op op) {
  switch (op) {
    case Op::constant:
    case Op::variable:
      return 0;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow:
      return 2;
    default:
      return 1;
  }
}

const char* op_name(Op op) {
  switch (op) {
    case Op::constant: return "const";
    case Op::variable: return "var";
    case Op::add: return "+";
    case Op::sub: return "-";
    case Op::mul: return "*";
    case Op::div: return "/";
    case Op::pow: return "^";
    case Op::neg: return "neg";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::sqrt: return "sqrt";
    case Op::tanh: return "tanh";
  }
  return "?";
}

// ---------------------------------------------------------------- parsing

namespace {

struct FuncEntry {
  const char* name;
  Op op;
};
constexpr FuncEntry kFunctions[] = {
    {"exp", Op::exp}, {"log", Op::log},   {"sin", Op::sin},
    {"cos", Op::cos}, {"sqrt", Op::sqrt}, {"tanh", Op::tanh},
};
constexpr const char* kNonSmooth[] = {"abs",  "fabs", "floor", "ceil", "round", "trunc", "sign",
                                      "sgn",  "min",  "max",   "mod",  "fmod",  "step",  "heaviside",
                                      "frac", "relu"};

class Parser {
 public:
  Parser(std::string_view src, int dim) : s_(src), dim_(dim) {}

  std::vector<Node> run() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("empty expression", pos_);
    expr();
    skip_ws();
    if (pos_ < s_.size()) throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
    return std::move(nodes_);
  }

 private:
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::int32_t push(Node n) {
    nodes_.push_back(n);
    return static_cast<std::int32_t>(nodes_.size()) - 1;
  }
  std::int32_t binary(Op op, std::int32_t a, std::int32_t b) {
    Node n;
    n.op = op;
    n.kids = {a, b};
    return push(n);
  }
  std::int32_t unary_node(Op op, std::int32_t a) {
    Node n;
    n.op = op;
    n.kids = {a, -1};
    return push(n);
  }

  std::int32_t expr() {
    std::int32_t lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = binary(Op::add, lhs, term());
      } else if (accept('-')) {
        lhs = binary(Op::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  std::int32_t term() {
    std::int32_t lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(Op::mul, lhs, unary());
      } else if (accept('/')) {
        lhs = binary(Op::div, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  std::int32_t unary() {
    if (accept('-')) return unary_node(Op::neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  std::int32_t power() {
    std::int32_t base = primary();
    if (accept('^')) return binary(Op::pow, base, unary());
    return base;
  }

  std::int32_t primary() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("expected operand", pos_);
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    if (c == '(') {
      ++pos_;
      std::int32_t inner = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  std::int32_t number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t k = 0;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
        ++k;
      }
      return k;
    };
    std::size_t nd = digits();
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      nd += digits();
    }
    if (nd == 0) throw ParseError("malformed number", start);
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t save = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // leave the 'e' for the identifier path to reject
    }
    const std::string text(s_.substr(start, pos_ - start));
    Node n;
    n.op = Op::constant;
    n.value = std::strtod(text.c_str(), nullptr);
    if (!std::isfinite(n.value)) throw ParseError("number out of range", start);
    return push(n);
  }

  std::int32_t identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name(s_.substr(start, pos_ - start));
    if (name == "x" || (name == "y" && dim_ == 2)) {
      Node n;
      n.op = Op::variable;
      n.var = name == "x" ? 0 : 1;
      return push(n);
    }
    if (name == "pi") {
      Node n;
      n.op = Op::constant;
      n.value = std::numbers::pi;
      return push(n);
    }
    for (const char* bad : kNonSmooth) {
      if (name == bad) throw ParseError("non-smooth primitive '" + name + "'", start);
    }
    for (const auto& f : kFunctions) {
      if (name == f.name) {
        if (!accept('(')) throw ParseError("expected '(' after " + name, pos_);
        std::int32_t arg = expr();
        if (!accept(')')) throw ParseError("expected ')'", pos_);
        return unary_node(f.op, arg);
      }
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }

  std::string_view s_;
  int dim_;
  std::size_t pos_ = 0;
  std::vector<Node> nodes_;
};

std::string format_constant(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

namespace {
bool constant_subtree(const std::vector<Node>& nodes, std::int32_t idx);
}

ExpressionTree parse_potential(std::string_view src, int dim) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("dimension must be 1 or 2");
  Parser p(src, dim);
  return ExpressionTree(p.run(), dim, std::string(src));
}

ExpressionTree::ExpressionTree(std::vector<Node> nodes, int dim, std::string source)
    : nodes_(std::move(nodes)), dim_(dim), source_(std::move(source)) {
  if (nodes_.empty()) throw std::invalid_argument("empty expression tree");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    const int a = arity(n.op);
    for (int k = 0; k < 2; ++k) {
      const bool want = k < a;
      const bool has = n.kids[static_cast<std::size_t>(k)] >= 0;
      if (want != has || (has && n.kids[static_cast<std::size_t>(k)] >= static_cast<std::int32_t>(i)))
        throw std::invalid_argument("malformed expression node " + std::to_string(i));
    }
    if (n.op == Op::variable && (n.var < 0 || n.var >= dim_))
      throw std::invalid_argument("variable index outside declared dimension");
  }
  const_exp_.assign(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].op == Op::pow) const_exp_[i] = constant_subtree(nodes_, nodes_[i].kids[1]) ? 1 : 0;
  }
}

std::size_t ExpressionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (auto k : nodes_[i].kids)
      if (k >= 0) d[i] = std::max(d[i], d[static_cast<std::size_t>(k)] + 1);
  }
  return d.back();
}

std::set<int> ExpressionTree::free_variables() const {
  std::set<int> out;
  for (const Node& n : nodes_)
    if (n.op == Op::variable) out.insert(n.var);
  return out;
}

std::string ExpressionTree::unparse() const { return unparse(root()); }

std::string ExpressionTree::unparse(std::int32_t idx) const {
  const Node& n = nodes_.at(static_cast<std::size_t>(idx));
  switch (n.op) {
    case Op::constant:
      return format_constant(n.value);
    case Op::variable:
      return n.var == 0 ? "x" : "y";
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow:
      return "(" + unparse(n.kids[0]) + op_name(n.op) + unparse(n.kids[1]) + ")";
    case Op::neg:
      return "(-" + unparse(n.kids[0]) + ")";
    default:
      return std::string(op_name(n.op)) + "(" + unparse(n.kids[0]) + ")";
  }
}

bool structurally_equal(const ExpressionTree& a, const ExpressionTree& b) {
  if (a.dim_ != b.dim_ || a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const Node& p = a.nodes_[i];
    const Node& q = b.nodes_[i];
    if (p.op != q.op || p.kids != q.kids) return false;
    if (p.op == Op::constant && std::memcmp(&p.value, &q.value, sizeof(double)) != 0) return false;
    if (p.op == Op::variable && p.var != q.var) return false;
  }
  return true;
}

// ------------------------------------------------------------- evaluation

namespace {

// Truncated Taylor jets in up to two variables. Order 0 is a plain double.
struct J1 {
  double v = 0.0;
  double g[2] = {0.0, 0.0};
};
struct J2 {
  double v = 0.0;
  double g[2] = {0.0, 0.0};
  double h[3] = {0.0, 0.0, 0.0};  // xx, xy, yy
};

inline double val(double a) { return a; }
inline double val(const J1& a) { return a.v; }
inline double val(const J2& a) { return a.v; }

template <class T>
T make_const(double c) {
  T t{};
  if constexpr (std::is_same_v<T, double>) {
    t = c;
  } else {
    t.v = c;
  }
  return t;
}

template <class T>
T make_var(double x, int i) {
  T t{};
  if constexpr (std::is_same_v<T, double>) {
    t = x;
  } else {
    t.v = x;
    t.g[i] = 1.0;
  }
  return t;
}

// g(u) given g, g', g'' at u.v
inline double chain(double, double f0, double, double) { return f0; }
inline J1 chain(const J1& u, double f0, double f1, double) {
  J1 r;
  r.v = f0;
  r.g[0] = f1 * u.g[0];
  r.g[1] = f1 * u.g[1];
  return r;
}
inline J2 chain(const J2& u, double f0, double f1, double f2) {
  J2 r;
  r.v = f0;
  r.g[0] = f1 * u.g[0];
  r.g[1] = f1 * u.g[1];
  r.h[0] = f1 * u.h[0] + f2 * u.g[0] * u.g[0];
  r.h[1] = f1 * u.h[1] + f2 * u.g[0] * u.g[1];
  r.h[2] = f1 * u.h[2] + f2 * u.g[1] * u.g[1];
  return r;
}

inline double add(double a, double b) { return a + b; }
template <class T>
T add(const T& a, const T& b) {
  T r = a;
  r.v += b.v;
  for (int k = 0; k < 2; ++k) r.g[k] += b.g[k];
  if constexpr (std::is_same_v<T, J2>)
    for (int k = 0; k < 3; ++k) r.h[k] += b.h[k];
  return r;
}

inline double scale(double a, double s) { return a * s; }
template <class T>
T scale(const T& a, double s) {
  T r = a;
  r.v *= s;
  for (int k = 0; k < 2; ++k) r.g[k] *= s;
  if constexpr (std::is_same_v<T, J2>)
    for (int k = 0; k < 3; ++k) r.h[k] *= s;
  return r;
}

inline double mul(double a, double b) { return a * b; }
inline J1 mul(const J1& a, const J1& b) {
  J1 r;
  r.v = a.v * b.v;
  for (int k = 0; k < 2; ++k) r.g[k] = a.g[k] * b.v + a.v * b.g[k];
  return r;
}
inline J2 mul(const J2& a, const J2& b) {
  J2 r;
  r.v = a.v * b.v;
  for (int k = 0; k < 2; ++k) r.g[k] = a.g[k] * b.v + a.v * b.g[k];
  r.h[0] = a.h[0] * b.v + a.v * b.h[0] + 2.0 * a.g[0] * b.g[0];
  r.h[1] = a.h[1] * b.v + a.v * b.h[1] + a.g[0] * b.g[1] + a.g[1] * b.g[0];
  r.h[2] = a.h[2] * b.v + a.v * b.h[2] + 2.0 * a.g[1] * b.g[1];
  return r;
}

bool is_integer(double p) { return std::isfinite(p) && p == std::nearbyint(p); }

// True if the subtree at idx contains no variable.
bool constant_subtree(const std::vector<Node>& nodes, std::int32_t idx) {
  const Node& n = nodes[static_cast<std::size_t>(idx)];
  if (n.op == Op::variable) return false;
  for (auto k : n.kids)
    if (k >= 0 && !constant_subtree(nodes, k)) return false;
  return true;
}

template <class T>
std::vector<T>& scratch() {
  thread_local std::vector<T> buf;
  return buf;
}

template <class T>
const T& run(const ExpressionTree& tree, const EvalPoint& p, const std::vector<char>& const_exp) {
  const auto& nodes = tree.nodes();
  auto& w = scratch<T>();
  w.resize(nodes.size());
  auto fail = [&](std::size_t i, const char* what) -> void {
    throw DomainError(what, tree.unparse(static_cast<std::int32_t>(i)));
  };
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    const T* a = n.kids[0] >= 0 ? &w[static_cast<std::size_t>(n.kids[0])] : nullptr;
    const T* b = n.kids[1] >= 0 ? &w[static_cast<std::size_t>(n.kids[1])] : nullptr;
    T r{};
    switch (n.op) {
      case Op::constant:
        r = make_const<T>(n.value);
        break;
      case Op::variable:
        r = make_var<T>(p[n.var], n.var);
        break;
      case Op::add:
        r = add(*a, *b);
        break;
      case Op::sub:
        r = add(*a, scale(*b, -1.0));
        break;
      case Op::neg:
        r = scale(*a, -1.0);
        break;
      case Op::mul:
        r = mul(*a, *b);
        break;
      case Op::div: {
        const double d = val(*b);
        if (d == 0.0) fail(i, "division by zero");
        r = mul(*a, chain(*b, 1.0 / d, -1.0 / (d * d), 2.0 / (d * d * d)));
        break;
      }
      case Op::pow: {
        const double u = val(*a);
        const double e = val(*b);
        if (const_exp[i]) {
          if (is_integer(e)) {
            if (u == 0.0 && e < 0.0) fail(i, "negative power of zero");
            const double f0 = std::pow(u, e);
            const double f1 = e == 0.0 ? 0.0 : e * std::pow(u, e - 1.0);
            const double f2 = (e == 0.0 || e == 1.0) ? 0.0 : e * (e - 1.0) * std::pow(u, e - 2.0);
            r = chain(*a, f0, f1, f2);
          } else {
            if (u < 0.0) fail(i, "non-integer power of a negative base");
            if (u == 0.0 && e < 2.0) fail(i, "non-smooth power at zero");
            r = chain(*a, std::pow(u, e), e * std::pow(u, e - 1.0), e * (e - 1.0) * std::pow(u, e - 2.0));
          }
        } else {
          if (u <= 0.0) fail(i, "variable exponent with non-positive base");
          const double lu = std::log(u);
          T lg = chain(*a, lu, 1.0 / u, -1.0 / (u * u));
          T prod = mul(*b, lg);
          const double ev = std::exp(val(prod));
          r = chain(prod, ev, ev, ev);
        }
        break;
      }
      case Op::exp: {
        const double ev = std::exp(val(*a));
        r = chain(*a, ev, ev, ev);
        break;
      }
      case Op::log: {
        const double u = val(*a);
        if (u <= 0.0) fail(i, "log of non-positive value");
        r = chain(*a, std::log(u), 1.0 / u, -1.0 / (u * u));
        break;
      }
      case Op::sin: {
        const double s = std::sin(val(*a)), c = std::cos(val(*a));
        r = chain(*a, s, c, -s);
        break;
      }
      case Op::cos: {
        const double s = std::sin(val(*a)), c = std::cos(val(*a));
        r = chain(*a, c, -s, -c);
        break;
      }
      case Op::sqrt: {
        const double u = val(*a);
        if (u < 0.0) fail(i, "sqrt of negative value");
        if (u == 0.0 && !std::is_same_v<T, double>) fail(i, "sqrt not differentiable at zero");
        const double s = std::sqrt(u);
        r = chain(*a, s, 0.5 / s, -0.25 / (s * u));
        break;
      }
      case Op::tanh: {
        const double t = std::tanh(val(*a));
        const double d1 = 1.0 - t * t;
        r = chain(*a, t, d1, -2.0 * t * d1);
        break;
      }
    }
    if (!std::isfinite(val(r))) fail(i, "non-finite value");
    w[i] = r;
  }
  return w.back();
}

}  // namespace


void ExpressionTree::check_point(const EvalPoint& p) const {
  if (p.dim != dim_)
    throw std::invalid_argument("evaluation point has dimension " + std::to_string(p.dim) +
                                ", expression has " + std::to_string(dim_));
}

double ExpressionTree::evaluate(const EvalPoint& p) const {
  check_point(p);
  return run<double>(*this, p, const_exp_);
}

double ExpressionTree::value_and_gradient(const EvalPoint& p, Vec& grad) const {
  check_point(p);
  const J1& r = run<J1>(*this, p, const_exp_);
  grad = {r.g[0], dim_ == 2 ? r.g[1] : 0.0};
  return r.v;
}

Vec ExpressionTree::gradient(const EvalPoint& p) const {
  Vec g{};
  value_and_gradient(p, g);
  return g;
}

Jet ExpressionTree::jet(const EvalPoint& p) const {
  check_point(p);
  const J2& r = run<J2>(*this, p, const_exp_);
  Jet out;
  out.dim = dim_;
  out.value = r.v;
  out.grad = {r.g[0], dim_ == 2 ? r.g[1] : 0.0};
  out.hess[0][0] = r.h[0];
  if (dim_ == 2) {
    out.hess[0][1] = out.hess[1][0] = r.h[1];
    out.hess[1][1] = r.h[2];
  }
  return out;
}

Mat ExpressionTree::hessian(const EvalPoint& p) const { return jet(p).hess; }

}  // namespace metastab::expr
