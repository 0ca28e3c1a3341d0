#pragma once

#include <memory>
#include <string>

#include "metastab/domain.hpp"
#include "metastab/expr.hpp"

namespace metastab {

/// A parsed potential together with the domain it lives on. Cheap to copy;
/// the expression tree is shared and immutable.
class Potential {
 public:
  Potential(expr::ExpressionTree tree, Domain domain);
  /// Parses `src` in the dimension of `domain` and checks that it evaluates
  /// to finite values on a probe grid of the closed domain.
  static Potential parse(const std::string& src, const Domain& domain, int probe_per_axis = 64);

  const expr::ExpressionTree& tree() const { return *tree_; }
  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  const std::string& source() const { return tree_->source(); }

  double value(const EvalPoint& p) const { return tree_->evaluate(p); }
  Vec gradient(const EvalPoint& p) const { return tree_->gradient(p); }
  double value_and_gradient(const EvalPoint& p, Vec& g) const { return tree_->value_and_gradient(p, g); }
  expr::Jet jet(const EvalPoint& p) const { return tree_->jet(p); }

  /// Largest |grad f|^2 over an interior and boundary probe grid.
  double max_probe_grad_sq(int per_axis = 64) const;

 private:
  std::shared_ptr<const expr::ExpressionTree> tree_;
  Domain domain_;
};

/// Convenience for the 1D/2D point constructors.
inline EvalPoint make_point(int dim, double x, double y = 0.0) {
  return dim == 1 ? EvalPoint(x) : EvalPoint(x, y);
}

}  // namespace metastab
