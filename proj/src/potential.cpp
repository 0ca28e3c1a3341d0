#include "metastab/potential.hpp"

#include <cmath>
#include <stdexcept>

namespace metastab {

Potential::Potential(expr::ExpressionTree tree, Domain domain)
    : tree_(std::make_shared<const expr::ExpressionTree>(std::move(tree))), domain_(domain) {
  if (tree_->dimension() != domain_.dim())
    throw std::invalid_argument("potential dimension does not match the domain");
}

Potential Potential::parse(const std::string& src, const Domain& domain, int probe_per_axis) {
  Potential pot(expr::parse_potential(src, domain.dim()), domain);
  for (const auto& p : domain.interior_probe(probe_per_axis)) pot.value(p);
  for (const auto& p : domain.boundary_probe(4 * probe_per_axis)) pot.value(p);
  for (const auto& p : domain.corners()) pot.value(p);
  return pot;
}

double Potential::max_probe_grad_sq(int per_axis) const {
  double m = 0;
  auto visit = [&](const EvalPoint& p) {
    const Vec g = gradient(p);
    m = std::max(m, g[0] * g[0] + g[1] * g[1]);
  };
  for (const auto& p : domain_.interior_probe(per_axis)) visit(p);
  for (const auto& p : domain_.boundary_probe(4 * per_axis)) visit(p);
  return m;
}

}  // namespace metastab
