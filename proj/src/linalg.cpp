#include "metastab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace metastab::linalg {

BandMatrix::BandMatrix(int n_, int bw_)
    : n(n_), bw(bw_), diag(static_cast<std::size_t>(n_), 0.0), band(static_cast<std::size_t>(n_) * static_cast<std::size_t>(bw_), 0.0) {}

void BandMatrix::multiply(const double* x, double* y) const {
  for (int i = 0; i < n; ++i) y[i] = diag[static_cast<std::size_t>(i)] * x[i];
  for (int i = 0; i < n; ++i) {
    const double* row = &band[static_cast<std::size_t>(i) * static_cast<std::size_t>(bw)];
    const int mmax = std::min(bw, n - 1 - i);
    double acc = 0;
    for (int m = 1; m <= mmax; ++m) {
      const double a = row[m - 1];
      acc += a * x[i + m];
      y[i + m] += a * x[i];
    }
    y[i] += acc;
  }
}

MMatrixFactor::MMatrixFactor(BandMatrix offdiag, std::vector<double> excess)
    : n_(offdiag.n), bw_(offdiag.bw), u_(std::move(offdiag.band)), d_(static_cast<std::size_t>(offdiag.n)) {
  if (excess.size() != static_cast<std::size_t>(n_)) throw std::invalid_argument("excess size mismatch");
  const auto bw = static_cast<std::size_t>(bw_);
  for (int k = 0; k < n_; ++k) {
    double* rk = &u_[static_cast<std::size_t>(k) * bw];
    const int mmax = std::min(bw_, n_ - 1 - k);
    double s = excess[static_cast<std::size_t>(k)];
    for (int m = 0; m < mmax; ++m) s += rk[m];
    if (!(s > 0) || !std::isfinite(s)) throw SingularMatrix("zero pivot at row " + std::to_string(k));
    d_[static_cast<std::size_t>(k)] = s;
    const double ek = excess[static_cast<std::size_t>(k)];
    for (int m1 = 1; m1 <= mmax; ++m1) {
      const double a = rk[m1 - 1];
      if (a == 0) continue;
      const double f = a / s;
      const int j = k + m1;
      excess[static_cast<std::size_t>(j)] += f * ek;
      double* rj = &u_[static_cast<std::size_t>(j) * bw];
      for (int m2 = m1 + 1; m2 <= mmax; ++m2) rj[m2 - m1 - 1] += f * rk[m2 - 1];
    }
  }
}

void MMatrixFactor::solve(double* x) const {
  const auto bw = static_cast<std::size_t>(bw_);
  for (int k = 0; k < n_; ++k) {
    const double* rk = &u_[static_cast<std::size_t>(k) * bw];
    const double xk = x[k] / d_[static_cast<std::size_t>(k)];
    if (xk == 0) continue;
    const int mmax = std::min(bw_, n_ - 1 - k);
    for (int m = 1; m <= mmax; ++m) x[k + m] += rk[m - 1] * xk;
  }
  for (int k = n_ - 1; k >= 0; --k) {
    const double* rk = &u_[static_cast<std::size_t>(k) * bw];
    const int mmax = std::min(bw_, n_ - 1 - k);
    double acc = x[k];
    for (int m = 1; m <= mmax; ++m) acc += rk[m - 1] * x[k + m];
    x[k] = acc / d_[static_cast<std::size_t>(k)];
  }
}

int count_below(BandMatrix a, double shift) {
  const auto bw = static_cast<std::size_t>(a.bw);
  int neg = 0;
  for (int k = 0; k < a.n; ++k) {
    double piv = a.diag[static_cast<std::size_t>(k)] - shift;
    if (piv == 0) piv = -1e-300;  // nudge; the shift sits on an eigenvalue
    if (piv < 0) ++neg;
    const double* rk = &a.band[static_cast<std::size_t>(k) * bw];
    const int mmax = std::min(a.bw, a.n - 1 - k);
    for (int m1 = 1; m1 <= mmax; ++m1) {
      const double r = rk[m1 - 1];
      if (r == 0) continue;
      const double f = r / piv;
      const int j = k + m1;
      a.diag[static_cast<std::size_t>(j)] -= f * r;
      double* rj = &a.band[static_cast<std::size_t>(j) * bw];
      for (int m2 = m1 + 1; m2 <= mmax; ++m2) rj[m2 - m1 - 1] -= f * rk[m2 - 1];
    }
  }
  return neg;
}

}  // namespace metastab::linalg
