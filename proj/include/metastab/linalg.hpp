#pragma once

// Banded symmetric kernels for the generator matrices: an elimination for
// irreducible M-matrices that never subtracts (pivots come from row-sum
// excesses), and a plain LDL^T used for inertia counts.

#include <stdexcept>
#include <vector>

namespace metastab::linalg {

class SingularMatrix : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Symmetric matrix in upper band storage. Entry (i, i+m), 1 <= m <= bw, sits
/// at band[i*bw + m - 1].
struct BandMatrix {
  int n = 0, bw = 0;
  std::vector<double> diag, band;

  BandMatrix() = default;
  BandMatrix(int n, int bw);
  double& upper(int i, int m) { return band[static_cast<std::size_t>(i) * static_cast<std::size_t>(bw) + static_cast<std::size_t>(m - 1)]; }
  double upper(int i, int m) const { return band[static_cast<std::size_t>(i) * static_cast<std::size_t>(bw) + static_cast<std::size_t>(m - 1)]; }
  void multiply(const double* x, double* y) const;
};

/// Factor of T = D - N where N >= 0 holds the off-diagonal magnitudes and the
/// row sums T*1 = excess >= 0 are supplied exactly. Elimination updates only
/// add nonnegative terms, so solves with b >= 0 return x > 0 with small
/// componentwise relative error regardless of conditioning.
class MMatrixFactor {
 public:
  /// `offdiag` holds |T_ij| in its band; its diagonal is ignored.
  MMatrixFactor(BandMatrix offdiag, std::vector<double> excess);
  int size() const { return n_; }
  void solve(double* x) const;
  const std::vector<double>& pivots() const { return d_; }

 private:
  int n_, bw_;
  std::vector<double> u_, d_;
};

/// Number of negative eigenvalues of A - shift*I (Sylvester's law of inertia).
int count_below(BandMatrix a, double shift);

}  // namespace metastab::linalg
