#pragma once

#include "mixlin/types.hpp"

#include <array>

namespace mixlin {

/// Whitening transform built from the top-k eigenpairs of a symmetric matrix.
struct Whitener {
  Matrix w;           // p x k, U Sigma^{-1/2}
  Matrix w_pinv_t;    // p x k, (W^T)^+ = W (W^T W)^{-1}
  Vector sigma;       // retained eigenvalues, descending
  Matrix u;           // p x k, retained eigenvectors
  Vector spectrum;    // all eigenvalues of the symmetrized input, descending
  double rank_gap = 0.0;  // sigma_k - sigma_{k+1} (sigma_{p+1} := 0)

  /// Rank-k truncation U Sigma U^T of the input.
  Matrix truncated() const { return u * sigma.asDiagonal() * u.transpose(); }
  /// Moore-Penrose pseudoinverse of W, a k x p matrix.
  Matrix w_pinv() const { return w_pinv_t.transpose(); }
};

/// Eigenvalues at or below this are treated as zero when whitening.
double eigen_floor(double largest_eigenvalue);

/// Whitens the symmetrized M2 = (M + M^T)/2 to rank k so that W^T M2' W = I_k.
/// Each eigenvector is sign-fixed so its largest-magnitude entry is positive.
/// Throws RankDeficiencyError (carrying the spectrum) when the k-th largest
/// eigenvalue is not above eigen_floor.
Whitener whiten(const Matrix& m2, Eigen::Index k);

struct WhiteningProbe {
  double alpha = 0.0;              // |A - A_hat|_op / sigma_k(A)
  bool precondition_met = false;   // alpha < 1/3
  bool bounds_hold = false;        // all four inequalities (only meaningful when precondition_met)
  // Left-hand sides and right-hand sides of the four checks, in order:
  // |W_hat| <= 2|W|, |W_hat^+| <= 2|W^+|, |W - W_hat| <= 2 alpha |W|, |W^+ - W_hat^+| <= 2 alpha |W^+|.
  std::array<double, 4> lhs{};
  std::array<double, 4> rhs{};
};

/// Compares the whiteners of A and A_hat after aligning W_hat to W by the
/// orthogonal Procrustes rotation (whiteners are unique only up to a k x k
/// orthogonal factor). Inputs are symmetric PSD of rank >= k.
WhiteningProbe whitening_stability_probe(const Matrix& a, const Matrix& a_hat, Eigen::Index k);

}  // namespace mixlin
