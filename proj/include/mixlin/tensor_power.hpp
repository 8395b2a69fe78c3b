#pragma once

#include "mixlin/tensor.hpp"
#include "mixlin/types.hpp"

#include <vector>

namespace mixlin {

struct PowerConfig {
  int restarts = 1;    // L
  int iterations = 1;  // N
  Seed seed = 0;
  int threads = 1;     // restarts run concurrently; output does not depend on this

  /// L = 200 k^2, N = ceil(20 ln max(k, 2)).
  static PowerConfig defaults(Eigen::Index k, Seed seed = 0);
  void validate() const;
};

struct EigenPair {
  double lambda = 0.0;
  Vector vector;
};

struct PowerDecomposition {
  std::vector<EigenPair> pairs;  // extraction order
  Tensor3 residual;              // input minus sum of extracted rank-one terms
  int degenerate_restarts = 0;   // restarts discarded because T(I, b, b) vanished
  int sign_flips = 0;            // pairs returned with lambda < 0 and flipped
};

/// T(I, u, v) for a cubic tensor; throws DimensionError on a shape mismatch.
Vector tensor_apply(const Tensor3& t, const Vector& u, const Vector& v);

/// Robust tensor power method with random restarts and deflation.
///
/// For each of the `k` pairs: run `restarts` trajectories of `iterations`
/// power updates from uniform random starts, keep the trajectory with the
/// largest T(b, b, b) (lowest restart index on ties), polish it with
/// `iterations` further updates (stopping once successive iterates differ by
/// less than 1e-13), then deflate T -= lambda b^(x)3. A pair with lambda < 0 is
/// returned as (-lambda, -b). Restart l of pair j draws from its own stream
/// derived from (seed, j, l), so the result is independent of `threads`.
///
/// Throws DecompositionError if every restart of some pair degenerates.
PowerDecomposition power_decompose_detailed(const Tensor3& t, Eigen::Index k, const PowerConfig& cfg);

std::vector<EigenPair> power_decompose(const Tensor3& t, Eigen::Index k, const PowerConfig& cfg);

}  // namespace mixlin
