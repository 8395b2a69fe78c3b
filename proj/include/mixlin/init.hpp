#pragma once

#include "mixlin/model.hpp"
#include "mixlin/tensor_power.hpp"
#include "mixlin/types.hpp"

#include <vector>

namespace mixlin {

struct InitConfig {
  double split_fraction = 0.5;  // share of samples used for (m0, M2) when splitting
  bool use_split = false;       // false: every moment uses the whole sample set
  Seed split_seed = 0;
  PowerConfig power;
  int threads = 1;              // moment accumulation

  void validate() const;
};

struct InitDiagnostics {
  // max |lambda_i(M2)| over i > k. M2's population counterpart has rank k,
  // so this lower-bounds |M2 - E M2|_op.
  double epsilon2_proxy = 0.0;
  Vector m2_spectrum;            // descending
  double power_residual = 0.0;   // Frobenius norm of the deflated whitened tensor
  std::vector<double> tensor_eigenvalues;  // raw lambda_j from the power method
  int clamped_weights = 0;       // eigenvalues below kMinTensorEigenvalue
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
};

struct SpectralEstimate {
  Matrix betas0;    // p x k, column j is beta_j^(0)
  Vector weights0;  // all positive
  InitDiagnostics diagnostics;
};

/// Eigenvalues of the whitened tensor below this are clamped before forming
/// the weight 1 / lambda^2.
inline constexpr double kMinTensorEigenvalue = 1e-6;

/// Disjoint random split of 0..n-1 into (first, second) with
/// |first| = round(fraction * n) clamped to [1, n - 1].
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_indices(Eigen::Index n, double fraction,
                                                                             Seed seed);

/// Method-of-moments initialization: second moments, whitening to rank k,
/// whitened third moment, tensor power decomposition, then
/// w_j = 1 / lambda_j^2 and beta_j = lambda_j (W^T)^+ v_j.
/// Propagates RankDeficiencyError and DecompositionError.
SpectralEstimate tensor_init(SampleView data, Eigen::Index k, const InitConfig& cfg);

/// The same pipeline run on exact population moments.
SpectralEstimate tensor_init_from_population(const MixtureParams& params, Eigen::Index k, const InitConfig& cfg);

}  // namespace mixlin
