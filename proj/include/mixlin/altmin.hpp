#pragma once

#include "mixlin/model.hpp"
#include "mixlin/types.hpp"

#include <chrono>
#include <optional>
#include <string_view>
#include <vector>

namespace mixlin {

struct AltMinConfig {
  int max_iters = 200;   // T
  bool resample = false;  // use a fresh disjoint slice of n / T samples per iteration
  double tol = 1e-10;     // exact-recovery threshold on the estimation error
  Seed seed = 0;          // resample partition
  bool final_refit = false;  // one extra assignment + least-squares pass on all samples
  std::optional<std::chrono::steady_clock::time_point> deadline;

  void validate() const;
};

enum class Termination { labels_stable, max_iters, exact_recovery, degenerate_cluster, timeout };

std::string_view to_string(Termination reason);

/// State after iteration t: the iterate beta^(t) and the labels it induces.
struct IterationRecord {
  int iteration = 0;
  double error = 0.0;                       // vs ground truth; NaN when none is supplied
  Eigen::Index label_changes = 0;           // vs the previous record (all samples at t = 0)
  std::vector<Eigen::Index> cluster_sizes;  // sums to the slice size
  double residual = 0.0;                    // sum_i min_j (y_i - <x_i, beta_j>)^2 over the slice
  std::vector<bool> degenerate;             // clusters frozen by the update that produced beta^(t)
};

struct RunTrace {
  std::vector<IterationRecord> records;  // at most T + 1
  Termination reason = Termination::max_iters;

  int iterations() const { return records.empty() ? 0 : records.back().iteration; }
  double final_error() const { return records.empty() ? 0.0 : records.back().error; }
};

struct AltMinResult {
  Matrix betas;             // p x k
  std::vector<int> labels;  // assignment induced by `betas` on all samples
  RunTrace trace;
};

struct ParameterUpdate {
  Matrix betas;
  std::vector<bool> degenerate;  // empty or rank-deficient cluster; previous iterate kept
};

/// z_i = argmin_j |y_i - <x_i, beta_j>|, lowest index on ties.
std::vector<int> assign_labels(SampleView data, const Matrix& betas);

/// Per-cluster least squares by column-pivoted Householder QR. A cluster whose
/// design has numerical rank < p (pivot threshold 1e-10 of the largest column
/// norm), including an empty one, keeps its column of `previous`.
ParameterUpdate update_parameters(SampleView data, const std::vector<int>& labels, const Matrix& previous);

/// Disjoint slices of floor(n / T) indices each from a seeded permutation.
std::vector<std::vector<Eigen::Index>> resample_slices(Eigen::Index n, int slices, Seed seed);

/// Alternating minimization from `init` (p x k). Without resampling it stops
/// when an assignment repeats the previous one; with `truth` it also stops
/// once the estimation error is at most cfg.tol.
AltMinResult altmin_run(SampleView data, const Matrix& init, const AltMinConfig& cfg,
                        const MixtureParams* truth = nullptr);

}  // namespace mixlin
