#pragma once

#include "mixlin/types.hpp"

#include <vector>

namespace mixlin {

/// Permutation-matched estimation error: min over permutations pi of
/// max_j |est_j - truth_{pi(j)}|.
struct ErrorReport {
  double error = 0.0;
  std::vector<int> permutation;       // estimate j is matched to truth permutation[j]
  std::vector<double> per_component;  // |est_j - truth_{permutation[j]}|
  /// Mean of per_component. A dashboard diagnostic only; `error` is the max.
  double mean_error = 0.0;
};

/// Columns of both matrices are the k component vectors. Brute force over all
/// k! permutations for k <= 8, bottleneck assignment otherwise.
ErrorReport estimation_error(const Matrix& estimates, const Matrix& truth);

/// Exhaustive search; the lexicographically first optimal permutation wins ties.
ErrorReport estimation_error_bruteforce(const Matrix& estimates, const Matrix& truth);

/// Bottleneck assignment: the smallest distance threshold admitting a perfect
/// matching of the k x k distance graph, found by binary search over the sorted
/// distances with augmenting-path matching at each step.
ErrorReport estimation_error_bottleneck(const Matrix& estimates, const Matrix& truth);

/// Fraction of samples i with permutation[predicted_i] == truth_i, i.e. the
/// predicted cluster is the one matched to the true component.
double label_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth_labels,
                      const std::vector<int>& permutation);

/// max_j |est_w_j - true_w_{permutation[j]}|.
double matched_weight_error(const Vector& estimates, const Vector& truth, const std::vector<int>& permutation);

}  // namespace mixlin
