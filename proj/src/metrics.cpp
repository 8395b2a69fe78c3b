#include "mixlin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mixlin {

namespace {

Matrix distance_matrix(const Matrix& est, const Matrix& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols())
    throw DimensionError("estimation_error: estimates and truth must both be p x k with equal p and k");
  const Eigen::Index k = est.cols();
  Matrix d(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) d(i, j) = (est.col(i) - truth.col(j)).norm();
  return d;
}

ErrorReport finish(const Matrix& dist, std::vector<int> perm) {
  ErrorReport r;
  r.per_component.resize(perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j)
    r.per_component[j] = dist(static_cast<Eigen::Index>(j), perm[j]);
  r.permutation = std::move(perm);
  if (!r.per_component.empty()) {
    r.error = *std::max_element(r.per_component.begin(), r.per_component.end());
    r.mean_error = std::accumulate(r.per_component.begin(), r.per_component.end(), 0.0) /
                   static_cast<double>(r.per_component.size());
  }
  return r;
}

// Kuhn's augmenting paths on the graph {(i, j) : dist(i, j) <= threshold}.
class ThresholdMatcher {
 public:
  ThresholdMatcher(const Matrix& dist, double threshold) : dist_(dist), threshold_(threshold) {}

  bool perfect(std::vector<int>& perm) {
    const auto k = static_cast<int>(dist_.rows());
    match_of_truth_.assign(static_cast<std::size_t>(k), -1);
    for (int i = 0; i < k; ++i) {
      seen_.assign(static_cast<std::size_t>(k), false);
      if (!augment(i)) return false;
    }
    perm.assign(static_cast<std::size_t>(k), -1);
    for (int j = 0; j < k; ++j) perm[static_cast<std::size_t>(match_of_truth_[static_cast<std::size_t>(j)])] = j;
    return true;
  }

 private:
  bool augment(int i) {
    for (int j = 0; j < static_cast<int>(dist_.cols()); ++j) {
      if (dist_(i, j) > threshold_ || seen_[static_cast<std::size_t>(j)]) continue;
      seen_[static_cast<std::size_t>(j)] = true;
      int& owner = match_of_truth_[static_cast<std::size_t>(j)];
      if (owner < 0 || augment(owner)) {
        owner = i;
        return true;
      }
    }
    return false;
  }

  const Matrix& dist_;
  double threshold_;
  std::vector<int> match_of_truth_;
  std::vector<bool> seen_;
};

}  // namespace

ErrorReport estimation_error_bruteforce(const Matrix& estimates, const Matrix& truth) {
  const Matrix dist = distance_matrix(estimates, truth);
  const auto k = static_cast<int>(dist.rows());
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_value = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (int j = 0; j < k && worst < best_value; ++j)
      worst = std::max(worst, dist(j, perm[static_cast<std::size_t>(j)]));
    if (worst < best_value) {
      best_value = worst;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return finish(dist, std::move(best));
}

ErrorReport estimation_error_bottleneck(const Matrix& estimates, const Matrix& truth) {
  const Matrix dist = distance_matrix(estimates, truth);
  std::vector<double> levels(dist.data(), dist.data() + dist.size());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  std::vector<int> perm;
  std::size_t lo = 0;
  std::size_t hi = levels.size();  // levels.back() always admits a perfect matching
  if (hi == 0) return finish(dist, {});
  hi -= 1;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    std::vector<int> trial;
    if (ThresholdMatcher(dist, levels[mid]).perfect(trial))
      hi = mid;
    else
      lo = mid + 1;
  }
  ThresholdMatcher(dist, levels[lo]).perfect(perm);
  return finish(dist, std::move(perm));
}

ErrorReport estimation_error(const Matrix& estimates, const Matrix& truth) {
  return estimates.cols() <= 8 ? estimation_error_bruteforce(estimates, truth)
                               : estimation_error_bottleneck(estimates, truth);
}

double label_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth_labels,
                      const std::vector<int>& permutation) {
  if (predicted.size() != truth_labels.size()) throw DimensionError("label_accuracy: length mismatch");
  if (predicted.empty()) return 1.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int z = predicted[i];
    if (z < 0 || static_cast<std::size_t>(z) >= permutation.size())
      throw std::out_of_range("label_accuracy: predicted label outside the permutation range");
    if (permutation[static_cast<std::size_t>(z)] == truth_labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double matched_weight_error(const Vector& estimates, const Vector& truth, const std::vector<int>& permutation) {
  if (estimates.size() != truth.size() || static_cast<std::size_t>(estimates.size()) != permutation.size())
    throw DimensionError("matched_weight_error: size mismatch");
  double worst = 0.0;
  for (Eigen::Index j = 0; j < estimates.size(); ++j)
    worst = std::max(worst, std::abs(estimates[j] - truth[permutation[static_cast<std::size_t>(j)]]));
  return worst;
}

}  // namespace mixlin
