#pragma once

#include "mixlin/types.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace mixlin {

/// Ground-truth parameters of a mixture of k noiseless linear models in R^p.
/// Column j of `betas` is the j-th regression vector.
class MixtureParams {
 public:
  MixtureParams() = default;
  /// Validates the invariants (positive weights summing to one, norms at most one).
  MixtureParams(Matrix betas, Vector weights, Seed seed = 0);

  Eigen::Index k() const { return betas_.cols(); }
  Eigen::Index p() const { return betas_.rows(); }
  const Matrix& betas() const { return betas_; }
  Vector beta(Eigen::Index j) const { return betas_.col(j); }
  const Vector& weights() const { return weights_; }
  Seed seed() const { return seed_; }

 private:
  Matrix betas_;
  Vector weights_;
  Seed seed_ = 0;
};

class Dataset;

/// Evaluation-only access to the hidden labels of a dataset. Solver code takes
/// a SampleView and never reaches this.
struct EvaluationAccess {
  static const std::vector<int>& true_labels(const Dataset& data);
};

/// n noiseless response/covariate pairs drawn from a MixtureParams.
class Dataset {
 public:
  Dataset(SampleMatrix xs, Vector ys, std::vector<int> labels, Seed seed);

  Eigen::Index n() const { return ys_.size(); }
  Eigen::Index p() const { return xs_.cols(); }
  const SampleMatrix& xs() const { return xs_; }
  const Vector& ys() const { return ys_; }
  Seed seed() const { return seed_; }
  SampleView view() const { return {xs_, ys_}; }

 private:
  friend struct EvaluationAccess;
  SampleMatrix xs_;
  Vector ys_;
  std::vector<int> labels_;
  Seed seed_ = 0;
};

inline const std::vector<int>& EvaluationAccess::true_labels(const Dataset& data) { return data.labels_; }

/// Hardness quantities of a parameter set.
struct DifficultyReport {
  double delta = 0.0;      // min pairwise distance; +inf when k = 1
  double omega_min = 0.0;  // smallest weight
  double sigma_k = 0.0;    // k-th eigenvalue of sum_j w_j b_j b_j^T
  double eta = 0.0;        // 1 - min_j |b_j|
  double gamma = 0.0;      // max_{i != j} |<b_i, b_j>|
};

/// k unit vectors in a uniformly random k-dimensional subspace of R^p with
/// every pairwise distance equal to `delta`, and equal weights 1/k.
MixtureParams make_delta_spaced_params(Eigen::Index p, Eigen::Index k, double delta, Seed seed);

/// Draws n samples: z_i ~ Categorical(w), x_i ~ N(0, I_p), y_i = <x_i, b_{z_i}>.
Dataset sample_dataset(const MixtureParams& params, Eigen::Index n, Seed seed);

DifficultyReport difficulty(const MixtureParams& params);

/// k x k Gram matrix with unit diagonal and off-diagonal 1 - delta^2/2.
Matrix delta_gram_matrix(Eigen::Index k, double delta);

// JSON schema: params {k, p, betas (k rows of p, i.e. beta_j per row), weights, seed};
// dataset {n, p, xs (n rows of p), ys, labels, seed}.
nlohmann::json to_json(const MixtureParams& params);
nlohmann::json to_json(const Dataset& data);
MixtureParams params_from_json(const nlohmann::json& j);
Dataset dataset_from_json(const nlohmann::json& j);

}  // namespace mixlin
