#include "mixlin/model.hpp"

#include "mixlin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mixlin {

namespace {

// Flip each column so its largest-magnitude entry is positive.
void canonicalize_signs(Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index idx = 0;
    m.col(j).cwiseAbs().maxCoeff(&idx);
    if (m(idx, j) < 0.0) m.col(j) = -m.col(j);
  }
}

}  // namespace

MixtureParams::MixtureParams(Matrix betas, Vector weights, Seed seed)
    : betas_(std::move(betas)), weights_(std::move(weights)), seed_(seed) {
  if (betas_.cols() < 1 || betas_.rows() < 1) throw DimensionError("MixtureParams: need k >= 1 and p >= 1");
  if (weights_.size() != betas_.cols())
    throw DimensionError("MixtureParams: weight count " + std::to_string(weights_.size()) +
                         " does not match component count " + std::to_string(betas_.cols()));
  if ((weights_.array() <= 0.0).any()) throw ConstructionError("MixtureParams: every weight must be > 0");
  if (std::abs(weights_.sum() - 1.0) > 1e-12) throw ConstructionError("MixtureParams: weights must sum to 1");
  if (betas_.colwise().norm().maxCoeff() > 1.0 + 1e-12)
    throw ConstructionError("MixtureParams: every beta must have norm at most 1");
}

Dataset::Dataset(SampleMatrix xs, Vector ys, std::vector<int> labels, Seed seed)
    : xs_(std::move(xs)), ys_(std::move(ys)), labels_(std::move(labels)), seed_(seed) {
  if (xs_.rows() != ys_.size()) throw DimensionError("Dataset: xs and ys disagree on sample count");
  if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != ys_.size())
    throw DimensionError("Dataset: label count does not match sample count");
}

Matrix delta_gram_matrix(Eigen::Index k, double delta) {
  Matrix c = Matrix::Constant(k, k, 1.0 - delta * delta / 2.0);
  c.diagonal().setOnes();
  return c;
}

MixtureParams make_delta_spaced_params(Eigen::Index p, Eigen::Index k, double delta, Seed seed) {
  if (k < 1 || p < 1) throw DimensionError("make_delta_spaced_params: need k >= 1 and p >= 1");
  if (k > p)
    throw DimensionError("make_delta_spaced_params: k = " + std::to_string(k) + " exceeds p = " + std::to_string(p));
  if (k > 1) {
    if (!(delta > 0.0)) throw ConstructionError("make_delta_spaced_params: delta must be positive");
    const double off = 1.0 - delta * delta / 2.0;
    if (off < -1.0 / static_cast<double>(k - 1) + 1e-9)
      throw ConstructionError("make_delta_spaced_params: delta = " + std::to_string(delta) +
                              " makes the Gram matrix indefinite for k = " + std::to_string(k));
  }

  Rng rng(seed, Stream::params);
  Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(p, k));
  Matrix basis = qr.householderQ() * Matrix::Identity(p, k);
  for (Eigen::Index j = 0; j < k; ++j)
    if (qr.matrixQR()(j, j) < 0.0) basis.col(j) = -basis.col(j);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(delta_gram_matrix(k, delta));
  Matrix v = eig.eigenvectors();
  canonicalize_signs(v);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();

  Matrix betas = basis * root.asDiagonal() * v.transpose();
  // Rounding can leave norms a few ulps above one.
  for (Eigen::Index j = 0; j < k; ++j) betas.col(j) /= betas.col(j).norm();
  return MixtureParams(std::move(betas), Vector::Constant(k, 1.0 / static_cast<double>(k)), seed);
}

Dataset sample_dataset(const MixtureParams& params, Eigen::Index n, Seed seed) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
  const Eigen::Index p = params.p();
  const Eigen::Index k = params.k();
  std::vector<double> cumulative(static_cast<std::size_t>(k));
  double acc = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) cumulative[static_cast<std::size_t>(j)] = (acc += params.weights()[j]);

  Rng rng(seed, Stream::data);
  SampleMatrix xs(n, p);
  Vector ys(n);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const int z = static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(), k - 1));
    labels[static_cast<std::size_t>(i)] = z;
    for (Eigen::Index a = 0; a < p; ++a) xs(i, a) = rng.normal();
    ys[i] = xs.row(i).dot(params.betas().col(z));
  }
  return Dataset(std::move(xs), std::move(ys), std::move(labels), seed);
}

DifficultyReport difficulty(const MixtureParams& params) {
  const Matrix& b = params.betas();
  const Eigen::Index k = params.k();
  DifficultyReport r;
  r.omega_min = params.weights().minCoeff();
  r.delta = std::numeric_limits<double>::infinity();
  r.gamma = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) {
      r.delta = std::min(r.delta, (b.col(i) - b.col(j)).norm());
      r.gamma = std::max(r.gamma, std::abs(b.col(i).dot(b.col(j))));
    }
  r.eta = 1.0 - b.colwise().norm().minCoeff();

  Eigen::JacobiSVD<Matrix> svd(b);
  const Vector& sv = svd.singularValues();
  const Eigen::Index rank = (sv.array() > 1e-10 * sv[0]).count();
  if (k > params.p() || rank < k) {
    r.sigma_k = 0.0;
    return r;
  }
  const Matrix m2 = b * params.weights().asDiagonal() * b.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m2, Eigen::EigenvaluesOnly);
  // Ascending order: the k-th largest sits at index p - k.
  r.sigma_k = std::max(0.0, eig.eigenvalues()[params.p() - k]);
  return r;
}

nlohmann::json to_json(const MixtureParams& params) {
  nlohmann::json betas = nlohmann::json::array();
  for (Eigen::Index j = 0; j < params.k(); ++j) {
    std::vector<double> row(params.betas().col(j).data(), params.betas().col(j).data() + params.p());
    betas.push_back(row);
  }
  return {{"k", params.k()},
          {"p", params.p()},
          {"betas", betas},
          {"weights", std::vector<double>(params.weights().data(), params.weights().data() + params.k())},
          {"seed", params.seed()}};
}

nlohmann::json to_json(const Dataset& data) {
  nlohmann::json xs = nlohmann::json::array();
  for (Eigen::Index i = 0; i < data.n(); ++i)
    xs.push_back(std::vector<double>(data.xs().row(i).data(), data.xs().row(i).data() + data.p()));
  return {{"n", data.n()},
          {"p", data.p()},
          {"xs", xs},
          {"ys", std::vector<double>(data.ys().data(), data.ys().data() + data.n())},
          {"labels", EvaluationAccess::true_labels(data)},
          {"seed", data.seed()}};
}

MixtureParams params_from_json(const nlohmann::json& j) {
  const auto k = j.at("k").get<Eigen::Index>();
  const auto p = j.at("p").get<Eigen::Index>();
  const auto& rows = j.at("betas");
  if (static_cast<Eigen::Index>(rows.size()) != k) throw DimensionError("params JSON: betas must have k rows");
  Matrix betas(p, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const auto row = rows.at(static_cast<std::size_t>(c)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != p) throw DimensionError("params JSON: beta row length must be p");
    for (Eigen::Index a = 0; a < p; ++a) betas(a, c) = row[static_cast<std::size_t>(a)];
  }
  const auto w = j.at("weights").get<std::vector<double>>();
  return MixtureParams(std::move(betas), Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())),
                       j.value("seed", Seed{0}));
}

Dataset dataset_from_json(const nlohmann::json& j) {
  const auto p = j.at("p").get<Eigen::Index>();
  const auto ys = j.at("ys").get<std::vector<double>>();
  const auto n = static_cast<Eigen::Index>(ys.size());
  const auto& rows = j.at("xs");
  if (static_cast<Eigen::Index>(rows.size()) != n) throw DimensionError("dataset JSON: xs and ys lengths differ");
  SampleMatrix xs(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = rows.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != p) throw DimensionError("dataset JSON: xs row length must be p");
    for (Eigen::Index a = 0; a < p; ++a) xs(i, a) = row[static_cast<std::size_t>(a)];
  }
  std::vector<int> labels;
  if (j.contains("labels")) labels = j.at("labels").get<std::vector<int>>();
  return Dataset(std::move(xs), Eigen::Map<const Vector>(ys.data(), n), std::move(labels), j.value("seed", Seed{0}));
}

}  // namespace mixlin
