#include "mixlin/init.hpp"

#include "mixlin/moments.hpp"
#include "mixlin/rng.hpp"
#include "mixlin/whitening.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mixlin {

namespace {

SampleMatrix gather_rows(const SampleMatrix& xs, const std::vector<Eigen::Index>& rows) {
  SampleMatrix out(static_cast<Eigen::Index>(rows.size()), xs.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = xs.row(rows[i]);
  return out;
}

Vector gather(const Vector& ys, const std::vector<Eigen::Index>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = ys[rows[i]];
  return out;
}

SpectralEstimate reconstruct(const Whitener& wh, const Tensor3& whitened, Eigen::Index k, const PowerConfig& power) {
  const PowerDecomposition dec = power_decompose_detailed(whitened, k, power);
  const Eigen::Index p = wh.w.rows();

  SpectralEstimate est;
  est.betas0 = Matrix(p, k);
  est.weights0 = Vector(k);
  auto& diag = est.diagnostics;
  diag.m2_spectrum = wh.spectrum;
  for (Eigen::Index i = k; i < wh.spectrum.size(); ++i)
    diag.epsilon2_proxy = std::max(diag.epsilon2_proxy, std::abs(wh.spectrum[i]));
  diag.power_residual = dec.residual.frobenius_norm();

  for (Eigen::Index j = 0; j < k; ++j) {
    const EigenPair& pair = dec.pairs[static_cast<std::size_t>(j)];
    diag.tensor_eigenvalues.push_back(pair.lambda);
    double lambda = pair.lambda;
    if (lambda < kMinTensorEigenvalue) {
      lambda = kMinTensorEigenvalue;
      ++diag.clamped_weights;
    }
    est.weights0[j] = 1.0 / (lambda * lambda);
    est.betas0.col(j) = pair.lambda * (wh.w_pinv_t * pair.vector);
  }
  return est;
}

}  // namespace

void InitConfig::validate() const {
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw std::invalid_argument("InitConfig: split_fraction must lie in (0, 1)");
  power.validate();
}

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_indices(Eigen::Index n, double fraction,
                                                                             Seed seed) {
  if (n < 2) throw std::invalid_argument("split_indices: need at least two samples");
  auto perm = Rng(seed, Stream::split).permutation(n);
  const auto n1 = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(n))),
                                           1, n - 1);
  std::vector<Eigen::Index> first(perm.begin(), perm.begin() + n1);
  std::vector<Eigen::Index> second(perm.begin() + n1, perm.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {std::move(first), std::move(second)};
}

SpectralEstimate tensor_init(SampleView data, Eigen::Index k, const InitConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = data.size();
  const Eigen::Index p = data.dim();
  if (n < 2) throw std::invalid_argument("tensor_init: need at least two samples");
  if (k < 1 || k > p)
    throw DimensionError("tensor_init: k = " + std::to_string(k) + " must lie in [1, p = " + std::to_string(p) + "]");

  SecondMomentSet second;
  WhitenedThirdMoment third;
  Whitener wh;
  if (cfg.use_split) {
    const auto [first_rows, second_rows] = split_indices(n, cfg.split_fraction, cfg.split_seed);
    const SampleMatrix xs1 = gather_rows(data.xs, first_rows);
    const Vector ys1 = gather(data.ys, first_rows);
    second = compute_second_moments({xs1, ys1}, cfg.threads);
    wh = whiten(second.m2, k);
    const SampleMatrix xs2 = gather_rows(data.xs, second_rows);
    const Vector ys2 = gather(data.ys, second_rows);
    third = compute_whitened_third_moment({xs2, ys2}, wh.w, cfg.threads);
  } else {
    second = compute_second_moments(data, cfg.threads);
    wh = whiten(second.m2, k);
    third = compute_whitened_third_moment(data, wh.w, cfg.threads);
  }

  SpectralEstimate est = reconstruct(wh, third.tilde_m3, k, cfg.power);
  est.diagnostics.n1 = second.n1;
  est.diagnostics.n2 = third.n2;
  return est;
}

SpectralEstimate tensor_init_from_population(const MixtureParams& params, Eigen::Index k, const InitConfig& cfg) {
  cfg.validate();
  if (k < 1 || k > params.p()) throw DimensionError("tensor_init_from_population: k must lie in [1, p]");
  const Matrix m2 = params.betas() * params.weights().asDiagonal() * params.betas().transpose();
  const Whitener wh = whiten(m2, k);
  return reconstruct(wh, expected_whitened_third_moment(params, wh.w), k, cfg.power);
}

}  // namespace mixlin
