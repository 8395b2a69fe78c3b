#include "mixlin/altmin.hpp"

#include "mixlin/metrics.hpp"
#include "mixlin/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mixlin {

namespace {

struct Slice {
  SampleMatrix xs;
  Vector ys;
};

Slice gather(SampleView data, const std::vector<Eigen::Index>& rows) {
  Slice s{SampleMatrix(static_cast<Eigen::Index>(rows.size()), data.dim()), Vector(static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s.xs.row(static_cast<Eigen::Index>(i)) = data.xs.row(rows[i]);
    s.ys[static_cast<Eigen::Index>(i)] = data.ys[rows[i]];
  }
  return s;
}

double objective(SampleView data, const Matrix& betas) {
  const Matrix fitted = data.xs * betas;  // n x k
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double r = (fitted.row(i).array() - data.ys[i]).abs().minCoeff();
    total += r * r;
  }
  return total;
}

std::vector<Eigen::Index> sizes_of(const std::vector<int>& labels, Eigen::Index k) {
  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(k), 0);
  for (int z : labels) ++sizes[static_cast<std::size_t>(z)];
  return sizes;
}

}  // namespace

void AltMinConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("AltMinConfig: T must be >= 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("AltMinConfig: tol must be >= 0");
}

std::string_view to_string(Termination reason) {
  switch (reason) {
    case Termination::labels_stable: return "labels_stable";
    case Termination::max_iters: return "max_iters";
    case Termination::exact_recovery: return "exact_recovery";
    case Termination::degenerate_cluster: return "degenerate_cluster";
    case Termination::timeout: return "timeout";
  }
  return "unknown";
}

std::vector<int> assign_labels(SampleView data, const Matrix& betas) {
  if (betas.rows() != data.dim()) throw DimensionError("assign_labels: betas must have p rows");
  if (betas.cols() < 1) throw std::invalid_argument("assign_labels: need k >= 1");
  const Matrix fitted = data.xs * betas;
  std::vector<int> labels(static_cast<std::size_t>(data.size()));
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    int best = 0;
    double best_r = std::abs(data.ys[i] - fitted(i, 0));
    for (Eigen::Index j = 1; j < betas.cols(); ++j) {
      const double r = std::abs(data.ys[i] - fitted(i, j));
      if (r < best_r) {
        best_r = r;
        best = static_cast<int>(j);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

ParameterUpdate update_parameters(SampleView data, const std::vector<int>& labels, const Matrix& previous) {
  const Eigen::Index p = data.dim();
  const Eigen::Index k = previous.cols();
  if (previous.rows() != p) throw DimensionError("update_parameters: previous iterate must have p rows");
  if (static_cast<Eigen::Index>(labels.size()) != data.size())
    throw DimensionError("update_parameters: one label per sample required");

  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int z = labels[i];
    if (z < 0 || z >= k) throw std::out_of_range("update_parameters: label outside [0, k)");
    members[static_cast<std::size_t>(z)].push_back(static_cast<Eigen::Index>(i));
  }

  ParameterUpdate out{previous, std::vector<bool>(static_cast<std::size_t>(k), false)};
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto& rows = members[static_cast<std::size_t>(j)];
    if (static_cast<Eigen::Index>(rows.size()) < p) {
      out.degenerate[static_cast<std::size_t>(j)] = true;
      continue;
    }
    const Slice s = gather(data, rows);
    Eigen::ColPivHouseholderQR<Matrix> qr(s.xs);
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
      out.degenerate[static_cast<std::size_t>(j)] = true;
      continue;
    }
    out.betas.col(j) = qr.solve(s.ys);
  }
  return out;
}

std::vector<std::vector<Eigen::Index>> resample_slices(Eigen::Index n, int slices, Seed seed) {
  if (slices < 1) throw std::invalid_argument("resample_slices: need at least one slice");
  const Eigen::Index size = n / slices;
  if (size < 1)
    throw std::invalid_argument("resample_slices: n = " + std::to_string(n) + " is smaller than T = " +
                                std::to_string(slices));
  const auto perm = Rng(seed, Stream::resample).permutation(n);
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(slices));
  for (int t = 0; t < slices; ++t) {
    auto begin = perm.begin() + static_cast<std::ptrdiff_t>(t * size);
    out[static_cast<std::size_t>(t)].assign(begin, begin + static_cast<std::ptrdiff_t>(size));
  }
  return out;
}

AltMinResult altmin_run(SampleView data, const Matrix& init, const AltMinConfig& cfg, const MixtureParams* truth) {
  cfg.validate();
  const Eigen::Index k = init.cols();
  if (init.rows() != data.dim()) throw DimensionError("altmin_run: init must have p rows");
  if (truth && (truth->p() != data.dim() || truth->k() != k))
    throw DimensionError("altmin_run: ground truth shape does not match init");

  std::vector<Slice> slices;
  if (cfg.resample)
    for (const auto& rows : resample_slices(data.size(), cfg.max_iters, cfg.seed)) slices.push_back(gather(data, rows));
  // Slice t for t < T; the record after the last update is scored on the last slice.
  auto slice_view = [&](int t) -> SampleView {
    if (!cfg.resample) return data;
    const Slice& s = slices[static_cast<std::size_t>(std::min(t, cfg.max_iters - 1))];
    return {s.xs, s.ys};
  };
  auto error_of = [&](const Matrix& betas) {
    return truth ? estimation_error(betas, truth->betas()).error : std::numeric_limits<double>::quiet_NaN();
  };

  AltMinResult result;
  Matrix betas = init;
  std::vector<int> labels = assign_labels(slice_view(0), betas);
  {
    IterationRecord rec;
    rec.iteration = 0;
    rec.error = error_of(betas);
    rec.label_changes = static_cast<Eigen::Index>(labels.size());
    rec.cluster_sizes = sizes_of(labels, k);
    rec.residual = objective(slice_view(0), betas);
    rec.degenerate.assign(static_cast<std::size_t>(k), false);
    result.trace.records.push_back(std::move(rec));
  }

  result.trace.reason = Termination::max_iters;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    if (cfg.deadline && std::chrono::steady_clock::now() > *cfg.deadline) {
      result.trace.reason = Termination::timeout;
      break;
    }
    ParameterUpdate upd = update_parameters(slice_view(t - 1), labels, betas);
    const bool all_degenerate = std::all_of(upd.degenerate.begin(), upd.degenerate.end(), [](bool d) { return d; });
    if (all_degenerate) {
      result.trace.reason = Termination::degenerate_cluster;
      break;
    }
    betas = std::move(upd.betas);

    const SampleView view = slice_view(t);
    std::vector<int> next = assign_labels(view, betas);
    IterationRecord rec;
    rec.iteration = t;
    rec.error = error_of(betas);
    rec.label_changes = 0;
    if (!cfg.resample)
      for (std::size_t i = 0; i < next.size(); ++i) rec.label_changes += next[i] != labels[i];
    else
      rec.label_changes = static_cast<Eigen::Index>(next.size());
    rec.cluster_sizes = sizes_of(next, k);
    rec.residual = objective(view, betas);
    rec.degenerate = std::move(upd.degenerate);
    const bool stable = !cfg.resample && rec.label_changes == 0;
    const bool exact = truth && rec.error <= cfg.tol;
    result.trace.records.push_back(std::move(rec));
    labels = std::move(next);

    if (exact) {
      result.trace.reason = Termination::exact_recovery;
      break;
    }
    if (stable) {
      result.trace.reason = Termination::labels_stable;
      break;
    }
  }

  if (cfg.final_refit) {
    const ParameterUpdate upd = update_parameters(data, assign_labels(data, betas), betas);
    betas = upd.betas;
  }
  result.labels = assign_labels(data, betas);
  result.betas = std::move(betas);
  return result;
}

}  // namespace mixlin
