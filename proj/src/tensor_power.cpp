#include "mixlin/tensor_power.hpp"

#include "mixlin/parallel.hpp"
#include "mixlin/rng.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mixlin {

namespace {

constexpr double kVanishingNorm = 1e-300;
constexpr double kPolishTolerance = 1e-13;

// out = T(I, u, u) over raw storage; no allocation in the inner loop.
void apply_sym(const std::vector<double>& t, Eigen::Index d, const double* u, double* out) {
  for (Eigen::Index a = 0; a < d; ++a) {
    const double* slab = t.data() + a * d * d;
    double acc = 0.0;
    for (Eigen::Index b = 0; b < d; ++b) {
      const double* row = slab + b * d;
      double inner = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) inner += row[c] * u[c];
      acc += u[b] * inner;
    }
    out[a] = acc;
  }
}

// One normalized power update in place. Returns false if T(I, u, u) vanished.
bool power_step(const std::vector<double>& t, Eigen::Index d, Vector& u, Vector& scratch) {
  apply_sym(t, d, u.data(), scratch.data());
  const double nrm = scratch.norm();
  if (!(nrm > kVanishingNorm) || !std::isfinite(nrm)) return false;
  u = scratch / nrm;
  return true;
}

struct Trajectory {
  Vector end;
  double value = -std::numeric_limits<double>::infinity();
  bool degenerate = true;
};

}  // namespace

PowerConfig PowerConfig::defaults(Eigen::Index k, Seed seed) {
  PowerConfig cfg;
  cfg.restarts = static_cast<int>(200 * k * k);
  cfg.iterations = static_cast<int>(std::ceil(20.0 * std::log(static_cast<double>(std::max<Eigen::Index>(k, 2)))));
  cfg.seed = seed;
  return cfg;
}

void PowerConfig::validate() const {
  if (restarts < 1) throw std::invalid_argument("PowerConfig: restart count L must be >= 1");
  if (iterations < 1) throw std::invalid_argument("PowerConfig: iteration count N must be >= 1");
}

Vector tensor_apply(const Tensor3& t, const Vector& u, const Vector& v) { return t.apply(u, v); }

PowerDecomposition power_decompose_detailed(const Tensor3& t, Eigen::Index k, const PowerConfig& cfg) {
  cfg.validate();
  const Eigen::Index d = t.dim();
  if (k < 0 || k > d)
    throw DimensionError("power_decompose: cannot extract " + std::to_string(k) + " pairs from a dimension-" +
                         std::to_string(d) + " tensor");
  if (t.symmetry_defect() > 1e-8) throw std::invalid_argument("power_decompose: input tensor is not symmetric");

  PowerDecomposition out;
  Tensor3 work = t;
  const auto restarts = static_cast<std::size_t>(cfg.restarts);
  std::vector<Trajectory> runs(restarts);

  for (Eigen::Index j = 0; j < k; ++j) {
    const std::vector<double>& data = work.data();
    parallel_for(restarts, cfg.threads, [&](std::size_t l) {
      Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(Stream::power), static_cast<std::uint64_t>(j),
                                     static_cast<std::uint64_t>(l)}));
      Trajectory run;
      Vector u = rng.unit_vector(d);
      Vector scratch(d);
      bool ok = true;
      for (int it = 0; it < cfg.iterations && ok; ++it) ok = power_step(data, d, u, scratch);
      if (ok) {
        apply_sym(data, d, u.data(), scratch.data());
        run.value = u.dot(scratch);
        run.end = std::move(u);
        run.degenerate = false;
      }
      runs[l] = std::move(run);
    });

    std::size_t best = restarts;
    for (std::size_t l = 0; l < restarts; ++l) {
      if (runs[l].degenerate) {
        ++out.degenerate_restarts;
        continue;
      }
      if (best == restarts || runs[l].value > runs[best].value) best = l;
    }
    if (best == restarts)
      throw DecompositionError("power_decompose: all " + std::to_string(cfg.restarts) + " restarts degenerated for pair " +
                               std::to_string(j + 1));

    Vector u = runs[best].end;
    Vector scratch(d);
    for (int it = 0; it < cfg.iterations; ++it) {
      const Vector prev = u;
      if (!power_step(data, d, u, scratch)) {
        u = prev;
        break;
      }
      if ((u - prev).norm() < kPolishTolerance) break;
    }

    EigenPair pair{work.evaluate(u), u};
    if (pair.lambda < 0.0) {
      pair.lambda = -pair.lambda;
      pair.vector = -pair.vector;
      ++out.sign_flips;
    }
    work.add_rank_one(pair.vector, -pair.lambda);
    out.pairs.push_back(std::move(pair));
  }
  out.residual = std::move(work);
  return out;
}

std::vector<EigenPair> power_decompose(const Tensor3& t, Eigen::Index k, const PowerConfig& cfg) {
  return power_decompose_detailed(t, k, cfg).pairs;
}

}  // namespace mixlin
