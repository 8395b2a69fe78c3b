#pragma once

#include "mixlin/types.hpp"

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <random>

namespace mixlin {

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive a child seed from a parent seed and a path of integer keys,
/// e.g. derive_seed(master, {cell, trial}). Order of keys matters.
constexpr Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t s = mix64(parent);
  for (auto k : keys) s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
  return s;
}

/// Stream tags used with derive_seed so that every stochastic stage of a trial
/// draws from its own stream.
enum class Stream : std::uint64_t {
  params = 1,
  data = 2,
  split = 3,
  power = 4,
  random_init = 5,
  resample = 6,
};

/// Random source with explicitly specified output distributions.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The standard library's distributions are implementation-defined,
/// so uniform and Gaussian draws are produced here instead; a given seed then
/// yields the same numbers with every toolchain.
class Rng {
 public:
  explicit Rng(Seed seed) : engine_(mix64(seed)) {}

  Rng(Seed seed, Stream stream) : Rng(derive_seed(seed, {static_cast<std::uint64_t>(stream)})) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), rejection-sampled.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % bound;
  }

  /// Standard normal by the Box-Muller transform; values come in pairs.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  Vector normal_vector(Eigen::Index dim) {
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal();
    return v;
  }

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

  /// Uniform point on the unit sphere S^{dim-1}.
  Vector unit_vector(Eigen::Index dim) {
    for (;;) {
      Vector v = normal_vector(dim);
      const double nrm = v.norm();
      if (nrm > 1e-300) return v / nrm;
    }
  }

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<Eigen::Index> permutation(Eigen::Index n) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (Eigen::Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(below(static_cast<std::uint64_t>(i) + 1));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace mixlin
