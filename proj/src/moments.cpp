#include "mixlin/moments.hpp"

#include "mixlin/parallel.hpp"

#include <array>
#include <string>
#include <vector>

namespace mixlin {

namespace {

using Acc = long double;

std::size_t block_count(Eigen::Index n) { return static_cast<std::size_t>((n + kMomentBlock - 1) / kMomentBlock); }

Eigen::Index tri_index(Eigen::Index a, Eigen::Index b, Eigen::Index p) { return a * p - a * (a - 1) / 2 + (b - a); }

// Sorted index triples a <= b <= c of a cubic tensor of dimension k.
struct TripleIndex {
  explicit TripleIndex(Eigen::Index k) : dim(k) {
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = a; b < k; ++b)
        for (Eigen::Index c = b; c < k; ++c) triples.push_back({a, b, c});
  }
  Eigen::Index dim;
  std::vector<std::array<Eigen::Index, 3>> triples;
};

}  // namespace

SecondMomentSet compute_second_moments(SampleView data, int threads) {
  const Eigen::Index n = data.size();
  const Eigen::Index p = data.dim();
  if (n == 0) throw std::invalid_argument("compute_second_moments: empty sample slice");
  if (data.xs.rows() != n) throw DimensionError("compute_second_moments: xs and ys disagree on sample count");

  const Eigen::Index tri = p * (p + 1) / 2;
  // Per block: [y^2 sum, upper triangle of sum y^2 x x^T].
  const std::size_t blocks = block_count(n);
  std::vector<std::vector<Acc>> partial(blocks);
  parallel_for(blocks, threads, [&](std::size_t blk) {
    std::vector<Acc> acc(static_cast<std::size_t>(tri + 1), 0.0L);
    const Eigen::Index begin = static_cast<Eigen::Index>(blk) * kMomentBlock;
    const Eigen::Index end = std::min(n, begin + kMomentBlock);
    for (Eigen::Index i = begin; i < end; ++i) {
      const double y2 = data.ys[i] * data.ys[i];
      acc[0] += y2;
      const auto x = data.xs.row(i);
      for (Eigen::Index a = 0; a < p; ++a) {
        const double ya = y2 * x[a];
        for (Eigen::Index b = a; b < p; ++b) acc[static_cast<std::size_t>(1 + tri_index(a, b, p))] += ya * x[b];
      }
    }
    partial[blk] = std::move(acc);
  });

  std::vector<Acc> total(static_cast<std::size_t>(tri + 1), 0.0L);
  for (const auto& part : partial)
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += part[i];

  SecondMomentSet out;
  out.n1 = n;
  const Acc inv_n = 1.0L / static_cast<Acc>(n);
  out.m0 = static_cast<double>(total[0] * inv_n);
  out.m2 = Matrix(p, p);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = a; b < p; ++b) {
      const double v = static_cast<double>(total[static_cast<std::size_t>(1 + tri_index(a, b, p))] * inv_n / 2.0L);
      out.m2(a, b) = v;
      out.m2(b, a) = v;
    }
  out.m2.diagonal().array() -= 0.5 * out.m0;
  return out;
}

Tensor3 t_map(const Vector& u) {
  const Eigen::Index p = u.size();
  Tensor3 t(p);
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b) {
      t(a, b, b) += u[a];
      t(b, a, b) += u[a];
      t(b, b, a) += u[a];
    }
  return t;
}

Tensor3 t_map_transformed(const Vector& u, const Matrix& w) {
  if (w.rows() != u.size()) throw DimensionError("t_map_transformed: W row count must equal dim(u)");
  const Eigen::Index k = w.cols();
  const Vector g = w.transpose() * u;
  const Matrix gram = w.transpose() * w;
  Tensor3 t(k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b)
      for (Eigen::Index c = 0; c < k; ++c) t(a, b, c) = g[a] * gram(b, c) + g[b] * gram(a, c) + g[c] * gram(a, b);
  return t;
}

WhitenedThirdMoment compute_whitened_third_moment(SampleView data, const Matrix& w, int threads) {
  const Eigen::Index n = data.size();
  const Eigen::Index p = data.dim();
  if (n == 0) throw std::invalid_argument("compute_whitened_third_moment: empty sample slice");
  if (w.rows() != p)
    throw DimensionError("compute_whitened_third_moment: W has " + std::to_string(w.rows()) + " rows, expected p = " +
                         std::to_string(p));
  if (w.cols() > p) throw DimensionError("compute_whitened_third_moment: W has more columns than rows");
  const Eigen::Index k = w.cols();
  const TripleIndex idx(k);
  const std::size_t ntri = idx.triples.size();

  // Per block: [sum y^3 x (p entries), sum y^3 (W^T x)^(x)3 over sorted triples].
  const std::size_t blocks = block_count(n);
  std::vector<std::vector<Acc>> partial(blocks);
  const Matrix wt = w.transpose();
  parallel_for(blocks, threads, [&](std::size_t blk) {
    std::vector<Acc> acc(static_cast<std::size_t>(p) + ntri, 0.0L);
    const Eigen::Index begin = static_cast<Eigen::Index>(blk) * kMomentBlock;
    const Eigen::Index end = std::min(n, begin + kMomentBlock);
    Vector z(k);
    for (Eigen::Index i = begin; i < end; ++i) {
      const double y = data.ys[i];
      const double y3 = y * y * y;
      const auto x = data.xs.row(i);
      for (Eigen::Index a = 0; a < p; ++a) acc[static_cast<std::size_t>(a)] += y3 * x[a];
      z.noalias() = wt * x.transpose();
      for (std::size_t t = 0; t < ntri; ++t) {
        const auto& [a, b, c] = idx.triples[t];
        acc[static_cast<std::size_t>(p) + t] += y3 * z[a] * z[b] * z[c];
      }
    }
    partial[blk] = std::move(acc);
  });

  std::vector<Acc> total(static_cast<std::size_t>(p) + ntri, 0.0L);
  for (const auto& part : partial)
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += part[i];

  WhitenedThirdMoment out;
  out.n2 = n;
  const Acc scale = 1.0L / (6.0L * static_cast<Acc>(n));
  out.m1 = Vector(p);
  for (Eigen::Index a = 0; a < p; ++a) out.m1[a] = static_cast<double>(total[static_cast<std::size_t>(a)] * scale);

  const Tensor3 correction = t_map_transformed(out.m1, w);
  out.tilde_m3 = Tensor3(k);
  for (std::size_t t = 0; t < ntri; ++t) {
    const auto& [a, b, c] = idx.triples[t];
    const double v = static_cast<double>(total[static_cast<std::size_t>(p) + t] * scale) - correction(a, b, c);
    // Assign all orbit members from one value so the result is exactly symmetric.
    for (const auto& [x, y, zz] : {std::array{a, b, c}, std::array{a, c, b}, std::array{b, a, c},
                                   std::array{b, c, a}, std::array{c, a, b}, std::array{c, b, a}})
      out.tilde_m3(x, y, zz) = v;
  }
  return out;
}

PopulationMoments expected_moments(const MixtureParams& params) {
  PopulationMoments out;
  out.m2 = params.betas() * params.weights().asDiagonal() * params.betas().transpose();
  out.m3 = Tensor3(params.p());
  for (Eigen::Index j = 0; j < params.k(); ++j) out.m3.add_rank_one(params.beta(j), params.weights()[j]);
  return out;
}

Tensor3 expected_whitened_third_moment(const MixtureParams& params, const Matrix& w) {
  if (w.rows() != params.p()) throw DimensionError("expected_whitened_third_moment: W row count must equal p");
  Tensor3 t(w.cols());
  for (Eigen::Index j = 0; j < params.k(); ++j) t.add_rank_one(w.transpose() * params.beta(j), params.weights()[j]);
  return t;
}

}  // namespace mixlin
