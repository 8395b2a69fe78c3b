#pragma once

#include "mixlin/types.hpp"

#include <vector>

namespace mixlin {

/// Dense cubic third-order tensor of shape d x d x d, stored with the last
/// index fastest. Intended for small d (the whitened dimension k, or p in
/// test oracles).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Eigen::Index dim);

  /// v (x) v (x) v scaled by weight.
  static Tensor3 rank_one(const Vector& v, double weight = 1.0);

  Eigen::Index dim() const { return dim_; }

  double& operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) {
    return data_[static_cast<std::size_t>((a * dim_ + b) * dim_ + c)];
  }
  double operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) const {
    return data_[static_cast<std::size_t>((a * dim_ + b) * dim_ + c)];
  }

  const std::vector<double>& data() const { return data_; }

  /// this += weight * v (x) v (x) v
  void add_rank_one(const Vector& v, double weight);

  /// T(I, u, v): the vector with a-th entry sum_{b,c} T(a,b,c) u_b v_c.
  Vector apply(const Vector& u, const Vector& v) const;

  /// T(v, v, v).
  double evaluate(const Vector& v) const;

  /// Multilinear transform T(W, W, W) for a dim x m matrix W; result is m x m x m.
  Tensor3 transform(const Matrix& w) const;

  /// Largest absolute difference between an entry and any of its index
  /// permutations, relative to the largest absolute entry.
  double symmetry_defect() const;

  double max_abs() const;
  double frobenius_norm() const;

  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator-=(const Tensor3& other);
  Tensor3& operator*=(double s);

  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Tensor3 a, double s) { return a *= s; }
  friend Tensor3 operator*(double s, Tensor3 a) { return a *= s; }

 private:
  Eigen::Index dim_ = 0;
  std::vector<double> data_;
};

/// Estimate of the operator norm sup_{|v|=1} |T(v,v,v)| of a symmetric tensor,
/// from power iteration on T and -T with `restarts` random starts each. This
/// is a lower bound on the true norm that is tight in practice for small dim.
double symmetric_operator_norm(const Tensor3& t, int restarts, Seed seed, int iterations = 100);

}  // namespace mixlin
