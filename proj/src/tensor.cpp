#include "mixlin/tensor.hpp"

#include "mixlin/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mixlin {

Tensor3::Tensor3(Eigen::Index dim)
    : dim_(dim), data_(static_cast<std::size_t>(dim * dim * dim), 0.0) {
  if (dim < 0) throw DimensionError("Tensor3: negative dimension");
}

Tensor3 Tensor3::rank_one(const Vector& v, double weight) {
  Tensor3 t(v.size());
  t.add_rank_one(v, weight);
  return t;
}

void Tensor3::add_rank_one(const Vector& v, double weight) {
  if (v.size() != dim_) throw DimensionError("Tensor3::add_rank_one: dimension mismatch");
  for (Eigen::Index a = 0; a < dim_; ++a) {
    const double wa = weight * v[a];
    for (Eigen::Index b = 0; b < dim_; ++b) {
      const double wab = wa * v[b];
      for (Eigen::Index c = 0; c < dim_; ++c) (*this)(a, b, c) += wab * v[c];
    }
  }
}

Vector Tensor3::apply(const Vector& u, const Vector& v) const {
  if (u.size() != dim_ || v.size() != dim_)
    throw DimensionError("Tensor3::apply: vector dimension does not match tensor");
  Vector out = Vector::Zero(dim_);
  for (Eigen::Index a = 0; a < dim_; ++a) {
    double acc = 0.0;
    for (Eigen::Index b = 0; b < dim_; ++b) {
      double inner = 0.0;
      for (Eigen::Index c = 0; c < dim_; ++c) inner += (*this)(a, b, c) * v[c];
      acc += u[b] * inner;
    }
    out[a] = acc;
  }
  return out;
}

double Tensor3::evaluate(const Vector& v) const { return v.dot(apply(v, v)); }

Tensor3 Tensor3::transform(const Matrix& w) const {
  if (w.rows() != dim_) throw DimensionError("Tensor3::transform: W row count must equal tensor dimension");
  const Eigen::Index m = w.cols();
  const Eigen::Index d = dim_;
  // Contract one mode at a time: d^3 m + d^2 m^2 + d m^3.
  std::vector<double> s1(static_cast<std::size_t>(d * d * m), 0.0);  // (a, b, z)
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b)
      for (Eigen::Index z = 0; z < m; ++z) {
        double acc = 0.0;
        for (Eigen::Index c = 0; c < d; ++c) acc += (*this)(a, b, c) * w(c, z);
        s1[static_cast<std::size_t>((a * d + b) * m + z)] = acc;
      }
  std::vector<double> s2(static_cast<std::size_t>(d * m * m), 0.0);  // (a, y, z)
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index y = 0; y < m; ++y)
      for (Eigen::Index z = 0; z < m; ++z) {
        double acc = 0.0;
        for (Eigen::Index b = 0; b < d; ++b) acc += s1[static_cast<std::size_t>((a * d + b) * m + z)] * w(b, y);
        s2[static_cast<std::size_t>((a * m + y) * m + z)] = acc;
      }
  Tensor3 out(m);
  for (Eigen::Index x = 0; x < m; ++x)
    for (Eigen::Index y = 0; y < m; ++y)
      for (Eigen::Index z = 0; z < m; ++z) {
        double acc = 0.0;
        for (Eigen::Index a = 0; a < d; ++a) acc += s2[static_cast<std::size_t>((a * m + y) * m + z)] * w(a, x);
        out(x, y, z) = acc;
      }
  return out;
}

double Tensor3::symmetry_defect() const {
  double worst = 0.0;
  for (Eigen::Index a = 0; a < dim_; ++a)
    for (Eigen::Index b = 0; b < dim_; ++b)
      for (Eigen::Index c = 0; c < dim_; ++c) {
        const double x = (*this)(a, b, c);
        for (double y : {(*this)(a, c, b), (*this)(b, a, c), (*this)(b, c, a), (*this)(c, a, b), (*this)(c, b, a)})
          worst = std::max(worst, std::abs(x - y));
      }
  const double scale = max_abs();
  return scale > 0.0 ? worst / scale : 0.0;
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::abs(x));
  return m;
}

double Tensor3::frobenius_norm() const {
  double s = 0.0;
  for (double x : data_) s += x * x;
  return std::sqrt(s);
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  if (other.dim_ != dim_) throw DimensionError("Tensor3: dimension mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
  if (other.dim_ != dim_) throw DimensionError("Tensor3: dimension mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

double symmetric_operator_norm(const Tensor3& t, int restarts, Seed seed, int iterations) {
  const Eigen::Index d = t.dim();
  if (d == 0) return 0.0;
  Rng rng(seed);
  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    Vector v = rng.unit_vector(d);
    best = std::max(best, std::abs(t.evaluate(v)));
    for (double sign : {1.0, -1.0}) {
      Vector u = v;
      for (int it = 0; it < iterations; ++it) {
        Vector next = sign * t.apply(u, u);
        const double nrm = next.norm();
        if (nrm < 1e-300) break;
        u = next / nrm;
        best = std::max(best, std::abs(t.evaluate(u)));
      }
    }
  }
  return best;
}

}  // namespace mixlin
