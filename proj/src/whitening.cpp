#include "mixlin/whitening.hpp"

#include <algorithm>
#include <array>
#include <string>
#include <vector>

namespace mixlin {

namespace {

double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()[0];
}

}  // namespace

double eigen_floor(double largest_eigenvalue) { return std::max(1e-10, 1e-8 * largest_eigenvalue); }

Whitener whiten(const Matrix& m2, Eigen::Index k) {
  const Eigen::Index p = m2.rows();
  if (m2.cols() != p) throw DimensionError("whiten: input must be square");
  if (k < 1 || k > p)
    throw DimensionError("whiten: target rank " + std::to_string(k) + " outside [1, " + std::to_string(p) + "]");

  const Matrix sym = 0.5 * (m2 + m2.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw NumericalError("whiten: eigendecomposition did not converge");

  Whitener out;
  out.spectrum = eig.eigenvalues().reverse();
  const double floor = eigen_floor(out.spectrum[0]);
  if (!(out.spectrum[k - 1] > floor)) {
    std::vector<double> spec(out.spectrum.data(), out.spectrum.data() + p);
    throw RankDeficiencyError("whiten: eigenvalue " + std::to_string(k) + " = " + std::to_string(out.spectrum[k - 1]) +
                                  " is not above the floor " + std::to_string(floor),
                              std::move(spec));
  }
  out.sigma = out.spectrum.head(k);
  out.rank_gap = out.spectrum[k - 1] - (k < p ? out.spectrum[k] : 0.0);

  out.u = eig.eigenvectors().rightCols(k).rowwise().reverse();
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::Index idx = 0;
    out.u.col(j).cwiseAbs().maxCoeff(&idx);
    if (out.u(idx, j) < 0.0) out.u.col(j) = -out.u.col(j);
  }
  out.w = out.u * out.sigma.cwiseSqrt().cwiseInverse().asDiagonal();
  const Matrix gram = out.w.transpose() * out.w;
  out.w_pinv_t = out.w * gram.ldlt().solve(Matrix::Identity(k, k));
  return out;
}

WhiteningProbe whitening_stability_probe(const Matrix& a, const Matrix& a_hat, Eigen::Index k) {
  WhiteningProbe probe;
  const Whitener ref = whiten(a, k);
  probe.alpha = op_norm(a - a_hat) / ref.sigma[k - 1];
  probe.precondition_met = probe.alpha < 1.0 / 3.0;
  if (!probe.precondition_met) return probe;

  const Whitener est = whiten(a_hat, k);
  // R = argmin_{R orthogonal} |W - W_hat R|_F.
  Eigen::JacobiSVD<Matrix> svd(est.w.transpose() * ref.w, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix rot = svd.matrixU() * svd.matrixV().transpose();
  const Matrix w_hat = est.w * rot;
  const Matrix w_hat_pinv = rot.transpose() * est.w_pinv();

  const double w_norm = op_norm(ref.w);
  const double w_pinv_norm = op_norm(ref.w_pinv());
  probe.lhs = {op_norm(w_hat), op_norm(w_hat_pinv), op_norm(ref.w - w_hat), op_norm(ref.w_pinv() - w_hat_pinv)};
  probe.rhs = {2.0 * w_norm, 2.0 * w_pinv_norm, 2.0 * probe.alpha * w_norm, 2.0 * probe.alpha * w_pinv_norm};
  probe.bounds_hold = true;
  for (std::size_t i = 0; i < 4; ++i)
    probe.bounds_hold = probe.bounds_hold && probe.lhs[i] <= probe.rhs[i] * (1.0 + 1e-12) + 1e-14;
  return probe;
}

}  // namespace mixlin
