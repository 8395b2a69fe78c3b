#pragma once

#include "mixlin/model.hpp"
#include "mixlin/tensor.hpp"
#include "mixlin/types.hpp"

namespace mixlin {

/// m0 = (1/n) sum y^2 and M2 = (1/2n) sum y^2 x x^T - (m0/2) I.
struct SecondMomentSet {
  double m0 = 0.0;
  Matrix m2;
  Eigen::Index n1 = 0;
};

/// m1 = (1/6n) sum y^3 x and the third moment M3 contracted as M3(W, W, W).
struct WhitenedThirdMoment {
  Tensor3 tilde_m3;
  Vector m1;
  Eigen::Index n2 = 0;
};

struct PopulationMoments {
  Matrix m2;   // sum_j w_j b_j b_j^T
  Tensor3 m3;  // sum_j w_j b_j^(x)3
};

/// Samples are accumulated in fixed-size blocks with extended-precision sums
/// and the block sums are merged in block order, so the result is bitwise
/// independent of `threads`.
inline constexpr Eigen::Index kMomentBlock = 4096;

SecondMomentSet compute_second_moments(SampleView data, int threads = 1);

/// T(u)_{abc} = u_a [b = c] + u_b [a = c] + u_c [a = b].
Tensor3 t_map(const Vector& u);

/// T(u)(W, W, W) without forming the p^3 tensor:
/// entry (a,b,c) = g_a G_bc + g_b G_ac + g_c G_ab with g = W^T u, G = W^T W.
Tensor3 t_map_transformed(const Vector& u, const Matrix& w);

/// Whitened third moment from whitened covariates W^T x_i; never builds a
/// p x p x p array. Cost O(n (p k + k^3)).
WhitenedThirdMoment compute_whitened_third_moment(SampleView data, const Matrix& w, int threads = 1);

/// Exact population moments (dense p^3 tensor; intended for small p).
PopulationMoments expected_moments(const MixtureParams& params);

/// sum_j w_j (W^T b_j)^(x)3, the whitened population third moment.
Tensor3 expected_whitened_third_moment(const MixtureParams& params, const Matrix& w);

}  // namespace mixlin
