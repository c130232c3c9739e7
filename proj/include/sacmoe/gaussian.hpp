#pragma once

#include <cmath>

#include "sacmoe/tape.hpp"

namespace sacmoe {

// log-std clamp bounds, shared by every policy head
inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;
inline constexpr double kLogTwoPi = 1.8378770664093454836;

template <typename T>
struct SquashedSample {
  typename Tape<T>::Ref action;    // B x A, in (-1, 1)
  typename Tape<T>::Ref log_prob;  // B x 1
  typename Tape<T>::Ref mean;      // raw (pre-squash) mean, B x A
  typename Tape<T>::Ref log_std;   // clamped, B x A
};

// Reparameterized tanh-squashed Gaussian. eps is a caller-supplied B x A
// standard-normal draw so the sample is a deterministic function of
// (params, input, eps); gradients flow through mean and log_std.
// log_prob includes the tanh Jacobian correction.
template <typename T>
SquashedSample<T> sample_squashed_gaussian(Tape<T>& tp, typename Tape<T>::Ref mean,
                                           typename Tape<T>::Ref log_std_raw, const Mat<T>& eps) {
  const auto& mu = tp.val(mean);
  if (mu.rows() != eps.rows() || mu.cols() != eps.cols())
    throw ShapeMismatch("sample_squashed_gaussian: eps shape");

  auto log_std = tp.clamp(log_std_raw, T(kLogStdMin), T(kLogStdMax));
  auto std = tp.exp(log_std);
  auto eps_c = tp.constant(eps);
  auto u = tp.add(mean, tp.mul(std, eps_c));  // pre-squash sample
  auto action = tp.tanh(u);

  // Gaussian log density of u under (mean, std). Built through the graph so
  // the same expression serves value checks and gradient checks.
  auto z = tp.div(tp.sub(u, mean), std);
  auto gauss = tp.sub(tp.affine_const(tp.square(z), T(-0.5), T(-0.5 * kLogTwoPi)), log_std);

  // tanh correction: -log(1 - a^2 + eps)
  auto one_minus_a2 = tp.affine_const(tp.square(action), T(-1), T(1 + kSquashEps));
  auto corr = tp.log(one_minus_a2);
  auto per_dim = tp.sub(gauss, corr);
  auto log_prob = tp.row_sum(per_dim);
  return {action, log_prob, mean, log_std};
}

// Scalar host-side density of a squashed sample: used by analysis code and
// tests. a must be strictly inside (-1, 1).
inline double squashed_log_prob_1d(double mean, double log_std, double a) {
  double ls = std::min(std::max(log_std, kLogStdMin), kLogStdMax);
  double std = std::exp(ls);
  double u = std::atanh(a);
  double z = (u - mean) / std;
  return -0.5 * z * z - ls - 0.5 * kLogTwoPi - std::log(1.0 - a * a + kSquashEps);
}

}  // namespace sacmoe
