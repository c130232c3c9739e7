#pragma once

#include <cmath>
#include <string>
#include <type_traits>

#include "sacmoe/actor.hpp"
#include "sacmoe/errors.hpp"
#include "sacmoe/nn.hpp"
#include "sacmoe/params.hpp"

namespace sacmoe {

struct SACConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double lr = 3e-4;
  double alpha_init = 0.2;
  bool auto_alpha = true;
  double target_entropy = 0;  // 0 -> defaults to -act_dim
  int batch_size = 256;
  std::size_t buffer_capacity = 1'000'000;
  int warmup_steps = 5000;
  int updates_per_step = 1;
  double lambda_load = 0.01;
  int critic_hidden = 256;
  std::vector<int> actor_hidden = {256, 256};

  void validate() const {
    if (gamma <= 0 || gamma >= 1) throw ConfigError("sac: gamma must be in (0,1)");
    if (tau <= 0 || tau > 1) throw ConfigError("sac: tau must be in (0,1]");
    if (alpha_init < 0) throw ConfigError("sac: alpha must be >= 0");
    if (batch_size < 1 || buffer_capacity < static_cast<std::size_t>(batch_size))
      throw ConfigError("sac: batch/buffer sizes");
  }
};

// ----- twin critics ----- //

template <typename T>
MlpSpec critic_spec(int obs_dim, int act_dim, int hidden) {
  return MlpSpec{{obs_dim + act_dim, hidden, hidden, 1}, Act::Relu};
}

template <typename T>
void critics_init(ParamStore<T>& ps, int obs_dim, int act_dim, int hidden, Rng& rng) {
  mlp_init(ps, "q1", critic_spec<T>(obs_dim, act_dim, hidden), rng);
  mlp_init(ps, "q2", critic_spec<T>(obs_dim, act_dim, hidden), rng);
}

// Q(s, a) with the action supplied as a tape node (gradients flow into it).
template <typename T>
typename Tape<T>::Ref critic_forward(Tape<T>& tp, ParamStore<T>& ps, const std::string& name,
                                     typename Tape<T>::Ref obs, typename Tape<T>::Ref act, int obs_dim,
                                     int act_dim, int hidden) {
  auto x = tp.concat_cols({obs, act});
  return mlp_forward(tp, x, ps, name, critic_spec<T>(obs_dim, act_dim, hidden));
}

// ----- targets and losses ----- //

// y = r + gamma * (1 - done) * (min_i Q'_i(s', a') - alpha * log pi(a'|s'))
// with a' freshly sampled from the current actor at s'. Pure value
// computation on a throwaway tape.
template <typename T>
Vec<T> critic_targets(ActorNet<T>& actor, ParamStore<T>& target_critics, const Mat<T>& next_obs,
                      const Vec<T>& rew, const Vec<T>& done, std::type_identity_t<T> alpha,
                      std::type_identity_t<T> gamma, int critic_hidden, Rng& rng) {
  Tape<T> tp;
  const int B = static_cast<int>(next_obs.rows());
  const int A = actor.act_dim();

  auto noise = actor.draw_router_noise(B, rng);
  auto fwd = actor.forward(tp, next_obs, true, noise.empty() ? nullptr : &noise);
  Mat<T> eps(B, A);
  for (int r = 0; r < B; ++r)
    for (int j = 0; j < A; ++j) eps(r, j) = static_cast<T>(normal01(rng));
  auto s = sample_squashed_gaussian(tp, fwd.mean, fwd.log_std_raw, eps);

  auto obs_c = tp.constant(next_obs);
  auto q1 = critic_forward(tp, target_critics, "q1", obs_c, s.action, actor.obs_dim(), A, critic_hidden);
  auto q2 = critic_forward(tp, target_critics, "q2", obs_c, s.action, actor.obs_dim(), A, critic_hidden);
  auto qmin = tp.min_elem(q1, q2);

  const Mat<T>& q = tp.val(qmin);
  const Mat<T>& lp = tp.val(s.log_prob);
  Vec<T> y(B);
  for (int r = 0; r < B; ++r)
    y(r) = rew(r) + gamma * (T(1) - done(r)) * (q(r, 0) - alpha * lp(r, 0));
  return y;
}

// Elementwise double-Q target for a single transition; the spec-level value
// rule, shared with tests.
inline double critic_target_value(double r, double gamma, double done, double min_q, double alpha,
                                  double log_pi) {
  return r + gamma * (1.0 - done) * (min_q - alpha * log_pi);
}

// MSE of both critics against fixed targets.
template <typename T>
typename Tape<T>::Ref assemble_critic_loss(Tape<T>& tp, ParamStore<T>& critics, const Mat<T>& obs,
                                           const Mat<T>& act, const Vec<T>& targets, int obs_dim,
                                           int act_dim, int hidden) {
  auto obs_c = tp.constant(obs);
  auto act_c = tp.constant(act);
  auto q1 = critic_forward(tp, critics, "q1", obs_c, act_c, obs_dim, act_dim, hidden);
  auto q2 = critic_forward(tp, critics, "q2", obs_c, act_c, obs_dim, act_dim, hidden);
  Mat<T> y(targets.size(), 1);
  y.col(0) = targets;
  auto yc = tp.constant(y);
  auto l1 = tp.mean(tp.square(tp.sub(q1, yc)));
  auto l2 = tp.mean(tp.square(tp.sub(q2, yc)));
  return tp.add(l1, l2);
}

template <typename T>
struct ActorLoss {
  typename Tape<T>::Ref total;
  double sac_term = 0;   // mean(alpha * log pi - min Q)
  double load_term = 0;  // load CV^2 (unweighted)
  double entropy = 0;    // -mean log pi
  std::vector<RouterDecision> decisions;
};

// L(theta) = mean(alpha * log pi(a|s) - min_i Q_i(s, a)) + lambda_load * L_load
// with a resampled via the reparameterization at the batch states. eps and
// router_noise are caller-drawn so the loss is a deterministic function of
// (params, batch, draws) — which is what the finite-difference oracle needs.
template <typename T>
ActorLoss<T> assemble_actor_loss(Tape<T>& tp, ActorNet<T>& actor, ParamStore<T>& critics,
                                 const Mat<T>& obs, std::type_identity_t<T> alpha,
                                 std::type_identity_t<T> lambda_load, const Mat<T>& eps,
                                 std::type_identity_t<const std::vector<Mat<T>>*> router_noise,
                                 int critic_hidden) {
  auto fwd = actor.forward(tp, obs, true, router_noise);
  auto s = sample_squashed_gaussian(tp, fwd.mean, fwd.log_std_raw, eps);

  auto obs_c = tp.constant(obs);
  auto q1 = critic_forward(tp, critics, "q1", obs_c, s.action, actor.obs_dim(), actor.act_dim(),
                           critic_hidden);
  auto q2 = critic_forward(tp, critics, "q2", obs_c, s.action, actor.obs_dim(), actor.act_dim(),
                           critic_hidden);
  auto qmin = tp.min_elem(q1, q2);

  auto sac = tp.mean(tp.sub(tp.affine_const(s.log_prob, alpha, T(0)), qmin));

  ActorLoss<T> out;
  out.decisions = std::move(fwd.decisions);
  out.sac_term = static_cast<double>(tp.val(sac)(0, 0));
  out.entropy = -static_cast<double>(tp.val(s.log_prob).mean());
  if (fwd.load_cv.valid() && lambda_load != T(0)) {
    out.load_term = static_cast<double>(tp.val(fwd.load_cv)(0, 0));
    out.total = tp.add(sac, tp.affine_const(fwd.load_cv, lambda_load, T(0)));
  } else {
    if (fwd.load_cv.valid()) out.load_term = static_cast<double>(tp.val(fwd.load_cv)(0, 0));
    out.total = sac;
  }
  return out;
}

}  // namespace sacmoe
