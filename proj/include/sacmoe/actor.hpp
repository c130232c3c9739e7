#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "sacmoe/gaussian.hpp"
#include "sacmoe/nn.hpp"
#include "sacmoe/params.hpp"
#include "sacmoe/rng.hpp"
#include "sacmoe/tape.hpp"

namespace sacmoe {

// Per-token routing record: raw logits, the noise that entered selection,
// softmax probabilities, the selected expert set with renormalized weights,
// and the k-th largest noisy score (the load-loss threshold).
struct RouterDecision {
  VecD logits;
  VecD noise;
  VecD probs;                 // softmax of the raw logits
  std::vector<int> selected;  // k indices, descending noisy score, ties -> lowest index
  VecD weights;               // renormalized probs over selected, sums to 1
  double threshold = 0;
};

template <typename T>
struct ActorForwardOut {
  typename Tape<T>::Ref mean;         // B x A, pre-squash
  typename Tape<T>::Ref log_std_raw;  // B x A, pre-clamp
  typename Tape<T>::Ref load_cv;      // scalar load loss; invalid for plain actors
  std::vector<RouterDecision> decisions;  // row-major [row * T + token]; empty for plain actors
};

// Policy network interface shared by the trainer (float) and the gradient
// checks (double). Stochastic inputs are supplied by the caller: eps for the
// action draw, router_noise for noisy top-k selection (training only).
template <typename T>
class ActorNet {
 public:
  virtual ~ActorNet() = default;

  virtual int obs_dim() const = 0;
  virtual int act_dim() const = 0;

  virtual ActorForwardOut<T> forward(Tape<T>& tp, const Mat<T>& obs, bool training,
                                     const std::vector<Mat<T>>* router_noise) = 0;

  // Pre-draws the router noise a training forward of the given batch size
  // consumes (one B x E matrix per token). Plain actors need none.
  virtual std::vector<Mat<T>> draw_router_noise(int /*batch*/, Rng& /*rng*/) const { return {}; }

  ParamStore<T>& params() { return ps_; }
  const ParamStore<T>& params() const { return ps_; }

  virtual nlohmann::json arch_meta() const = 0;

 protected:
  ParamStore<T> ps_;
};

// Plain SAC actor: MLP trunk with an affine (mean, log-std) head.
template <typename T>
class MlpActorNet : public ActorNet<T> {
 public:
  MlpActorNet(int obs_dim, int act_dim, std::vector<int> hidden, Rng& rng)
      : obs_dim_(obs_dim), act_dim_(act_dim), hidden_(std::move(hidden)) {
    std::vector<int> widths;
    widths.push_back(obs_dim_);
    for (int h : hidden_) widths.push_back(h);
    widths.push_back(2 * act_dim_);
    spec_ = MlpSpec{widths, Act::Relu};
    mlp_init(this->ps_, "pi", spec_, rng);
  }

  int obs_dim() const override { return obs_dim_; }
  int act_dim() const override { return act_dim_; }

  ActorForwardOut<T> forward(Tape<T>& tp, const Mat<T>& obs, bool, const std::vector<Mat<T>>*) override {
    auto out = mlp_forward(tp, tp.constant(obs), this->ps_, "pi", spec_);
    ActorForwardOut<T> r;
    r.mean = tp.slice_cols(out, 0, act_dim_);
    r.log_std_raw = tp.slice_cols(out, act_dim_, act_dim_);
    return r;
  }

  nlohmann::json arch_meta() const override {
    return {{"kind", "mlp"}, {"obs_dim", obs_dim_}, {"act_dim", act_dim_}, {"hidden", hidden_}};
  }

 private:
  int obs_dim_, act_dim_;
  std::vector<int> hidden_;
  MlpSpec spec_;
};

// Single-state action helper. deterministic -> tanh(mean); otherwise a
// reparameterized draw with eps from rng. training controls router noise for
// MoE actors (noise draws precede the eps draw in the rng schedule). Returns
// the normalized action in (-1, 1)^A.
template <typename T>
VecD actor_act(ActorNet<T>& actor, const VecD& obs, bool deterministic, bool training, Rng& rng,
               std::vector<RouterDecision>* decisions_out = nullptr) {
  Tape<T> tp;
  Mat<T> obs_m(1, obs.size());
  for (Eigen::Index i = 0; i < obs.size(); ++i) obs_m(0, i) = static_cast<T>(obs(i));

  std::vector<Mat<T>> noise;
  if (training) noise = actor.draw_router_noise(1, rng);
  auto fwd = actor.forward(tp, obs_m, training, noise.empty() ? nullptr : &noise);
  if (decisions_out) *decisions_out = fwd.decisions;

  const int A = actor.act_dim();
  VecD a(A);
  if (deterministic) {
    for (int j = 0; j < A; ++j) a(j) = std::tanh(static_cast<double>(tp.val(fwd.mean)(0, j)));
    return a;
  }
  Mat<T> eps(1, A);
  for (int j = 0; j < A; ++j) eps(0, j) = static_cast<T>(normal01(rng));
  auto s = sample_squashed_gaussian(tp, fwd.mean, fwd.log_std_raw, eps);
  for (int j = 0; j < A; ++j) a(j) = static_cast<double>(tp.val(s.action)(0, j));
  return a;
}

}  // namespace sacmoe
