#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <vector>

#include "sacmoe/actor.hpp"

namespace sacmoe {

struct MoEConfig {
  int tokens = 8;     // T
  int token_dim = 16; // d; encoder output width is tokens * token_dim
  int experts = 4;    // E
  int top_k = 2;      // k
  double noise_std = 1.0;     // router logit noise std during training
  double lambda_load = 0.01;  // load loss weight
  std::vector<int> encoder_hidden = {128, 128};

  void validate() const {
    if (tokens < 1 || token_dim < 1 || experts < 1) throw ConfigError("moe: non-positive dims");
    if (top_k < 1 || top_k > experts) throw ConfigError("moe: need 1 <= k <= experts");
    if (noise_std < 0 || lambda_load < 0) throw ConfigError("moe: negative noise/lambda");
  }
};

// Selection and weighting for a single token, given its raw logits and the
// noise that perturbs selection. The selected set is the top-k by noisy
// score (ties -> lowest expert index); weights renormalize the *noiseless*
// softmax over that set.
RouterDecision route_from_logits(const VecD& logits, const VecD& noise, int k);

// Single-token routing op. training=false skips the noise draw entirely, so
// evaluation is a deterministic function of (token, params).
template <typename T>
RouterDecision route(const Vec<T>& token, const Mat<T>& router_w, int k, bool training,
                     double noise_std, Rng& rng) {
  if (token.size() != router_w.rows()) throw ShapeMismatch("route: token dim vs router weight");
  const int experts = static_cast<int>(router_w.cols());
  VecD logits(experts);
  for (int e = 0; e < experts; ++e) {
    T acc = T(0);
    for (Eigen::Index i = 0; i < token.size(); ++i) acc += token(i) * router_w(i, e);
    logits(e) = static_cast<double>(acc);
  }
  VecD noise = VecD::Zero(experts);
  if (training)
    for (int e = 0; e < experts; ++e) noise(e) = noise_std * normal01(rng);
  return route_from_logits(logits, noise, k);
}

// Squared coefficient of variation over per-expert loads (population std).
// Degenerate all-zero batches return 0 with a warning.
double load_cv_squared(const VecD& loads);

// Expected per-expert token counts from recorded routing decisions:
// p_e(b) = Phi((noisy_e(b) - threshold_k(b)) * E), load_e = sum_b p_e(b).
VecD expected_loads(const std::vector<RouterDecision>& batch, int experts);

// The load loss of a batch of routing decisions.
double load_loss(const std::vector<RouterDecision>& batch, int experts);

// Mixture-of-experts actor: tokenizing encoder, noisy top-k router, expert
// sub-policies, and an affine action-distribution head.
template <typename T>
class MoeActorNet : public ActorNet<T> {
 public:
  MoeActorNet(int obs_dim, int act_dim, MoEConfig cfg, Rng& rng)
      : obs_dim_(obs_dim), act_dim_(act_dim), cfg_(cfg) {
    cfg_.validate();
    const int width = cfg_.tokens * cfg_.token_dim;
    std::vector<int> enc{obs_dim_};
    for (int h : cfg_.encoder_hidden) enc.push_back(h);
    enc.push_back(width);
    enc_spec_ = MlpSpec{enc, Act::Relu};
    mlp_init(this->ps_, "enc", enc_spec_, rng);

    // router is a bias-free linear map token -> expert logits
    const T rb = T(1) / std::sqrt(static_cast<T>(cfg_.token_dim));
    this->ps_.add_uniform("router.w", cfg_.token_dim, cfg_.experts, rb, rng);

    expert_spec_ = MlpSpec{{cfg_.token_dim, cfg_.token_dim, cfg_.token_dim}, Act::Relu};
    for (int e = 0; e < cfg_.experts; ++e)
      mlp_init(this->ps_, "expert" + std::to_string(e), expert_spec_, rng);

    const T hb = T(1) / std::sqrt(static_cast<T>(width));
    this->ps_.add_uniform("head.w", width, 2 * act_dim_, hb, rng);
    this->ps_.add_uniform("head.b", 1, 2 * act_dim_, hb, rng);
  }

  int obs_dim() const override { return obs_dim_; }
  int act_dim() const override { return act_dim_; }
  const MoEConfig& config() const { return cfg_; }

  std::vector<Mat<T>> draw_router_noise(int batch, Rng& rng) const override {
    std::vector<Mat<T>> out;
    out.reserve(cfg_.tokens);
    for (int t = 0; t < cfg_.tokens; ++t) {
      Mat<T> n(batch, cfg_.experts);
      for (int r = 0; r < batch; ++r)
        for (int e = 0; e < cfg_.experts; ++e) n(r, e) = static_cast<T>(cfg_.noise_std * normal01(rng));
      out.push_back(std::move(n));
    }
    return out;
  }

  // Tokenize the encoder embedding, route each token to its top-k experts,
  // aggregate weighted expert outputs, and map the concatenation to the
  // action distribution. Router decisions come back for the load loss and
  // activation logging.
  ActorForwardOut<T> forward(Tape<T>& tp, const Mat<T>& obs, bool training,
                             const std::vector<Mat<T>>* router_noise) override {
    using Ref = typename Tape<T>::Ref;
    const int B = static_cast<int>(obs.rows());
    const int d = cfg_.token_dim, E = cfg_.experts, Tn = cfg_.tokens, k = cfg_.top_k;
    if (training && router_noise && static_cast<int>(router_noise->size()) != Tn)
      throw ShapeMismatch("moe: router noise token count");

    auto& ps = this->ps_;
    auto emb = mlp_forward(tp, tp.constant(obs), ps, "enc", enc_spec_);
    auto router_w = tp.param(ps, ps.require("router.w"));

    ActorForwardOut<T> out;
    out.decisions.resize(static_cast<size_t>(B) * Tn);

    std::vector<Ref> token_outs(Tn);
    Ref loads;  // 1 x E accumulated expected loads (training only)
    for (int t = 0; t < Tn; ++t) {
      auto tok = tp.slice_cols(emb, t * d, d);
      auto logits = tp.matmul(tok, router_w);  // B x E

      Mat<T> noise = Mat<T>::Zero(B, E);
      if (training && router_noise) noise = (*router_noise)[t];
      Ref noisy = logits;
      if (training) noisy = tp.add(logits, tp.constant(noise));

      // host-side selection per row
      Mat<T> sel_mask = Mat<T>::Constant(B, E, T(-1e9));
      std::vector<int> thresh_idx(B);
      const Mat<T>& logit_vals = tp.val(logits);
      for (int r = 0; r < B; ++r) {
        VecD lg(E), nz(E);
        for (int e = 0; e < E; ++e) {
          lg(e) = static_cast<double>(logit_vals(r, e));
          nz(e) = static_cast<double>(noise(r, e));
        }
        RouterDecision dec = route_from_logits(lg, nz, k);
        for (int e : dec.selected) sel_mask(r, e) = T(0);
        thresh_idx[r] = dec.selected[k - 1];
        out.decisions[static_cast<size_t>(r) * Tn + t] = std::move(dec);
      }

      // renormalized noiseless weights over the selected set: softmax with
      // unselected logits pushed to -inf
      auto weights = tp.softmax_rows(tp.add(logits, tp.constant(sel_mask)));  // B x E

      // weighted sum of expert outputs; unselected experts carry zero weight
      Ref agg;
      for (int e = 0; e < E; ++e) {
        auto y_e = mlp_forward(tp, tok, ps, "expert" + std::to_string(e), expert_spec_);
        auto w_e = tp.slice_cols(weights, e, 1);  // B x 1
        auto contrib = tp.mul(y_e, w_e);
        agg = (e == 0) ? contrib : tp.add(agg, contrib);
      }
      token_outs[t] = agg;

      if (training) {
        // expected selection probabilities under fresh noise ~ N(0, 1/E^2)
        auto thresh = tp.gather_cols(noisy, thresh_idx);  // B x 1
        auto p = tp.normal_cdf_scaled(tp.sub(noisy, thresh), static_cast<T>(E));
        auto tok_loads = tp.col_sum(p);  // 1 x E
        loads = (t == 0) ? tok_loads : tp.add(loads, tok_loads);
      }
    }

    auto y = tp.concat_cols(token_outs);  // B x (T*d)
    auto head_w = tp.param(ps, ps.require("head.w"));
    auto head_b = tp.param(ps, ps.require("head.b"));
    auto dist = tp.add(tp.matmul(y, head_w), head_b);
    out.mean = tp.slice_cols(dist, 0, act_dim_);
    out.log_std_raw = tp.slice_cols(dist, act_dim_, act_dim_);

    if (training) {
      const Mat<T>& lv = tp.val(loads);
      if (lv.cwiseAbs().maxCoeff() == T(0)) {
        std::cerr << "[moe] warning: degenerate batch, all expected loads zero\n";
        out.load_cv = tp.constant_scalar(T(0));
      } else {
        auto m = tp.mean(loads);
        auto var = tp.mean(tp.square(tp.sub(loads, m)));  // population variance
        out.load_cv = tp.div(var, tp.square(m));
      }
    }
    return out;
  }

  nlohmann::json arch_meta() const override {
    return {{"kind", "moe"},
            {"obs_dim", obs_dim_},
            {"act_dim", act_dim_},
            {"tokens", cfg_.tokens},
            {"token_dim", cfg_.token_dim},
            {"experts", cfg_.experts},
            {"top_k", cfg_.top_k},
            {"noise_std", cfg_.noise_std},
            {"lambda_load", cfg_.lambda_load},
            {"encoder_hidden", cfg_.encoder_hidden}};
  }

 private:
  int obs_dim_, act_dim_;
  MoEConfig cfg_;
  MlpSpec enc_spec_, expert_spec_;
};

}  // namespace sacmoe
