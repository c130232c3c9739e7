#include "sacmoe/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace sacmoe {

ModelKind parse_model(const std::string& name) {
  if (name == "sac" || name == "SAC") return ModelKind::Sac;
  if (name == "sac_moe" || name == "sac-moe" || name == "SAC-MoE") return ModelKind::SacMoe;
  if (name == "sac_uptrue" || name == "sac-uptrue" || name == "SAC-UPTrue") return ModelKind::SacUPTrue;
  throw ConfigError("unknown model kind: " + name);
}

std::string model_name(ModelKind k) {
  switch (k) {
    case ModelKind::Sac: return "sac";
    case ModelKind::SacMoe: return "sac_moe";
    case ModelKind::SacUPTrue: return "sac_uptrue";
  }
  return "?";
}

std::unique_ptr<ActorNet<float>> make_actor_from_meta(const nlohmann::json& meta, Rng& rng) {
  const std::string kind = meta.at("kind").get<std::string>();
  const int obs_dim = meta.at("obs_dim").get<int>();
  const int act_dim = meta.at("act_dim").get<int>();
  if (kind == "mlp") {
    return std::make_unique<MlpActorNet<float>>(obs_dim, act_dim,
                                                meta.at("hidden").get<std::vector<int>>(), rng);
  }
  if (kind == "moe") {
    MoEConfig cfg;
    cfg.tokens = meta.at("tokens").get<int>();
    cfg.token_dim = meta.at("token_dim").get<int>();
    cfg.experts = meta.at("experts").get<int>();
    cfg.top_k = meta.at("top_k").get<int>();
    cfg.noise_std = meta.at("noise_std").get<double>();
    cfg.lambda_load = meta.at("lambda_load").get<double>();
    cfg.encoder_hidden = meta.at("encoder_hidden").get<std::vector<int>>();
    return std::make_unique<MoeActorNet<float>>(obs_dim, act_dim, cfg, rng);
  }
  throw CheckpointVersionMismatch("unknown actor kind in checkpoint: " + kind);
}

Trainer::Trainer(std::unique_ptr<Env> env, std::vector<Context> contexts, TrainerOptions opt)
    : opt_(opt),
      env_(std::move(env)),
      contexts_(std::move(contexts)),
      replay_(opt.sac.buffer_capacity,
              env_->observation_dim() +
                  (opt.model == ModelKind::SacUPTrue
                       ? static_cast<int>(contexts_.empty() ? 1 : contexts_[0].modes[0].mu.size())
                       : 0),
              env_->action_dim()),
      curriculum_(opt.curriculum, static_cast<int>(contexts_.size())) {
  opt_.sac.validate();
  if (contexts_.empty()) throw ConfigError("trainer: empty context set");
  for (const auto& c : contexts_) c.validate();

  augment_mu_ = opt_.model == ModelKind::SacUPTrue;
  mu_dim_ = static_cast<int>(contexts_[0].modes[0].mu.size());
  act_dim_ = env_->action_dim();
  obs_dim_ = env_->observation_dim() + (augment_mu_ ? mu_dim_ : 0);
  if (opt_.sac.target_entropy == 0) opt_.sac.target_entropy = -static_cast<double>(act_dim_);

  Rng init_rng = make_stream(opt_.seed, {0x1417u});
  if (opt_.model == ModelKind::SacMoe) {
    MoEConfig moe = opt_.moe;
    actor_ = std::make_unique<MoeActorNet<float>>(obs_dim_, act_dim_, moe, init_rng);
  } else {
    actor_ = std::make_unique<MlpActorNet<float>>(obs_dim_, act_dim_, opt_.sac.actor_hidden, init_rng);
  }
  critics_init(critics_, obs_dim_, act_dim_, opt_.sac.critic_hidden, init_rng);
  Rng dummy(0);
  critics_init(targets_, obs_dim_, act_dim_, opt_.sac.critic_hidden, dummy);
  copy_params(targets_, critics_);
  log_alpha_.add("log_alpha", 1, 1);
  log_alpha_.value("log_alpha")(0, 0) = std::log(std::max(opt_.sac.alpha_init, 1e-8));

  rng_action_ = make_stream(opt_.seed, {0xac7u});
  rng_update_ = make_stream(opt_.seed, {0x0bdu});
  rng_batch_ = make_stream(opt_.seed, {0xba7c4u});
  rng_curr_ = make_stream(opt_.seed, {0xcc0u});

  if (!opt_.metrics_path.empty())
    metrics_out_ = std::make_unique<std::ofstream>(opt_.metrics_path, std::ios::app);
  if (!opt_.curriculum_trace_path.empty())
    trace_out_ = std::make_unique<std::ofstream>(opt_.curriculum_trace_path, std::ios::app);
}

double Trainer::alpha() const {
  return std::exp(static_cast<double>(log_alpha_.value(log_alpha_.require("log_alpha"))(0, 0)));
}

std::uint64_t Trainer::episode_seed(int ctx_id, long episode_index) const {
  std::uint64_t s = mix64(opt_.seed ^ 0x5eedu);
  s = mix64(s ^ static_cast<std::uint64_t>(ctx_id));
  s = mix64(s ^ static_cast<std::uint64_t>(episode_index));
  return s;
}

VecD Trainer::observe_augmented(const VecD& obs) const {
  if (!augment_mu_) return obs;
  VecD mu = env_->current_mu();
  VecD out(obs.size() + mu.size());
  out << obs, mu;
  return out;
}

void Trainer::train(long additional_env_steps) {
  const long target = env_steps_ + additional_env_steps;
  while (env_steps_ < target) run_episode();
}

void Trainer::run_episode() {
  const int ctx_id = curriculum_.sample_context(rng_curr_);
  VecD obs = env_->reset(contexts_[ctx_id], episode_seed(ctx_id, episodes_));
  obs = observe_augmented(obs);
  const VecD scale = env_->action_scale();

  double ep_ret = 0;
  long len = 0;
  double actor_acc = 0, critic_acc = 0, load_acc = 0;
  long n_updates = 0;

  while (true) {
    VecD a_norm(act_dim_);
    if (env_steps_ < opt_.sac.warmup_steps) {
      for (int j = 0; j < act_dim_; ++j) a_norm(j) = uniform(rng_action_, -1.0, 1.0);
    } else {
      a_norm = actor_act(*actor_, obs, /*deterministic=*/false, /*training=*/true, rng_action_);
    }
    BicycleAction act{a_norm(0) * scale(0), a_norm(1) * scale(1)};
    EnvStep st = env_->step(act);
    VecD next_obs = observe_augmented(st.next_obs);

    // truncations bootstrap: only true terminal events cut the value tail
    const bool terminal = st.done && !st.info.truncated;
    replay_.push(obs.cast<float>(), a_norm.cast<float>(), static_cast<float>(st.reward),
                 next_obs.cast<float>(), terminal, ctx_id);

    obs = next_obs;
    ep_ret += st.reward;
    ++len;
    ++env_steps_;

    if (env_steps_ > opt_.sac.warmup_steps &&
        replay_.size() >= static_cast<std::size_t>(opt_.sac.batch_size)) {
      for (int u = 0; u < opt_.sac.updates_per_step; ++u)
        update(actor_acc, critic_acc, load_acc, n_updates);
    }

    if (opt_.checkpoint_interval > 0 && !opt_.checkpoint_dir.empty() &&
        env_steps_ % opt_.checkpoint_interval == 0) {
      save_snapshot(opt_.checkpoint_dir + "/ckpt_" + std::to_string(env_steps_) + ".snap");
    }

    if (st.done) break;
  }

  curriculum_.record_outcome(ctx_id, EpisodeOutcome{ep_ret, len});
  ++episodes_;

  EpisodeMetric m;
  m.step = env_steps_;
  m.episode = episodes_;
  m.context_id = ctx_id;
  m.episode_return = ep_ret;
  m.length = len;
  if (n_updates > 0) {
    m.actor_loss = actor_acc / n_updates;
    m.critic_loss = critic_acc / n_updates;
    m.load_loss = load_acc / n_updates;
  }
  m.alpha = alpha();
  metric_log_.push_back(m);
  write_metric(m);
  write_trace(m);
}

void Trainer::update(double& actor_acc, double& critic_acc, double& load_acc, long& n_updates) {
  Batch b = replay_.sample(opt_.sac.batch_size, rng_batch_);
  const float a = static_cast<float>(alpha());
  const float gamma = static_cast<float>(opt_.sac.gamma);
  const int hidden = opt_.sac.critic_hidden;

  // critic step
  VecF y = critic_targets(*actor_, targets_, b.next_obs, b.rew, b.done, a, gamma, hidden, rng_update_);
  critics_.zero_grad();
  {
    Tape<float> tp;
    auto loss = assemble_critic_loss(tp, critics_, b.obs, b.act, y, obs_dim_, act_dim_, hidden);
    const double lv = tp.val(loss)(0, 0);
    if (!std::isfinite(lv))
      throw NonFiniteLoss("critic loss non-finite at step " + std::to_string(env_steps_) +
                          " (grad step " + std::to_string(grad_steps_) + ")");
    critic_acc += lv;
    tp.backward(loss);
  }
  critics_.adam_step(static_cast<float>(opt_.sac.lr));

  // actor step
  actor_->params().zero_grad();
  double mean_logp = 0;
  {
    Tape<float> tp;
    MatF eps(opt_.sac.batch_size, act_dim_);
    for (int r = 0; r < opt_.sac.batch_size; ++r)
      for (int j = 0; j < act_dim_; ++j) eps(r, j) = static_cast<float>(normal01(rng_update_));
    auto noise = actor_->draw_router_noise(opt_.sac.batch_size, rng_update_);
    auto loss = assemble_actor_loss(tp, *actor_, critics_, b.obs, a,
                                    static_cast<float>(opt_.sac.lambda_load), eps,
                                    noise.empty() ? nullptr : &noise, hidden);
    const double lv = tp.val(loss.total)(0, 0);
    if (!std::isfinite(lv))
      throw NonFiniteLoss("actor loss non-finite at step " + std::to_string(env_steps_) +
                          " (grad step " + std::to_string(grad_steps_) + ")");
    actor_acc += lv;
    load_acc += loss.load_term;
    mean_logp = -loss.entropy;
    tp.backward(loss.total);
  }
  actor_->params().adam_step(static_cast<float>(opt_.sac.lr));

  // temperature step
  if (opt_.sac.auto_alpha) {
    const int id = log_alpha_.require("log_alpha");
    log_alpha_.zero_grad();
    log_alpha_.grad(id)(0, 0) = -static_cast<float>(mean_logp + opt_.sac.target_entropy);
    log_alpha_.adam_step(static_cast<float>(opt_.sac.lr));
  }

  soft_update(targets_, critics_, static_cast<float>(opt_.sac.tau));
  ++grad_steps_;
  ++n_updates;
}

double Trainer::evaluate_mean_return(const Context& ctx, int episodes, std::uint64_t eval_seed) {
  auto env = env_->clone_fresh();
  const VecD scale = env->action_scale();
  Rng rng = make_stream(eval_seed, {0xe7a1u});
  double total = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    VecD obs = env->reset(ctx, mix64(eval_seed ^ static_cast<std::uint64_t>(ep)));
    if (augment_mu_) {
      VecD mu = env->current_mu();
      VecD tmp(obs.size() + mu.size());
      tmp << obs, mu;
      obs = tmp;
    }
    while (true) {
      VecD a_norm = actor_act(*actor_, obs, /*deterministic=*/true, /*training=*/false, rng);
      EnvStep st = env->step({a_norm(0) * scale(0), a_norm(1) * scale(1)});
      obs = st.next_obs;
      if (augment_mu_) {
        VecD mu = env->current_mu();
        VecD tmp(obs.size() + mu.size());
        tmp << obs, mu;
        obs = tmp;
      }
      total += st.reward;
      if (st.done) break;
    }
  }
  return total / episodes;
}

namespace {
nlohmann::json metric_to_json(const EpisodeMetric& m) {
  return {{"step", m.step},
          {"episode", m.episode},
          {"context_id", m.context_id},
          {"return", m.episode_return},
          {"length", m.length},
          {"losses", {{"actor", m.actor_loss}, {"critic", m.critic_loss}, {"load", m.load_loss}}},
          {"alpha", m.alpha}};
}
}  // namespace

void Trainer::write_metric(const EpisodeMetric& m) {
  if (!metrics_out_) return;
  *metrics_out_ << metric_to_json(m).dump() << "\n";
  metrics_out_->flush();
}

void Trainer::write_trace(const EpisodeMetric& m) {
  if (!trace_out_) return;
  VecD g = curriculum_.hardness();
  auto garr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (std::isfinite(g(i)))
      garr.push_back(g(i));
    else
      garr.push_back(nullptr);  // unvisited under curriculum C
  }
  const double u =
      opt_.curriculum == CurriculumKind::B ? static_cast<double>(m.length) : m.episode_return;
  nlohmann::json j{
      {"episode", m.episode}, {"context_id", m.context_id}, {"U", u}, {"G", garr}};
  *trace_out_ << j.dump() << "\n";
  trace_out_->flush();
}

// ----- snapshots ----- //

void Trainer::save_policy(const std::string& path) const {
  Checkpoint ck;
  ck.meta["format"] = "policy";
  ck.meta["arch"] = actor_->arch_meta();
  store_to_checkpoint(ck, "actor", actor_->params());
  ck.save(path);
}

std::unique_ptr<ActorNet<float>> load_policy(const std::string& path, nlohmann::json* meta_out) {
  Checkpoint ck = Checkpoint::load(path);
  Rng rng(0);
  auto actor = make_actor_from_meta(ck.meta.at("arch"), rng);
  store_from_checkpoint(ck, "actor", actor->params());
  if (meta_out) *meta_out = ck.meta;
  return actor;
}

namespace {
MatF vec_to_row(const std::vector<float>& v) {
  MatF m(1, static_cast<Eigen::Index>(v.size()));
  for (Eigen::Index i = 0; i < m.cols(); ++i) m(0, i) = v[i];
  return m;
}
std::vector<float> row_to_vec(const MatF& m) {
  return std::vector<float>(m.data(), m.data() + m.size());
}
}  // namespace

void Trainer::save_snapshot(const std::string& path) const {
  Checkpoint ck;
  ck.meta["format"] = "trainer_snapshot";
  ck.meta["arch"] = actor_->arch_meta();
  ck.meta["model"] = model_name(opt_.model);
  ck.meta["env_steps"] = env_steps_;
  ck.meta["episodes"] = episodes_;
  ck.meta["grad_steps"] = grad_steps_;
  ck.meta["rng"] = {{"action", rng_to_string(rng_action_)},
                    {"update", rng_to_string(rng_update_)},
                    {"batch", rng_to_string(rng_batch_)},
                    {"curriculum", rng_to_string(rng_curr_)}};
  ck.meta["curriculum"] = curriculum_.snapshot();
  ck.meta["replay"] = {{"size", replay_.size()}, {"head", replay_.head()}};

  store_to_checkpoint(ck, "actor", actor_->params());
  store_to_checkpoint(ck, "critics", critics_);
  store_to_checkpoint(ck, "targets", targets_);
  store_to_checkpoint(ck, "alpha", log_alpha_);

  ck.put_f32("replay/obs", vec_to_row(replay_.raw_obs()));
  ck.put_f32("replay/act", vec_to_row(replay_.raw_act()));
  ck.put_f32("replay/next_obs", vec_to_row(replay_.raw_next_obs()));
  ck.put_f32("replay/rew", vec_to_row(replay_.raw_rew()));
  ck.put_f32("replay/done", vec_to_row(replay_.raw_done()));
  {
    const auto& ctx = replay_.raw_ctx();
    MatF m(1, static_cast<Eigen::Index>(ctx.size()));
    for (Eigen::Index i = 0; i < m.cols(); ++i) m(0, i) = static_cast<float>(ctx[i]);
    ck.put_f32("replay/ctx", m);
  }
  ck.save(path);
}

void Trainer::restore_snapshot(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (ck.meta.value("format", "") != "trainer_snapshot")
    throw CheckpointVersionMismatch("not a trainer snapshot: " + path);
  if (ck.meta.at("arch") != actor_->arch_meta())
    throw CheckpointVersionMismatch("snapshot architecture differs from this trainer's configuration");

  store_from_checkpoint(ck, "actor", actor_->params());
  store_from_checkpoint(ck, "critics", critics_);
  store_from_checkpoint(ck, "targets", targets_);
  store_from_checkpoint(ck, "alpha", log_alpha_);

  env_steps_ = ck.meta.at("env_steps").get<long>();
  episodes_ = ck.meta.at("episodes").get<long>();
  grad_steps_ = ck.meta.at("grad_steps").get<long>();
  rng_action_ = rng_from_string(ck.meta.at("rng").at("action").get<std::string>());
  rng_update_ = rng_from_string(ck.meta.at("rng").at("update").get<std::string>());
  rng_batch_ = rng_from_string(ck.meta.at("rng").at("batch").get<std::string>());
  rng_curr_ = rng_from_string(ck.meta.at("rng").at("curriculum").get<std::string>());
  curriculum_ = Curriculum::from_snapshot(ck.meta.at("curriculum"));

  const auto& ctxm = ck.get_f32("replay/ctx");
  std::vector<int> ctx(ctxm.size());
  for (Eigen::Index i = 0; i < ctxm.size(); ++i) ctx[i] = static_cast<int>(ctxm(0, i));
  replay_.restore(ck.meta.at("replay").at("size").get<std::size_t>(),
                  ck.meta.at("replay").at("head").get<std::size_t>(),
                  row_to_vec(ck.get_f32("replay/obs")), row_to_vec(ck.get_f32("replay/act")),
                  row_to_vec(ck.get_f32("replay/next_obs")), row_to_vec(ck.get_f32("replay/rew")),
                  row_to_vec(ck.get_f32("replay/done")), std::move(ctx));
}

// ----- policy banks ----- //

PolicyBank load_policy_bank(const std::string& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw ConfigError("cannot read bank manifest " + manifest_path);
  nlohmann::json j = nlohmann::json::parse(is);
  PolicyBank bank;
  const auto dir = std::filesystem::path(manifest_path).parent_path();
  for (const auto& e : j.at("entries")) {
    PolicyBankEntry entry;
    auto mu = e.at("mu").get<std::vector<double>>();
    entry.mu = Eigen::Map<const VecD>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    std::filesystem::path p = e.at("checkpoint").get<std::string>();
    if (p.is_relative()) p = dir / p;
    entry.policy = load_policy(p.string());
    bank.entries.push_back(std::move(entry));
  }
  if (bank.entries.empty()) throw EmptyBank("bank manifest has no entries");
  return bank;
}

void save_policy_bank_manifest(const std::string& manifest_path,
                               const std::vector<std::pair<VecD, std::string>>& entries) {
  nlohmann::json j;
  auto arr = nlohmann::json::array();
  for (const auto& [mu, path] : entries) {
    std::vector<double> m(mu.data(), mu.data() + mu.size());
    arr.push_back({{"mu", m}, {"checkpoint", path}});
  }
  j["entries"] = arr;
  std::ofstream os(manifest_path);
  if (!os) throw ConfigError("cannot write bank manifest " + manifest_path);
  os << j.dump(2) << "\n";
}

}  // namespace sacmoe
