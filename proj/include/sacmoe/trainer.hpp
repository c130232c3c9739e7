#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sacmoe/baselines.hpp"
#include "sacmoe/checkpoint.hpp"
#include "sacmoe/curriculum.hpp"
#include "sacmoe/env.hpp"
#include "sacmoe/moe.hpp"
#include "sacmoe/replay.hpp"
#include "sacmoe/sac.hpp"

namespace sacmoe {

enum class ModelKind { Sac, SacMoe, SacUPTrue };

ModelKind parse_model(const std::string& name);
std::string model_name(ModelKind k);

// Rebuilds an actor network from checkpoint architecture metadata.
std::unique_ptr<ActorNet<float>> make_actor_from_meta(const nlohmann::json& meta, Rng& rng);

struct TrainerOptions {
  ModelKind model = ModelKind::Sac;
  SACConfig sac{};
  MoEConfig moe{};
  CurriculumKind curriculum = CurriculumKind::A;
  std::uint64_t seed = 0;
  std::string metrics_path;           // JSONL metrics stream, empty = off
  std::string curriculum_trace_path;  // JSONL curriculum trace, empty = off
  long checkpoint_interval = 0;       // env steps between periodic snapshots, 0 = off
  std::string checkpoint_dir;
};

struct EpisodeMetric {
  long step = 0;
  long episode = 0;
  int context_id = 0;
  double episode_return = 0;
  long length = 0;
  double actor_loss = 0, critic_loss = 0, load_loss = 0;
  double alpha = 0;
};

// Off-policy SAC learner: one env, a context set sampled through the
// curriculum at episode starts, twin critics with targets, optional
// MoE actor, optional oracle observation augmentation (SAC-UPTrue).
// Single-thread; fully deterministic given (seed, configs).
class Trainer {
 public:
  Trainer(std::unique_ptr<Env> env, std::vector<Context> contexts, TrainerOptions opt);

  // Runs whole episodes until at least `additional_env_steps` more env steps
  // have accumulated.
  void train(long additional_env_steps);

  long env_steps() const { return env_steps_; }
  long episodes() const { return episodes_; }
  long grad_steps() const { return grad_steps_; }
  double alpha() const;

  ActorNet<float>& actor() { return *actor_; }
  const TrainerOptions& options() const { return opt_; }
  Curriculum& curriculum() { return curriculum_; }
  const std::vector<EpisodeMetric>& metric_log() const { return metric_log_; }
  Env& env() { return *env_; }
  const std::vector<Context>& contexts() const { return contexts_; }

  // Deterministic-policy evaluation on a fixed context; leaves the training
  // schedule untouched.
  double evaluate_mean_return(const Context& ctx, int episodes, std::uint64_t eval_seed);

  // Full training snapshot: parameters with optimizer moments, replay
  // buffer, RNG streams, curriculum state and counters. A restored trainer
  // continues bit-identically.
  void save_snapshot(const std::string& path) const;
  void restore_snapshot(const std::string& path);

  // actor-only checkpoint for evaluation / policy banks
  void save_policy(const std::string& path) const;

 private:
  TrainerOptions opt_;
  std::unique_ptr<Env> env_;
  std::vector<Context> contexts_;
  bool augment_mu_ = false;  // SAC-UPTrue oracle channel
  int mu_dim_ = 0;
  int obs_dim_ = 0;  // effective (possibly augmented) observation width
  int act_dim_ = 2;

  std::unique_ptr<ActorNet<float>> actor_;
  ParamStore<float> critics_, targets_, log_alpha_;
  ReplayBuffer replay_;
  Curriculum curriculum_;

  Rng rng_action_, rng_update_, rng_batch_, rng_curr_;

  long env_steps_ = 0, episodes_ = 0, grad_steps_ = 0;
  std::vector<EpisodeMetric> metric_log_;
  std::unique_ptr<std::ofstream> metrics_out_, trace_out_;

  void run_episode();
  void update(double& actor_acc, double& critic_acc, double& load_acc, long& n_updates);
  VecD observe_augmented(const VecD& obs) const;
  std::uint64_t episode_seed(int ctx_id, long episode_index) const;
  void write_metric(const EpisodeMetric& m);
  void write_trace(const EpisodeMetric& m);
};

// Loads an actor-only policy from a checkpoint file. Returns the actor and
// its architecture metadata.
std::unique_ptr<ActorNet<float>> load_policy(const std::string& path, nlohmann::json* meta_out = nullptr);

// Policy bank manifest: {"entries": [{"mu": [..], "checkpoint": "path"}]}
PolicyBank load_policy_bank(const std::string& manifest_path);
void save_policy_bank_manifest(const std::string& manifest_path,
                               const std::vector<std::pair<VecD, std::string>>& entries);

}  // namespace sacmoe
