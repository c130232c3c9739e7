#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sacmoe/baselines.hpp"
#include "sacmoe/env.hpp"
#include "sacmoe/moe.hpp"

namespace sacmoe {

// What a policy reported about one action choice (router decisions for MoE
// actors, the dispatched component for switching policies).
struct StepDecision {
  std::vector<RouterDecision> decisions;
  int selected = -1;
};

// Evaluation-time policy interface. Implementations must be const and
// thread-safe: all per-step outputs go through the out-parameter.
class EvalPolicy {
 public:
  virtual ~EvalPolicy() = default;
  virtual VecD act(const VecD& obs, const VecD& oracle_mu, Rng& rng, StepDecision* out) const = 0;
};

// Wraps a trained actor. oracle_augment appends the active mode to the
// observation (SAC-UPTrue); plain SAC and SAC-MoE ignore the oracle channel.
class NetPolicy : public EvalPolicy {
 public:
  NetPolicy(std::shared_ptr<ActorNet<float>> net, bool oracle_augment, bool deterministic = true)
      : net_(std::move(net)), augment_(oracle_augment), deterministic_(deterministic) {}

  VecD act(const VecD& obs, const VecD& oracle_mu, Rng& rng, StepDecision* out) const override;

 private:
  std::shared_ptr<ActorNet<float>> net_;
  bool augment_, deterministic_;
};

// Eq.-style switching baseline: hard-dispatches to the component trained on
// the nearest mode, using the oracle channel.
class SwitchedEvalPolicy : public EvalPolicy {
 public:
  explicit SwitchedEvalPolicy(PolicyBank bank, bool deterministic = true)
      : bank_(std::move(bank)), deterministic_(deterministic) {}

  VecD act(const VecD& obs, const VecD& oracle_mu, Rng& rng, StepDecision* out) const override;
  const PolicyBank& bank() const { return bank_; }

 private:
  PolicyBank bank_;
  bool deterministic_;
};

// One evaluation condition: either surfaces sampled per episode (racing) or
// a fixed explicit context.
struct EvalClassSpec {
  std::string label;
  std::vector<SurfaceClass> surfaces;    // non-empty -> sample_test_context per episode
  std::optional<Context> fixed_context;  // used when surfaces is empty
};

struct EvalOptions {
  int episodes = 200;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string records_path;      // per-episode JSONL
  std::string traj_path;         // per-step trajectory JSONL
  std::string activations_path;  // router activation JSONL (MoE policies)
  // optional per-step hook (dispatch audits); forces single-worker execution
  std::function<void(const Env&, const VecD& oracle_mu, const StepDecision&)> step_hook;
};

struct EvalEpisode {
  std::string class_label;
  int episode = 0;
  int context_id = -1;
  double episode_return = 0;
  long steps = 0;
  int laps = 0;
  bool crashed = false;
  std::vector<double> lap_times;
};

struct ClassMetrics {
  std::string label;
  int episodes = 0;
  double laps_mean = 0;
  double lap_time_mean = 0;  // NaN when no lap completed
  double crash_rate = 0;
  double return_mean = 0;
};

struct EvalReport {
  std::vector<ClassMetrics> classes;
  std::vector<EvalEpisode> episodes;
};

using EnvFactory = std::function<std::unique_ptr<Env>()>;

// Runs `episodes` evaluation episodes per class. Deterministic given seed:
// per-episode streams derive from (seed, class index, episode index), so the
// worker count never changes results.
EvalReport run_eval(const EnvFactory& make_env, const EvalPolicy& policy,
                    const std::vector<EvalClassSpec>& classes, const EvalOptions& opt);

// Aggregation used by run_eval, exposed for independent recomputation.
std::vector<ClassMetrics> aggregate_episodes(const std::vector<EvalEpisode>& eps);

// Rebuilds the report from a per-episode records file.
EvalReport recompute_report(const std::string& records_path);

// Human-readable table; absent lap stats print as "-".
std::string report_table(const EvalReport& report);

nlohmann::json report_to_json(const EvalReport& report);

}  // namespace sacmoe
