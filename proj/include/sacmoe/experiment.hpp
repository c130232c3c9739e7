#pragma once

#include <string>
#include <vector>

#include "sacmoe/eval.hpp"
#include "sacmoe/trainer.hpp"

namespace sacmoe {

inline constexpr const char* kVersionStamp = "sacmoe 0.1.0";

// Resolved experiment description. Parsed from a JSON config file; CLI flags
// override individual fields before resolution.
struct ExperimentConfig {
  struct EnvSpec {
    std::string kind = "race";       // "race" | "goal"
    int track = 1;                   // racing only
    int episode_cap = 0;             // 0 = environment default
    std::string contexts = "track1_train";  // builtin name or path to a context file
  };

  EnvSpec env;
  std::string model = "sac";  // sac | sac_moe | sac_uptrue
  std::string curriculum = "A";
  SACConfig sac{};
  MoEConfig moe{};
  std::uint64_t seed = 0;
  long steps = 750'000;
  long checkpoint_interval = 50'000;
  std::string out = "runs/exp";

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);
  nlohmann::json to_json() const;
  void validate() const;
};

// Stable 64-bit FNV-1a hash of the resolved config serialization; recorded in
// every run directory so outputs can be traced to their exact configuration.
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Builds the environment and training context set a config names.
std::unique_ptr<Env> make_env(const ExperimentConfig::EnvSpec& spec);
std::vector<Context> make_context_set(const ExperimentConfig::EnvSpec& spec);

// Trains per config, writing into cfg.out: resolved config, run metadata
// (hash, seed, version), metrics stream, curriculum trace, periodic and
// final snapshots, and the final policy checkpoint. Returns the run dir.
std::string run_train_experiment(const ExperimentConfig& cfg);

// Two-mode workspace demonstration: trains the single-mode components pi1
// (mu=0) and pi2 (mu=6), the directly-trained pi_opt, and SAC-MoE on the
// two-mode workspace; builds the switching policy from {pi1, pi2}; evaluates
// everything over `episodes` episodes with a full dispatch audit; writes
// returns, trajectories and a summary report.
struct DemoResult {
  double ret_pi1 = 0, ret_pi2 = 0, ret_pi_sw = 0, ret_pi_opt = 0, ret_moe = 0;
  long dispatch_checks = 0;
  long dispatch_errors = 0;
};
DemoResult demo_example2(long budget_steps, std::uint64_t seed, const std::string& out_dir,
                         int episodes = 200);

// Tidy column-oriented exports from a run directory's logs.
// kind: returns | trajectories | activations | curriculum
std::string export_plot_data(const std::string& run_dir, const std::string& kind);

}  // namespace sacmoe
