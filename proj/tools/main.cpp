// Experiment driver: train / eval / demo-example2 / export subcommands.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "sacmoe/experiment.hpp"

using namespace sacmoe;

namespace {

ExperimentConfig load_config_with_overrides(const std::string& config_path, const std::string& model,
                                            const std::string& curriculum, long steps,
                                            std::uint64_t seed, bool seed_set, const std::string& out) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = ExperimentConfig::from_file(config_path);
  if (!model.empty()) cfg.model = model;
  if (!curriculum.empty()) cfg.curriculum = curriculum;
  if (steps >= 0) cfg.steps = steps;
  if (seed_set) cfg.seed = seed;
  if (!out.empty()) cfg.out = out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SAC with a mixture-of-experts actor for hybrid dynamical systems"};
  app.require_subcommand(1);

  // ----- train ----- //
  std::string config_path, model, curriculum, out;
  long steps = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* train = app.add_subcommand("train", "train a policy per the experiment config");
  train->add_option("--config", config_path, "experiment config (JSON)");
  train->add_option("--model", model, "sac | sac_moe | sac_uptrue");
  train->add_option("--curriculum", curriculum, "A | B | C");
  train->add_option("--steps", steps, "environment step budget");
  train->add_option("--seed", seed, "root seed")->each([&](const std::string&) { seed_set = true; });
  train->add_option("--out", out, "output run directory");

  // ----- eval ----- //
  std::string ckpt, surfaces = "low,medium,high", bank_manifest, eval_out = "eval_out";
  int episodes = 200, track = 1, workers = 1;
  std::uint64_t eval_seed = 0;
  bool log_traj = false, log_activations = false;

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on sampled racing contexts");
  eval->add_option("--checkpoint", ckpt, "policy checkpoint (from train)");
  eval->add_option("--bank", bank_manifest, "policy bank manifest (evaluates the switching policy)");
  eval->add_option("--surfaces", surfaces, "comma list from {low, medium, high}");
  eval->add_option("--episodes", episodes, "evaluation episodes per class");
  eval->add_option("--track", track, "track id (1 or 2)");
  eval->add_option("--seed", eval_seed, "evaluation seed");
  eval->add_option("--workers", workers, "parallel evaluation workers");
  eval->add_option("--out", eval_out, "output directory");
  eval->add_flag("--trajectories", log_traj, "log per-step trajectories");
  eval->add_flag("--activations", log_activations, "log router activations (MoE policies)");

  // ----- demo-example2 ----- //
  long demo_steps = 40000;
  std::uint64_t demo_seed = 0;
  std::string demo_out = "demo_out";
  int demo_episodes = 200;
  auto* demo = app.add_subcommand(
      "demo-example2", "two-mode workspace demonstration: pi1/pi2/pi_sw/pi_opt/SAC-MoE");
  demo->add_option("--steps", demo_steps, "training budget per policy");
  demo->add_option("--seed", demo_seed, "root seed");
  demo->add_option("--episodes", demo_episodes, "evaluation episodes per policy");
  demo->add_option("--out", demo_out, "output directory");

  // ----- export ----- //
  std::string run_dir, kind;
  auto* exp = app.add_subcommand("export", "export tidy plot data from a run directory");
  exp->add_option("--run", run_dir, "run directory")->required();
  exp->add_option("--kind", kind, "returns | trajectories | activations | curriculum")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ExperimentConfig cfg =
          load_config_with_overrides(config_path, model, curriculum, steps, seed, seed_set, out);
      const std::string dir = run_train_experiment(cfg);
      std::cout << "run complete: " << dir << "\n";
    } else if (*eval) {
      if (episodes <= 0) throw InvalidEpisodeCount("--episodes must be positive");
      std::filesystem::create_directories(eval_out);

      RaceTrackEnv::Options eo;
      eo.track_id = track;
      EnvFactory factory = [eo] { return std::make_unique<RaceTrackEnv>(eo); };
      const int env_obs = RaceTrackEnv(eo).observation_dim();

      std::unique_ptr<EvalPolicy> policy;
      if (!bank_manifest.empty()) {
        policy = std::make_unique<SwitchedEvalPolicy>(load_policy_bank(bank_manifest));
      } else if (!ckpt.empty()) {
        auto net = load_policy(ckpt);
        const bool augment = net->obs_dim() > env_obs;  // oracle-augmented checkpoints
        policy = std::make_unique<NetPolicy>(std::move(net), augment);
      } else {
        throw ConfigError("eval needs --checkpoint or --bank");
      }

      std::vector<EvalClassSpec> classes(1);
      classes[0].label = surfaces;
      classes[0].surfaces = parse_surface_classes(surfaces);

      EvalOptions eopt;
      eopt.episodes = episodes;
      eopt.seed = eval_seed;
      eopt.workers = workers;
      eopt.records_path = eval_out + "/records.jsonl";
      if (log_traj) eopt.traj_path = eval_out + "/trajectories.jsonl";
      if (log_activations) eopt.activations_path = eval_out + "/activations.jsonl";

      EvalReport rep = run_eval(factory, *policy, classes, eopt);
      std::cout << report_table(rep);
      std::ofstream os(eval_out + "/report.json");
      os << report_to_json(rep).dump(2) << "\n";
      std::cout << "records: " << eopt.records_path << "\n";
    } else if (*demo) {
      DemoResult r = demo_example2(demo_steps, demo_seed, demo_out, demo_episodes);
      std::cout << "returns: pi1=" << r.ret_pi1 << " pi2=" << r.ret_pi2 << " pi_sw=" << r.ret_pi_sw
                << " pi_opt=" << r.ret_pi_opt << " sac_moe=" << r.ret_moe << "\n"
                << "dispatch audit: " << r.dispatch_errors << "/" << r.dispatch_checks
                << " mismatches\n";
    } else if (*exp) {
      std::cout << export_plot_data(run_dir, kind) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
