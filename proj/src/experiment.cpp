#include "sacmoe/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace sacmoe {

namespace fs = std::filesystem;

namespace {

void sac_from_json(SACConfig& c, const nlohmann::json& j) {
  c.gamma = j.value("gamma", c.gamma);
  c.tau = j.value("tau", c.tau);
  c.lr = j.value("lr", c.lr);
  c.alpha_init = j.value("alpha_init", c.alpha_init);
  c.auto_alpha = j.value("auto_alpha", c.auto_alpha);
  c.target_entropy = j.value("target_entropy", c.target_entropy);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.buffer_capacity = j.value("buffer_capacity", c.buffer_capacity);
  c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
  c.updates_per_step = j.value("updates_per_step", c.updates_per_step);
  c.lambda_load = j.value("lambda_load", c.lambda_load);
  c.critic_hidden = j.value("critic_hidden", c.critic_hidden);
  c.actor_hidden = j.value("actor_hidden", c.actor_hidden);
}

nlohmann::json sac_to_json(const SACConfig& c) {
  return {{"gamma", c.gamma},
          {"tau", c.tau},
          {"lr", c.lr},
          {"alpha_init", c.alpha_init},
          {"auto_alpha", c.auto_alpha},
          {"target_entropy", c.target_entropy},
          {"batch_size", c.batch_size},
          {"buffer_capacity", c.buffer_capacity},
          {"warmup_steps", c.warmup_steps},
          {"updates_per_step", c.updates_per_step},
          {"lambda_load", c.lambda_load},
          {"critic_hidden", c.critic_hidden},
          {"actor_hidden", c.actor_hidden}};
}

void moe_from_json(MoEConfig& c, const nlohmann::json& j) {
  c.tokens = j.value("tokens", c.tokens);
  c.token_dim = j.value("token_dim", c.token_dim);
  c.experts = j.value("experts", c.experts);
  c.top_k = j.value("top_k", c.top_k);
  c.noise_std = j.value("noise_std", c.noise_std);
  c.lambda_load = j.value("lambda_load", c.lambda_load);
  c.encoder_hidden = j.value("encoder_hidden", c.encoder_hidden);
}

nlohmann::json moe_to_json(const MoEConfig& c) {
  return {{"tokens", c.tokens},         {"token_dim", c.token_dim},
          {"experts", c.experts},       {"top_k", c.top_k},
          {"noise_std", c.noise_std},   {"lambda_load", c.lambda_load},
          {"encoder_hidden", c.encoder_hidden}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("env")) {
    const auto& e = j.at("env");
    cfg.env.kind = e.value("kind", cfg.env.kind);
    cfg.env.track = e.value("track", cfg.env.track);
    cfg.env.episode_cap = e.value("episode_cap", cfg.env.episode_cap);
    cfg.env.contexts = e.value("contexts", cfg.env.contexts);
  }
  cfg.model = j.value("model", cfg.model);
  cfg.curriculum = j.value("curriculum", cfg.curriculum);
  if (j.contains("sac")) sac_from_json(cfg.sac, j.at("sac"));
  if (j.contains("moe")) moe_from_json(cfg.moe, j.at("moe"));
  cfg.seed = j.value("seed", cfg.seed);
  cfg.steps = j.value("steps", cfg.steps);
  cfg.checkpoint_interval = j.value("checkpoint_interval", cfg.checkpoint_interval);
  cfg.out = j.value("out", cfg.out);
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path);
  return from_json(nlohmann::json::parse(is));
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"env",
           {{"kind", env.kind},
            {"track", env.track},
            {"episode_cap", env.episode_cap},
            {"contexts", env.contexts}}},
          {"model", model},
          {"curriculum", curriculum},
          {"sac", sac_to_json(sac)},
          {"moe", moe_to_json(moe)},
          {"seed", seed},
          {"steps", steps},
          {"checkpoint_interval", checkpoint_interval},
          {"out", out}};
}

void ExperimentConfig::validate() const {
  if (env.kind != "race" && env.kind != "goal") throw ConfigError("env.kind must be race or goal");
  if (env.kind == "race" && env.track != 1 && env.track != 2)
    throw ConfigError("env.track must be 1 or 2");
  parse_model(model);        // throws on unknown
  parse_curriculum(curriculum);
  sac.validate();
  moe.validate();
  if (steps < 0) throw ConfigError("steps must be non-negative");
  make_context_set(env);  // resolves builtin names / files
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  const std::string s = cfg.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::unique_ptr<Env> make_env(const ExperimentConfig::EnvSpec& spec) {
  if (spec.kind == "goal") {
    GoalSeekEnv::Options o;
    if (spec.episode_cap > 0) o.episode_cap = spec.episode_cap;
    return std::make_unique<GoalSeekEnv>(o);
  }
  RaceTrackEnv::Options o;
  o.track_id = spec.track;
  if (spec.episode_cap > 0) o.episode_cap = spec.episode_cap;
  return std::make_unique<RaceTrackEnv>(o);
}

std::vector<Context> make_context_set(const ExperimentConfig::EnvSpec& spec) {
  if (spec.contexts == "track1_train") return track1_train_contexts();
  if (spec.contexts == "goal_mu0") return {goal_single_mode_context(0.0, 0)};
  if (spec.contexts == "goal_mu6") return {goal_single_mode_context(6.0, 0)};
  if (spec.contexts == "goal_two_mode") return {goal_two_mode_context(0.0, 6.0, 0)};
  if (fs::exists(spec.contexts)) return load_contexts(spec.contexts);
  throw ConfigError("unknown context set '" + spec.contexts +
                    "' (builtins: track1_train, goal_mu0, goal_mu6, goal_two_mode, or a file path)");
}

std::string run_train_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out);

  {
    std::ofstream os(cfg.out + "/config.json");
    os << cfg.to_json().dump(2) << "\n";
  }
  {
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    nlohmann::json meta{{"config_hash", std::string(hash_hex)},
                        {"seed", cfg.seed},
                        {"version", kVersionStamp}};
    std::ofstream os(cfg.out + "/run_meta.json");
    os << meta.dump(2) << "\n";
  }

  TrainerOptions opt;
  opt.model = parse_model(cfg.model);
  opt.sac = cfg.sac;
  opt.moe = cfg.moe;
  opt.curriculum = parse_curriculum(cfg.curriculum);
  opt.seed = cfg.seed;
  opt.metrics_path = cfg.out + "/metrics.jsonl";
  opt.curriculum_trace_path = cfg.out + "/curriculum.jsonl";
  opt.checkpoint_interval = cfg.checkpoint_interval;
  opt.checkpoint_dir = cfg.out;

  Trainer trainer(make_env(cfg.env), make_context_set(cfg.env), opt);
  trainer.train(cfg.steps);
  trainer.save_snapshot(cfg.out + "/final.snap");
  trainer.save_policy(cfg.out + "/policy.ckpt");
  return cfg.out;
}

DemoResult demo_example2(long budget_steps, std::uint64_t seed, const std::string& out_dir,
                         int episodes) {
  fs::create_directories(out_dir);
  const Context ctx_mu0 = goal_single_mode_context(0.0, 0);
  const Context ctx_mu6 = goal_single_mode_context(6.0, 0);
  const Context ctx_two = goal_two_mode_context(0.0, 6.0, 0);

  auto train_one = [&](const std::string& name, ModelKind kind, const Context& ctx,
                       std::uint64_t s) {
    TrainerOptions opt;
    opt.model = kind;
    opt.seed = s;
    opt.curriculum = CurriculumKind::A;
    opt.metrics_path = out_dir + "/" + name + "_metrics.jsonl";
    Trainer tr(std::make_unique<GoalSeekEnv>(), {ctx}, opt);
    tr.train(budget_steps);
    tr.save_policy(out_dir + "/" + name + ".ckpt");
    std::cout << "[demo] trained " << name << " for " << tr.env_steps() << " steps\n";
  };

  train_one("pi1", ModelKind::Sac, ctx_mu0, mix64(seed ^ 1));
  train_one("pi2", ModelKind::Sac, ctx_mu6, mix64(seed ^ 2));
  train_one("pi_opt", ModelKind::Sac, ctx_two, mix64(seed ^ 3));
  train_one("sac_moe", ModelKind::SacMoe, ctx_two, mix64(seed ^ 4));

  save_policy_bank_manifest(out_dir + "/bank.json", {{VecD::Constant(1, 0.0), "pi1.ckpt"},
                                                     {VecD::Constant(1, 6.0), "pi2.ckpt"}});

  EnvFactory factory = [] { return std::make_unique<GoalSeekEnv>(); };
  std::vector<EvalClassSpec> classes(1);
  classes[0].label = "two_mode";
  classes[0].fixed_context = ctx_two;

  DemoResult res;
  auto eval_net = [&](const std::string& name, bool traj) {
    auto policy = NetPolicy(load_policy(out_dir + "/" + name + ".ckpt"), false);
    EvalOptions opt;
    opt.episodes = episodes;
    opt.seed = mix64(seed ^ 0xeea1);
    opt.records_path = out_dir + "/" + name + "_records.jsonl";
    if (traj) opt.traj_path = out_dir + "/" + name + "_trajectories.jsonl";
    EvalReport rep = run_eval(factory, policy, classes, opt);
    std::cout << "[demo] " << name << " mean return " << rep.classes[0].return_mean << "\n";
    return rep.classes[0].return_mean;
  };
  res.ret_pi1 = eval_net("pi1", false);
  res.ret_pi2 = eval_net("pi2", false);
  res.ret_pi_opt = eval_net("pi_opt", true);
  res.ret_moe = eval_net("sac_moe", true);

  // switching policy with a per-step dispatch audit against the oracle
  PolicyBank bank = load_policy_bank(out_dir + "/bank.json");
  SwitchedEvalPolicy sw(bank);
  EvalOptions opt;
  opt.episodes = episodes;
  opt.seed = mix64(seed ^ 0xeea1);
  opt.records_path = out_dir + "/pi_sw_records.jsonl";
  opt.traj_path = out_dir + "/pi_sw_trajectories.jsonl";
  long checks = 0, errors = 0;
  opt.step_hook = [&](const Env&, const VecD& mu, const StepDecision& dec) {
    // brute-force nearest-mode rule, recomputed independently per step
    int best = 0;
    double bd = (bank.entries[0].mu - mu).norm();
    for (size_t i = 1; i < bank.entries.size(); ++i) {
      const double d = (bank.entries[i].mu - mu).norm();
      if (d < bd) {
        best = static_cast<int>(i);
        bd = d;
      }
    }
    ++checks;
    if (dec.selected != best) ++errors;
  };
  EvalReport swrep = run_eval(factory, sw, classes, opt);
  res.ret_pi_sw = swrep.classes[0].return_mean;
  res.dispatch_checks = checks;
  res.dispatch_errors = errors;
  std::cout << "[demo] pi_sw mean return " << res.ret_pi_sw << " (dispatch audit: " << errors
            << "/" << checks << " mismatches)\n";

  nlohmann::json summary{{"budget_steps", budget_steps},
                         {"seed", seed},
                         {"episodes", episodes},
                         {"returns",
                          {{"pi1", res.ret_pi1},
                           {"pi2", res.ret_pi2},
                           {"pi_sw", res.ret_pi_sw},
                           {"pi_opt", res.ret_pi_opt},
                           {"sac_moe", res.ret_moe}}},
                         {"dispatch_checks", res.dispatch_checks},
                         {"dispatch_errors", res.dispatch_errors}};
  std::ofstream os(out_dir + "/demo_report.json");
  os << summary.dump(2) << "\n";
  return res;
}

// ----- exports ----- //

namespace {

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingLogs("missing log file: " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  if (out.empty()) throw MissingLogs("log file is empty: " + path);
  return out;
}

std::string find_log(const std::string& run_dir, const std::string& stem) {
  // accept both harness names (metrics.jsonl) and demo names (pi1_metrics.jsonl)
  if (fs::exists(run_dir + "/" + stem)) return run_dir + "/" + stem;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > stem.size() && name.substr(name.size() - stem.size() - 1) == "_" + stem)
      return entry.path().string();
  }
  throw MissingLogs("no " + stem + " under " + run_dir);
}

}  // namespace

std::string export_plot_data(const std::string& run_dir, const std::string& kind) {
  if (!fs::exists(run_dir)) throw MissingLogs("run directory does not exist: " + run_dir);
  const std::string out_path = run_dir + "/export_" + kind + ".tsv";
  std::ofstream os(out_path, std::ios::trunc);
  if (!os) throw ConfigError("cannot write " + out_path);

  if (kind == "returns") {
    auto rows = read_jsonl(find_log(run_dir, "metrics.jsonl"));
    os << "step\tepisode\tcontext_id\treturn\tlength\talpha\n";
    for (const auto& r : rows)
      os << r.at("step").get<long>() << "\t" << r.at("episode").get<long>() << "\t"
         << r.at("context_id").get<int>() << "\t" << r.at("return").get<double>() << "\t"
         << r.at("length").get<long>() << "\t" << r.at("alpha").get<double>() << "\n";
  } else if (kind == "trajectories") {
    auto rows = read_jsonl(find_log(run_dir, "trajectories.jsonl"));
    os << "episode\tt\tx\ty\ttheta\tv\ta_long\tpsi\treward\tmode_index\n";
    for (const auto& r : rows) {
      const auto& s = r.at("state");
      const auto& a = r.at("action");
      os << r.at("episode").get<int>() << "\t" << r.at("t").get<int>() << "\t"
         << s[0].get<double>() << "\t" << s[1].get<double>() << "\t" << s[2].get<double>() << "\t"
         << s[3].get<double>() << "\t" << a[0].get<double>() << "\t" << a[1].get<double>() << "\t"
         << r.at("reward").get<double>() << "\t" << r.at("mode_index").get<int>() << "\n";
    }
  } else if (kind == "activations") {
    auto rows = read_jsonl(find_log(run_dir, "activations.jsonl"));
    // expert selection counts grouped by the active friction / mode value
    std::map<std::pair<double, int>, long> counts;
    std::map<double, long> totals;
    for (const auto& r : rows) {
      const double mu = r.at("active_mu").get<double>();
      for (const auto& per_token : r.at("selected"))
        for (const auto& e : per_token) {
          counts[{mu, e.get<int>()}]++;
          totals[mu]++;
        }
    }
    os << "active_mu\texpert\tcount\tfraction\n";
    for (const auto& [key, n] : counts)
      os << key.first << "\t" << key.second << "\t" << n << "\t"
         << static_cast<double>(n) / totals[key.first] << "\n";
  } else if (kind == "curriculum") {
    auto rows = read_jsonl(find_log(run_dir, "curriculum.jsonl"));
    const size_t n = rows.front().at("G").size();
    os << "episode\tcontext_id\tU";
    for (size_t i = 0; i < n; ++i) os << "\tG" << i;
    os << "\n";
    for (const auto& r : rows) {
      os << r.at("episode").get<long>() << "\t" << r.at("context_id").get<int>() << "\t"
         << r.at("U").get<double>();
      for (const auto& g : r.at("G")) {
        if (g.is_null())
          os << "\tnan";
        else
          os << "\t" << g.get<double>();
      }
      os << "\n";
    }
  } else {
    throw ConfigError("unknown export kind: " + kind +
                      " (expected returns|trajectories|activations|curriculum)");
  }
  return out_path;
}

}  // namespace sacmoe
