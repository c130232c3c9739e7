#include "sacmoe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "sacmoe/errors.hpp"

namespace sacmoe {

VecD NetPolicy::act(const VecD& obs, const VecD& oracle_mu, Rng& rng, StepDecision* out) const {
  VecD in = obs;
  if (augment_) {
    in.resize(obs.size() + oracle_mu.size());
    in << obs, oracle_mu;
  }
  std::vector<RouterDecision> dec;
  VecD a = actor_act(*net_, in, deterministic_, /*training=*/false, rng, out ? &dec : nullptr);
  if (out) out->decisions = std::move(dec);
  return a;
}

VecD SwitchedEvalPolicy::act(const VecD& obs, const VecD& oracle_mu, Rng& rng,
                             StepDecision* out) const {
  int sel = -1;
  VecD a = switched_action(bank_, obs, oracle_mu, rng, deterministic_, &sel);
  if (out) out->selected = sel;
  return a;
}

namespace {

struct EpisodeLogs {
  std::vector<std::string> traj;
  std::vector<std::string> activations;
};

EvalEpisode run_one_episode(Env& env, const EvalPolicy& policy, const EvalClassSpec& spec,
                            int class_idx, int episode_idx, const EvalOptions& opt,
                            EpisodeLogs* logs) {
  Context ctx;
  if (!spec.surfaces.empty()) {
    auto* race = dynamic_cast<RaceTrackEnv*>(&env);
    if (!race) throw ConfigError("surface-class evaluation requires the racing environment");
    Rng ctx_rng = make_stream(opt.seed, {0xc0u, static_cast<std::uint64_t>(class_idx),
                                         static_cast<std::uint64_t>(episode_idx)});
    ctx = sample_test_context(ctx_rng, race->track(), spec.surfaces, episode_idx);
  } else if (spec.fixed_context) {
    ctx = *spec.fixed_context;
  } else {
    throw ConfigError("eval class '" + spec.label + "' has neither surfaces nor a fixed context");
  }

  const std::uint64_t ep_seed = mix64(opt.seed ^ mix64((static_cast<std::uint64_t>(class_idx) << 32) ^
                                                       static_cast<std::uint64_t>(episode_idx)));
  VecD obs = env.reset(ctx, ep_seed);
  Rng act_rng = make_stream(opt.seed, {0xacu, static_cast<std::uint64_t>(class_idx),
                                       static_cast<std::uint64_t>(episode_idx)});
  const VecD scale = env.action_scale();

  EvalEpisode ep;
  ep.class_label = spec.label;
  ep.episode = episode_idx;
  ep.context_id = ctx.id;

  for (int t = 0;; ++t) {
    const VecD mu = env.current_mu();
    StepDecision dec;
    VecD a = policy.act(obs, mu, act_rng, &dec);
    if (opt.step_hook) opt.step_hook(env, mu, dec);

    const BicycleState pre = env.physical_state();
    EnvStep st = env.step({a(0) * scale(0), a(1) * scale(1)});

    if (logs && !opt.traj_path.empty()) {
      nlohmann::json j{{"class", spec.label},
                       {"episode", episode_idx},
                       {"t", t},
                       {"state", {pre.x, pre.y, pre.theta, pre.v}},
                       {"action", {a(0) * scale(0), a(1) * scale(1)}},
                       {"reward", st.reward},
                       {"mode_index", st.info.active_mode_index}};
      logs->traj.push_back(j.dump());
    }
    if (logs && !opt.activations_path.empty() && !dec.decisions.empty()) {
      auto sel = nlohmann::json::array();
      auto wts = nlohmann::json::array();
      for (const auto& d : dec.decisions) {
        sel.push_back(d.selected);
        wts.push_back(std::vector<double>(d.weights.data(), d.weights.data() + d.weights.size()));
      }
      nlohmann::json j{{"class", spec.label},
                       {"episode", episode_idx},
                       {"t", t},
                       {"context_id", ctx.id},
                       {"active_mode", st.info.active_mode_index},
                       {"active_mu", st.info.active_mu(0)},
                       {"selected", sel},
                       {"weights", wts}};
      logs->activations.push_back(j.dump());
    }

    ep.episode_return += st.reward;
    ++ep.steps;
    if (st.info.lap_time > 0) ep.lap_times.push_back(st.info.lap_time);
    ep.laps = std::max(ep.laps, st.info.laps);
    obs = st.next_obs;
    if (st.done) {
      ep.crashed = st.info.crashed;
      break;
    }
  }
  return ep;
}

}  // namespace

std::vector<ClassMetrics> aggregate_episodes(const std::vector<EvalEpisode>& eps) {
  std::vector<ClassMetrics> out;
  std::vector<std::string> order;
  for (const auto& e : eps)
    if (std::find(order.begin(), order.end(), e.class_label) == order.end())
      order.push_back(e.class_label);

  for (const auto& label : order) {
    ClassMetrics m;
    m.label = label;
    double lap_time_sum = 0;
    long lap_time_count = 0;
    for (const auto& e : eps) {
      if (e.class_label != label) continue;
      ++m.episodes;
      m.laps_mean += e.laps;
      m.crash_rate += e.crashed ? 1.0 : 0.0;
      m.return_mean += e.episode_return;
      for (double lt : e.lap_times) {
        lap_time_sum += lt;
        ++lap_time_count;
      }
    }
    m.laps_mean /= m.episodes;
    m.crash_rate /= m.episodes;
    m.return_mean /= m.episodes;
    m.lap_time_mean = lap_time_count > 0 ? lap_time_sum / lap_time_count
                                         : std::numeric_limits<double>::quiet_NaN();
    out.push_back(m);
  }
  return out;
}

EvalReport run_eval(const EnvFactory& make_env, const EvalPolicy& policy,
                    const std::vector<EvalClassSpec>& classes, const EvalOptions& opt) {
  if (opt.episodes <= 0)
    throw InvalidEpisodeCount("run_eval: episode count must be positive, got " +
                              std::to_string(opt.episodes));
  if (classes.empty()) throw ConfigError("run_eval: no evaluation classes");

  const int total = static_cast<int>(classes.size()) * opt.episodes;
  std::vector<EvalEpisode> episodes(total);
  std::vector<EpisodeLogs> logs(total);
  const bool want_logs = !opt.traj_path.empty() || !opt.activations_path.empty();

  int workers = opt.step_hook ? 1 : std::max(1, opt.workers);
  workers = std::min<int>(workers, total);

  auto work = [&](int w) {
    auto env = make_env();
    for (int i = w; i < total; i += workers) {
      const int class_idx = i / opt.episodes;
      const int episode_idx = i % opt.episodes;
      episodes[i] = run_one_episode(*env, policy, classes[class_idx], class_idx, episode_idx, opt,
                                    want_logs ? &logs[i] : nullptr);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  EvalReport report;
  report.episodes = std::move(episodes);
  report.classes = aggregate_episodes(report.episodes);

  if (!opt.records_path.empty()) {
    std::ofstream os(opt.records_path, std::ios::trunc);
    if (!os) throw ConfigError("cannot write " + opt.records_path);
    for (const auto& e : report.episodes) {
      nlohmann::json j{{"class", e.class_label}, {"episode", e.episode},
                       {"context_id", e.context_id}, {"return", e.episode_return},
                       {"steps", e.steps},          {"laps", e.laps},
                       {"crashed", e.crashed},      {"lap_times", e.lap_times}};
      os << j.dump() << "\n";
    }
  }
  auto flush_logs = [&](const std::string& path, auto member) {
    if (path.empty()) return;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw ConfigError("cannot write " + path);
    for (const auto& l : logs)
      for (const auto& line : l.*member) os << line << "\n";
  };
  flush_logs(opt.traj_path, &EpisodeLogs::traj);
  flush_logs(opt.activations_path, &EpisodeLogs::activations);
  return report;
}

EvalReport recompute_report(const std::string& records_path) {
  std::ifstream is(records_path);
  if (!is) throw MissingLogs("no per-episode records at " + records_path);
  EvalReport report;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    EvalEpisode e;
    e.class_label = j.at("class").get<std::string>();
    e.episode = j.at("episode").get<int>();
    e.context_id = j.at("context_id").get<int>();
    e.episode_return = j.at("return").get<double>();
    e.steps = j.at("steps").get<long>();
    e.laps = j.at("laps").get<int>();
    e.crashed = j.at("crashed").get<bool>();
    e.lap_times = j.at("lap_times").get<std::vector<double>>();
    report.episodes.push_back(std::move(e));
  }
  report.classes = aggregate_episodes(report.episodes);
  return report;
}

std::string report_table(const EvalReport& report) {
  std::ostringstream os;
  os << "class                     episodes  laps   lap_time  crash_rate  return\n";
  for (const auto& m : report.classes) {
    char buf[160];
    const bool no_laps = m.laps_mean == 0.0;
    std::string laps = no_laps ? "-" : [&] {
      char b[32];
      std::snprintf(b, sizeof b, "%.2f", m.laps_mean);
      return std::string(b);
    }();
    std::string lt = std::isnan(m.lap_time_mean) ? "-" : [&] {
      char b[32];
      std::snprintf(b, sizeof b, "%.2f", m.lap_time_mean);
      return std::string(b);
    }();
    std::snprintf(buf, sizeof buf, "%-25s %8d  %-6s %-9s %-11.2f %.2f\n", m.label.c_str(), m.episodes,
                  laps.c_str(), lt.c_str(), m.crash_rate, m.return_mean);
    os << buf;
  }
  return os.str();
}

nlohmann::json report_to_json(const EvalReport& report) {
  auto arr = nlohmann::json::array();
  for (const auto& m : report.classes) {
    nlohmann::json j{{"label", m.label},
                     {"episodes", m.episodes},
                     {"laps_mean", m.laps_mean},
                     {"crash_rate", m.crash_rate},
                     {"return_mean", m.return_mean}};
    if (std::isnan(m.lap_time_mean))
      j["lap_time_mean"] = nullptr;
    else
      j["lap_time_mean"] = m.lap_time_mean;
    arr.push_back(j);
  }
  return {{"classes", arr}};
}

}  // namespace sacmoe
