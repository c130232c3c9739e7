#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "driver.hpp"
#include "sacmoe/eval.hpp"
#include "sacmoe/experiment.hpp"

using namespace sacmoe;
namespace fs = std::filesystem;

namespace {

// steers hard into the wall at full throttle: crashes every episode
class CrashPolicy : public EvalPolicy {
 public:
  VecD act(const VecD&, const VecD&, Rng&, StepDecision*) const override {
    VecD a(2);
    a << 1.0, 1.0;
    return a;
  }
};

EnvFactory race_factory() {
  return [] { return std::make_unique<RaceTrackEnv>(); };
}

std::vector<EvalClassSpec> high_class() {
  std::vector<EvalClassSpec> c(1);
  c[0].label = "high";
  c[0].surfaces = {SurfaceClass::High};
  return c;
}

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("zero episodes is rejected") {
  EvalOptions opt;
  opt.episodes = 0;
  testutil::ObsDriverPolicy policy(shipped_track(1).half_width());
  CHECK_THROWS_AS(run_eval(race_factory(), policy, high_class(), opt), InvalidEpisodeCount);
}

TEST_CASE("run_eval is deterministic given the seed") {
  testutil::ObsDriverPolicy policy(shipped_track(1).half_width());
  EvalOptions opt;
  opt.episodes = 12;
  opt.seed = 5;
  EvalReport a = run_eval(race_factory(), policy, high_class(), opt);
  EvalReport b = run_eval(race_factory(), policy, high_class(), opt);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].episode_return == b.episodes[i].episode_return);
    CHECK(a.episodes[i].laps == b.episodes[i].laps);
  }
  CHECK(a.classes[0].return_mean == b.classes[0].return_mean);
}

TEST_CASE("scripted driver on high friction completes laps with few crashes") {
  testutil::ObsDriverPolicy policy(shipped_track(1).half_width());
  EvalOptions opt;
  opt.episodes = 20;
  opt.seed = 7;
  EvalReport rep = run_eval(race_factory(), policy, high_class(), opt);
  CHECK(rep.classes[0].laps_mean >= 1.0);
  CHECK(rep.classes[0].crash_rate <= 0.2);
  CHECK(rep.classes[0].lap_time_mean > 0);
}

TEST_CASE("all-crash policy reports laps 0, crash rate 1, lap time absent") {
  CrashPolicy policy;
  EvalOptions opt;
  opt.episodes = 10;
  opt.seed = 9;
  EvalReport rep = run_eval(race_factory(), policy, high_class(), opt);
  CHECK(rep.classes[0].laps_mean == 0.0);
  CHECK(rep.classes[0].crash_rate == 1.0);
  CHECK(std::isnan(rep.classes[0].lap_time_mean));
  // the printed table uses the "-" convention for absent lap stats
  const std::string table = report_table(rep);
  CHECK(table.find("-") != std::string::npos);
  // and the JSON report carries null
  CHECK(report_to_json(rep)["classes"][0]["lap_time_mean"].is_null());
}

TEST_CASE("report aggregation matches independent recomputation from records exactly") {
  testutil::ObsDriverPolicy policy(shipped_track(1).half_width());
  EvalOptions opt;
  opt.episodes = 25;
  opt.seed = 11;
  opt.records_path = tmp_path("sacmoe_eval_records.jsonl");
  EvalReport rep = run_eval(race_factory(), policy, high_class(), opt);
  EvalReport rec = recompute_report(opt.records_path);
  REQUIRE(rec.classes.size() == rep.classes.size());
  for (size_t i = 0; i < rep.classes.size(); ++i) {
    CHECK(rec.classes[i].laps_mean == rep.classes[i].laps_mean);
    CHECK(rec.classes[i].crash_rate == rep.classes[i].crash_rate);
    CHECK(rec.classes[i].return_mean == rep.classes[i].return_mean);
    const bool both_nan =
        std::isnan(rec.classes[i].lap_time_mean) && std::isnan(rep.classes[i].lap_time_mean);
    CHECK((both_nan || rec.classes[i].lap_time_mean == rep.classes[i].lap_time_mean));
  }
  fs::remove(opt.records_path);
}

TEST_CASE("multi-class evaluation keeps classes separate") {
  testutil::ObsDriverPolicy policy(shipped_track(1).half_width());
  std::vector<EvalClassSpec> classes(2);
  classes[0].label = "high";
  classes[0].surfaces = {SurfaceClass::High};
  classes[1].label = "low";
  classes[1].surfaces = {SurfaceClass::Low};
  EvalOptions opt;
  opt.episodes = 8;
  opt.seed = 13;
  EvalReport rep = run_eval(race_factory(), policy, classes, opt);
  REQUIRE(rep.classes.size() == 2);
  CHECK(rep.classes[0].label == "high");
  CHECK(rep.classes[1].label == "low");
  // low friction is slower: fewer laps on average
  CHECK(rep.classes[1].laps_mean <= rep.classes[0].laps_mean);
}

TEST_CASE("fixed-context evaluation works on the goal env") {
  EnvFactory factory = [] { return std::make_unique<GoalSeekEnv>(); };
  CrashPolicy policy;  // full throttle straight: reaches the goal region boundary or times out
  std::vector<EvalClassSpec> classes(1);
  classes[0].label = "two_mode";
  classes[0].fixed_context = goal_two_mode_context(0.0, 6.0, 0);
  EvalOptions opt;
  opt.episodes = 5;
  opt.seed = 15;
  EvalReport rep = run_eval(factory, policy, classes, opt);
  CHECK(rep.classes[0].episodes == 5);
  CHECK(rep.classes[0].laps_mean == 0.0);
}

TEST_CASE("trajectory logs round-trip step counts with the records") {
  testutil::ObsDriverPolicy policy(shipped_track(1).half_width());
  EvalOptions opt;
  opt.episodes = 6;
  opt.seed = 17;
  opt.records_path = tmp_path("sacmoe_eval_rec2.jsonl");
  opt.traj_path = tmp_path("sacmoe_eval_traj.jsonl");
  EvalReport rep = run_eval(race_factory(), policy, high_class(), opt);

  long steps_total = 0;
  for (const auto& e : rep.episodes) steps_total += e.steps;
  std::ifstream is(opt.traj_path);
  long lines = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++lines;
  CHECK(lines == steps_total);
  fs::remove(opt.records_path);
  fs::remove(opt.traj_path);
}

// ----- experiment config and exports ----- //

TEST_CASE("config hash is stable and sensitive to changes") {
  ExperimentConfig a, b;
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 1;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("config json round trip preserves the hash") {
  ExperimentConfig cfg;
  cfg.model = "sac_moe";
  cfg.curriculum = "C";
  cfg.steps = 1234;
  cfg.sac.batch_size = 64;
  ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
  CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("config validation rejects bad fields") {
  ExperimentConfig cfg;
  cfg.env.kind = "boat";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.model = "dqn";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ExperimentConfig{};
  cfg.env.contexts = "no_such_set";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("train experiment writes a complete, reproducible run directory") {
  const std::string dir = tmp_path("sacmoe_run_test");
  fs::remove_all(dir);
  ExperimentConfig cfg;
  cfg.env.kind = "goal";
  cfg.env.contexts = "goal_two_mode";
  cfg.env.episode_cap = 40;
  cfg.model = "sac_moe";
  cfg.curriculum = "C";
  cfg.seed = 3;
  cfg.steps = 260;
  cfg.checkpoint_interval = 0;
  cfg.out = dir;
  cfg.sac.batch_size = 16;
  cfg.sac.warmup_steps = 60;
  cfg.sac.critic_hidden = 16;
  cfg.moe.tokens = 2;
  cfg.moe.token_dim = 4;
  cfg.moe.experts = 2;
  cfg.moe.top_k = 1;
  cfg.moe.encoder_hidden = {8};
  run_train_experiment(cfg);

  for (const std::string f :
       {"config.json", "run_meta.json", "metrics.jsonl", "curriculum.jsonl", "final.snap",
        "policy.ckpt"})
    CHECK(fs::exists(dir + "/" + f));

  // run_meta carries hash + seed + version
  std::ifstream is(dir + "/run_meta.json");
  nlohmann::json meta = nlohmann::json::parse(is);
  CHECK(meta.at("seed").get<std::uint64_t>() == 3);
  CHECK(meta.at("version").get<std::string>() == kVersionStamp);
  CHECK(meta.at("config_hash").get<std::string>().size() == 16);

  // exports from the run directory
  const std::string returns_tsv = export_plot_data(dir, "returns");
  std::ifstream rt(returns_tsv);
  std::string header;
  std::getline(rt, header);
  CHECK(header.substr(0, 4) == "step");
  CHECK(fs::exists(export_plot_data(dir, "curriculum")));
  CHECK_THROWS_AS(export_plot_data(dir, "trajectories"), MissingLogs);
  CHECK_THROWS_AS(export_plot_data(dir, "nonsense"), ConfigError);
  fs::remove_all(dir);
}

TEST_CASE("export on an empty run dir raises MissingLogs") {
  const std::string dir = tmp_path("sacmoe_empty_run");
  fs::remove_all(dir);
  fs::create_directories(dir);
  CHECK_THROWS_AS(export_plot_data(dir, "returns"), MissingLogs);
  fs::remove_all(dir);
}
