#include <doctest.h>

#include <cmath>
#include <cstring>

#include "driver.hpp"
#include "sacmoe/env.hpp"
#include "sacmoe/errors.hpp"
#include "sacmoe/hybrid.hpp"

using namespace sacmoe;

// ----- switching maps ----- //

TEST_CASE("single-region context always yields mode 0") {
  Context c = goal_single_mode_context(3.0, 0);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    ModeQuery q{uniform(rng, -10, 10), uniform(rng, -10, 10), 0};
    CHECK(active_mode(c.switching, q) == 0);
  }
}

TEST_CASE("two-interval arc map split at 50 m") {
  SwitchingMap map;
  Region r0;
  r0.kind = Region::Kind::Arc;
  r0.arc = {0.0, 50.0};
  r0.mode = 0;
  Region r1;
  r1.kind = Region::Kind::Arc;
  r1.arc = {50.0, 100.0};
  r1.mode = 1;
  map.regions = {r0, r1};
  CHECK(active_mode(map, ModeQuery{0, 0, 30.0}) == 0);
  CHECK(active_mode(map, ModeQuery{0, 0, 70.0}) == 1);
  CHECK(active_mode(map, ModeQuery{0, 0, 50.0}) == 1);  // half-open intervals
}

TEST_CASE("track 1 training context assigns each region its friction mode") {
  Context c = track1_reference_context();
  const Track& t = shipped_track(1);
  // pattern H M L H M L over the six regions
  const double expect[6] = {1.0, 0.5, 0.3, 1.0, 0.5, 0.3};
  for (int r = 0; r < t.region_count(); ++r) {
    auto [s0, s1] = t.region_span(r);
    const double mid = 0.5 * (s0 + s1);
    const int m = active_mode(c.switching, ModeQuery{0, 0, mid});
    CHECK(c.mu_of(m)(0) == doctest::Approx(expect[r]));
  }
}

TEST_CASE("uncovered state is fatal") {
  SwitchingMap map;
  Region r;
  r.kind = Region::Kind::Box;
  r.box = {0, 1, 0, 1};
  r.mode = 0;
  map.regions = {r};
  CHECK_THROWS_AS(active_mode(map, ModeQuery{5, 5, 0}), NoRegionCovers);
}

TEST_CASE("boundary ties resolve to the lowest region index") {
  Context c = goal_two_mode_context(0.0, 6.0, 0);
  CHECK(active_mode(c.switching, ModeQuery{0.0, 1.0, 0}) == 0);  // both boxes contain x=0
  CHECK(raw_match_count(c.switching, ModeQuery{0.0, 1.0, 0}) == 2);
}

TEST_CASE("exactly one mode fires across shipped contexts") {
  Rng rng(7);
  // goal workspace contexts: random positions in the box
  for (const Context& c : {goal_single_mode_context(0.0, 0), goal_two_mode_context(0.0, 6.0, 1)}) {
    for (int i = 0; i < 100000; ++i) {
      ModeQuery q{uniform(rng, -10, 10), uniform(rng, -10, 10), 0};
      CHECK_NOTHROW(active_mode(c.switching, q));
      CHECK(raw_match_count(c.switching, q) >= 1);
    }
  }
  // racing contexts: random arc positions
  for (const Context& c : track1_train_contexts()) {
    const Track& t = shipped_track(1);
    int hits = 0;
    for (int i = 0; i < 100000; ++i) {
      ModeQuery q{0, 0, uniform(rng, 0, t.length())};
      hits += (raw_match_count(c.switching, q) == 1) ? 1 : 0;
      active_mode(c.switching, q);
    }
    CHECK(hits == 100000);  // arc partition is disjoint by construction
  }
}

TEST_CASE("context json round trip") {
  Context c = track1_reference_context();
  nlohmann::json j = context_to_json(c);
  Context c2 = context_from_json(j);
  CHECK(c2.id == c.id);
  REQUIRE(c2.modes.size() == c.modes.size());
  for (size_t i = 0; i < c.modes.size(); ++i) CHECK(c2.modes[i].mu(0) == c.modes[i].mu(0));
  CHECK(context_to_json(c2) == j);
}

// ----- bicycle dynamics ----- //

TEST_CASE("mu = 0 recovers the nominal model to machine precision") {
  BicycleParams p;
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    BicycleState s{uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -3, 3),
                   uniform(rng, 0, 15)};
    BicycleAction a{uniform(rng, -4, 4), uniform(rng, -0.4, 0.4)};
    BicycleState d = bicycle_derivative(s, a, 0.0, p);
    // independent nominal evaluation
    CHECK(d.x == doctest::Approx(s.v * std::cos(s.theta)).epsilon(1e-15));
    CHECK(d.y == doctest::Approx(s.v * std::sin(s.theta)).epsilon(1e-15));
    CHECK(d.theta == doctest::Approx(s.v / p.wheelbase * std::tan(a.psi)).epsilon(1e-15));
    CHECK(d.v == doctest::Approx(a.a_long).epsilon(1e-15));
  }
}

TEST_CASE("perturbation terms at the probe point") {
  // theta=0, psi=0, a=0, v=2, mu=6: theta_dot = -(0.05*e^0 + 0)*6 = -0.3,
  // v_dot = -(0 + 0.3*2*sin 0)*6 = 0
  BicycleParams p;
  BicycleState s{0, 0, 0, 2};
  BicycleAction a{0, 0};
  BicycleState d = bicycle_derivative(s, a, 6.0, p);
  CHECK(d.theta == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(d.v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("perturbation scales linearly in mu at the probe point") {
  BicycleParams p;
  BicycleState s{0, 0, 0, 2};
  BicycleAction a{0, 0};
  const double nominal_theta_dot = 0.0;
  double prev = 0;
  for (double mu : {0.0, 3.0, 6.0}) {
    BicycleState d = bicycle_derivative(s, a, mu, p);
    const double pert = std::abs(d.theta - nominal_theta_dot);
    CHECK(pert == doctest::Approx(0.05 * mu).epsilon(1e-12));
    CHECK(pert >= prev);
    prev = pert;
  }
}

TEST_CASE("friction strictly shrinks the feasible acceleration set") {
  BicycleParams p;
  BicycleState s{0, 0, 0.2, 8};
  BicycleAction a{3.0, 0.35};
  BicycleState d_high = bicycle_derivative_friction(s, a, 1.0, p);
  BicycleState d_low = bicycle_derivative_friction(s, a, 0.3, p);
  // same steering demand, lower friction -> smaller realized heading rate
  CHECK(std::abs(d_low.theta) < std::abs(d_high.theta));
  CHECK(std::abs(s.v * d_low.theta) <= 0.3 * p.gravity + 1e-12);
  CHECK(std::abs(s.v * d_high.theta) <= 1.0 * p.gravity + 1e-12);
}

// ----- goal-seeking env ----- //

TEST_CASE("zero action from rest leaves position unchanged up to perturbation") {
  GoalSeekEnv env;
  Context c = goal_single_mode_context(0.0, 0);
  env.reset(c, 42);
  const BicycleState before = env.physical_state();
  EnvStep st = env.step({0.0, 0.0});
  CHECK_FALSE(st.done);
  CHECK(env.physical_state().x == doctest::Approx(before.x).epsilon(1e-12));
  CHECK(env.physical_state().y == doctest::Approx(before.y).epsilon(1e-12));
}

TEST_CASE("leaving the workspace crashes with penalty") {
  GoalSeekEnv::Options opt;
  opt.start_x = -9.7;  // near the boundary
  GoalSeekEnv env(opt);
  Context c = goal_single_mode_context(0.0, 0);
  env.reset(c, 3);
  EnvStep st;
  // drive hard toward the boundary
  for (int i = 0; i < 200; ++i) {
    st = env.step({4.0, 0.0});
    if (st.done) break;
  }
  // start heading is randomized; the car may also reach the far goal, but
  // from x=-9.7 with theta ~ pi it exits
  if (st.info.crashed) {
    CHECK(st.done);
    CHECK(st.reward < -5);  // crash penalty dominates
  }
}

TEST_CASE("step after done throws") {
  GoalSeekEnv::Options opt;
  opt.episode_cap = 3;
  GoalSeekEnv env(opt);
  env.reset(goal_single_mode_context(0.0, 0), 5);
  for (int i = 0; i < 3; ++i) env.step({0.1, 0.0});
  CHECK_THROWS_AS(env.step({0.1, 0.0}), StepAfterDone);
}

TEST_CASE("episode cap truncates") {
  GoalSeekEnv::Options opt;
  opt.episode_cap = 10;
  GoalSeekEnv env(opt);
  env.reset(goal_single_mode_context(0.0, 0), 5);
  EnvStep st;
  for (int i = 0; i < 10; ++i) st = env.step({0.0, 0.05});
  CHECK(st.done);
  CHECK(st.info.truncated);
}

TEST_CASE("oracle mode matches the pre-step state") {
  GoalSeekEnv env;
  Context c = goal_two_mode_context(0.0, 6.0, 0);
  env.reset(c, 9);
  CHECK(env.current_mode_index() == 0);  // starts at x = -6
  for (int i = 0; i < 100; ++i) {
    const int pre = env.current_mode_index();
    EnvStep st = env.step({3.0, 0.0});
    CHECK(st.info.active_mode_index == pre);
    CHECK(st.info.active_mu(0) == c.mu_of(pre)(0));
    if (st.done) break;
  }
}

TEST_CASE("trajectories are bit-identical for the same context, seed and actions") {
  auto run = [](int env_track) {
    std::vector<double> trace;
    if (env_track == 0) {
      GoalSeekEnv env;
      env.reset(goal_two_mode_context(0.0, 6.0, 0), 123);
      Rng arng(77);
      for (int i = 0; i < 150; ++i) {
        EnvStep st = env.step({uniform(arng, -4, 4), uniform(arng, -0.4, 0.4)});
        const BicycleState& s = env.physical_state();
        trace.insert(trace.end(), {s.x, s.y, s.theta, s.v, st.reward});
        if (st.done) break;
      }
    } else {
      RaceTrackEnv env;
      env.reset(track1_reference_context(), 123);
      Rng arng(77);
      for (int i = 0; i < 150; ++i) {
        EnvStep st = env.step({uniform(arng, -4, 4), uniform(arng, -0.4, 0.4)});
        const BicycleState& s = env.physical_state();
        trace.insert(trace.end(), {s.x, s.y, s.theta, s.v, st.reward});
        if (st.done) break;
      }
    }
    return trace;
  };
  for (int t : {0, 1}) {
    auto a = run(t), b = run(t);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }
}

// ----- racing env ----- //

TEST_CASE("track geometry closes and projects consistently") {
  for (int id : {1, 2}) {
    const Track& t = shipped_track(id);
    Track::Pose a = t.pose_at(0.0);
    Track::Pose b = t.pose_at(t.length() - 1e-9);
    CHECK(std::abs(a.x - b.x) < 1e-6);
    CHECK(std::abs(a.y - b.y) < 1e-6);
    Rng rng(13);
    for (int i = 0; i < 500; ++i) {
      const double s = uniform(rng, 0, t.length());
      const double off = uniform(rng, -0.9, 0.9) * t.half_width();
      Track::Pose p = t.pose_at(s);
      const double x = p.x - off * std::sin(p.heading);
      const double y = p.y + off * std::cos(p.heading);
      auto proj = t.project(x, y);
      CHECK(std::abs(t.progress(s, proj.s)) < 0.3);  // within polyline resolution
      CHECK(proj.e_lat == doctest::Approx(off).epsilon(0.05));
    }
  }
}

TEST_CASE("episode caps are 250 on track 1 and 400 on track 2") {
  RaceTrackEnv e1;
  CHECK(e1.episode_cap() == 250);
  RaceTrackEnv::Options o2;
  o2.track_id = 2;
  RaceTrackEnv e2(o2);
  CHECK(e2.episode_cap() == 400);
}

TEST_CASE("scripted driver completes laps on high friction and earns bonuses") {
  RaceTrackEnv env;
  Rng rng(3);
  Context c = sample_test_context(rng, env.track(), {SurfaceClass::High}, 0);
  env.reset(c, 21);
  double total = 0;
  int laps = 0;
  bool crashed = false;
  for (int i = 0; i < env.episode_cap(); ++i) {
    EnvStep st = env.step(testutil::scripted_drive(env));
    total += st.reward;
    laps = st.info.laps;
    crashed = st.info.crashed;
    if (st.done) break;
  }
  CHECK_FALSE(crashed);
  CHECK(laps >= 1);
  CHECK(total > env.track().length());  // progress reward plus lap bonus
}

TEST_CASE("steering hard into the wall crashes") {
  RaceTrackEnv env;
  env.reset(track1_reference_context(), 4);
  EnvStep st;
  for (int i = 0; i < 250; ++i) {
    st = env.step({4.0, 0.4});
    if (st.done) break;
  }
  CHECK(st.done);
  CHECK(st.info.crashed);
  CHECK(st.reward < -5);
}

// ----- test-context sampling ----- //

TEST_CASE("surface class ranges are respected over 1000 samples") {
  Rng rng(17);
  const Track& t = shipped_track(1);
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 1000; ++i) {
    Context c = sample_test_context(rng, t, {SurfaceClass::Low}, i);
    for (const auto& m : c.modes) {
      lo = std::min(lo, m.mu(0));
      hi = std::max(hi, m.mu(0));
    }
  }
  CHECK(lo >= 0.25);
  CHECK(hi <= 0.35);
}

TEST_CASE("high surface set yields frictions in [0.8, 1.0]") {
  Rng rng(18);
  const Track& t = shipped_track(1);
  Context c = sample_test_context(rng, t, {SurfaceClass::High}, 0);
  for (const auto& m : c.modes) {
    CHECK(m.mu(0) >= 0.8);
    CHECK(m.mu(0) <= 1.0);
  }
}

TEST_CASE("empty surface set throws") {
  Rng rng(19);
  CHECK_THROWS_AS(sample_test_context(rng, shipped_track(1), {}, 0), EmptySurfaceSet);
  CHECK_THROWS_AS(parse_surface_classes(""), EmptySurfaceSet);
  CHECK_THROWS_AS(parse_surface_class("gravel"), UnknownSurfaceClass);
}
