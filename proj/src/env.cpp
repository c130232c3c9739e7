#include "sacmoe/env.hpp"

#include <algorithm>
#include <cmath>

#include "sacmoe/errors.hpp"

namespace sacmoe {

// ----- goal-seeking workspace ----- //

GoalSeekEnv::GoalSeekEnv(Options opt) : opt_(opt) {}

VecD GoalSeekEnv::action_scale() const {
  VecD s(2);
  s << params_.a_max, params_.psi_max;
  return s;
}

double GoalSeekEnv::goal_distance(const BicycleState& s) const {
  return std::hypot(s.x - opt_.goal_x, s.y - opt_.goal_y);
}

VecD GoalSeekEnv::reset(const Context& ctx, std::uint64_t seed) {
  ctx.validate();
  ctx_ = ctx;
  rng_ = make_stream(seed, {0xe11u});
  state_ = BicycleState{};
  state_.x = opt_.start_x + uniform(rng_, -0.5, 0.5);
  state_.y = opt_.start_y + uniform(rng_, -1.0, 1.0);
  state_.theta = uniform(rng_, -0.3, 0.3);
  state_.v = 0;
  steps_ = 0;
  progress_ = 0;
  dist_ = goal_distance(state_);
  done_ = false;
  live_ = true;
  return observe();
}

VecD GoalSeekEnv::observe() const {
  const double h = opt_.workspace_half;
  VecD o(7);
  o << state_.x / h, state_.y / h, std::cos(state_.theta), std::sin(state_.theta),
      state_.v / params_.v_max, (opt_.goal_x - state_.x) / h, (opt_.goal_y - state_.y) / h;
  return o;
}

int GoalSeekEnv::current_mode_index() const {
  return active_mode(ctx_.switching, ModeQuery{state_.x, state_.y, 0.0});
}

EnvStep GoalSeekEnv::step(const BicycleAction& a_in) {
  if (!live_ || done_) throw StepAfterDone("GoalSeekEnv::step after episode end");
  const BicycleAction a = clamp_action(a_in, params_);
  const int mode = current_mode_index();
  const double mu = ctx_.mu_of(mode)(0);

  state_ = rk4_step(
      state_, [&](const BicycleState& s) { return bicycle_derivative(s, a, mu, params_); }, params_.dt);
  state_.v = std::clamp(state_.v, params_.v_min, params_.v_max);
  ++steps_;

  const double d_new = goal_distance(state_);
  double reward = dist_ - d_new;
  progress_ += dist_ - d_new;
  dist_ = d_new;

  EnvStep out;
  out.info.active_mode_index = mode;
  out.info.active_mu = ctx_.mu_of(mode);
  const double h = opt_.workspace_half;
  if (d_new <= opt_.goal_radius) {
    reward += 10.0;
    out.info.reached_goal = true;
    done_ = true;
  } else if (std::abs(state_.x) > h || std::abs(state_.y) > h) {
    reward -= 10.0;
    out.info.crashed = true;
    done_ = true;
  } else if (steps_ >= opt_.episode_cap) {
    out.info.truncated = true;
    done_ = true;
  }
  out.info.progress = progress_;
  out.reward = reward;
  out.done = done_;
  out.next_obs = observe();
  return out;
}

Context goal_single_mode_context(double mu, int id, double workspace_half) {
  Context c;
  c.id = id;
  c.modes = {LatentMode::scalar(mu)};
  Region r;
  r.kind = Region::Kind::Box;
  r.box = {-workspace_half, workspace_half, -workspace_half, workspace_half};
  r.mode = 0;
  c.switching.regions = {r};
  c.validate();
  return c;
}

Context goal_two_mode_context(double mu_left, double mu_right, int id, double workspace_half) {
  Context c;
  c.id = id;
  c.modes = {LatentMode::scalar(mu_left), LatentMode::scalar(mu_right)};
  Region left;
  left.kind = Region::Kind::Box;
  left.box = {-workspace_half, 0.0, -workspace_half, workspace_half};
  left.mode = 0;
  Region right;
  right.kind = Region::Kind::Box;
  right.box = {0.0, workspace_half, -workspace_half, workspace_half};
  right.mode = 1;
  c.switching.regions = {left, right};
  c.validate();
  return c;
}

// ----- racing circuit ----- //

const Track& shipped_track(int track_id) {
  static const Track t1 = Track::track1();
  static const Track t2 = Track::track2();
  if (track_id == 1) return t1;
  if (track_id == 2) return t2;
  throw ConfigError("unknown track id " + std::to_string(track_id));
}

RaceTrackEnv::RaceTrackEnv(Options opt)
    : opt_(opt), track_(shipped_track(opt.track_id)) {
  if (opt_.track_id == 2 && opt_.episode_cap == 250) opt_.episode_cap = 400;
}

VecD RaceTrackEnv::action_scale() const {
  VecD s(2);
  s << params_.a_max, params_.psi_max;
  return s;
}

VecD RaceTrackEnv::reset(const Context& ctx, std::uint64_t seed) {
  ctx.validate();
  ctx_ = ctx;
  rng_ = make_stream(seed, {0xace5u});
  Track::Pose p0 = track_.pose_at(0.0);
  const double e0 = uniform(rng_, -0.4, 0.4);
  state_.x = p0.x - e0 * std::sin(p0.heading);
  state_.y = p0.y + e0 * std::cos(p0.heading);
  state_.theta = p0.heading + uniform(rng_, -0.1, 0.1);
  state_.v = uniform(rng_, 0.5, 1.5);
  proj_ = track_.project(state_.x, state_.y);
  steps_ = 0;
  cum_progress_ = 0;
  laps_ = 0;
  last_lap_step_ = 0;
  done_ = false;
  return observe();
}

VecD RaceTrackEnv::observe() const {
  const double L = track_.length();
  const double wb = params_.wheelbase;
  double dpsi = state_.theta - proj_.heading;
  dpsi = std::atan2(std::sin(dpsi), std::cos(dpsi));  // wrapped heading error
  VecD o(9);
  o << proj_.e_lat / track_.half_width(), std::sin(dpsi), std::cos(dpsi), state_.v / params_.v_max,
      proj_.curvature * wb, track_.pose_at(proj_.s + 5.0).curvature * wb,
      track_.pose_at(proj_.s + 10.0).curvature * wb, std::sin(2 * M_PI * proj_.s / L),
      std::cos(2 * M_PI * proj_.s / L);
  return o;
}

int RaceTrackEnv::current_mode_index() const {
  return active_mode(ctx_.switching, ModeQuery{state_.x, state_.y, proj_.s});
}

EnvStep RaceTrackEnv::step(const BicycleAction& a_in) {
  if (done_) throw StepAfterDone("RaceTrackEnv::step after episode end");
  const int mode = current_mode_index();
  const double mu_f = ctx_.mu_of(mode)(0);

  BicycleAction a = clamp_action(a_in, params_);
  // friction shrinks the admissible longitudinal envelope
  a.a_long = std::clamp(a.a_long, -mu_f * params_.a_max, mu_f * params_.a_max);

  state_ = rk4_step(
      state_, [&](const BicycleState& s) { return bicycle_derivative_friction(s, a, mu_f, params_); },
      params_.dt);
  state_.v = std::clamp(state_.v, params_.v_min, params_.v_max);
  ++steps_;

  const double s_prev = proj_.s;
  proj_ = track_.project(state_.x, state_.y);
  const double ds = track_.progress(s_prev, proj_.s);
  cum_progress_ += ds;
  double reward = ds;

  EnvStep out;
  out.info.active_mode_index = mode;
  out.info.active_mu = ctx_.mu_of(mode);

  // lap completion: cumulative progress passes the start line again
  if (cum_progress_ >= track_.length() * (laps_ + 1)) {
    ++laps_;
    reward += opt_.lap_bonus;
    out.info.lap_time = (steps_ - last_lap_step_) * params_.dt;
    last_lap_step_ = steps_;
  }

  if (std::abs(proj_.e_lat) > track_.half_width()) {
    reward -= opt_.crash_penalty;
    out.info.crashed = true;
    done_ = true;
  } else if (steps_ >= opt_.episode_cap) {
    out.info.truncated = true;
    done_ = true;
  }
  out.info.progress = cum_progress_;
  out.info.laps = laps_;
  out.reward = reward;
  out.done = done_;
  out.next_obs = observe();
  return out;
}

// ----- surfaces and context sets ----- //

std::pair<double, double> surface_range(SurfaceClass c) {
  switch (c) {
    case SurfaceClass::Low: return {0.25, 0.35};
    case SurfaceClass::Medium: return {0.45, 0.6};
    case SurfaceClass::High: return {0.8, 1.0};
  }
  throw UnknownSurfaceClass("bad surface class enum");
}

SurfaceClass parse_surface_class(const std::string& name) {
  if (name == "low" || name == "L") return SurfaceClass::Low;
  if (name == "medium" || name == "med" || name == "M") return SurfaceClass::Medium;
  if (name == "high" || name == "H") return SurfaceClass::High;
  throw UnknownSurfaceClass("unknown surface class: " + name);
}

std::vector<SurfaceClass> parse_surface_classes(const std::string& csv) {
  std::vector<SurfaceClass> out;
  std::string cur;
  for (char ch : csv + ",") {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(parse_surface_class(cur));
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur += ch;
    }
  }
  if (out.empty()) throw EmptySurfaceSet("no surface classes in: " + csv);
  return out;
}

std::string surface_set_label(const std::vector<SurfaceClass>& set) {
  std::string s;
  for (size_t i = 0; i < set.size(); ++i) {
    if (i) s += ",";
    switch (set[i]) {
      case SurfaceClass::Low: s += "low"; break;
      case SurfaceClass::Medium: s += "medium"; break;
      case SurfaceClass::High: s += "high"; break;
    }
  }
  return s;
}

namespace {
Context track_context_from_pattern(const Track& track, const std::vector<double>& friction_by_region,
                                   int id) {
  if (static_cast<int>(friction_by_region.size()) != track.region_count())
    throw ConfigError("friction pattern size != region count");
  Context c;
  c.id = id;
  // one mode per distinct friction value, in first-appearance order
  std::vector<double> values;
  for (double f : friction_by_region) {
    if (std::find(values.begin(), values.end(), f) == values.end()) values.push_back(f);
  }
  for (double f : values) c.modes.push_back(LatentMode::scalar(f));
  for (int r = 0; r < track.region_count(); ++r) {
    auto [s0, s1] = track.region_span(r);
    Region reg;
    reg.kind = Region::Kind::Arc;
    reg.arc = {s0, s1};
    reg.mode = static_cast<int>(std::find(values.begin(), values.end(), friction_by_region[r]) -
                                values.begin());
    c.switching.regions.push_back(reg);
  }
  c.validate();
  return c;
}
}  // namespace

std::vector<Context> track1_train_contexts() {
  const Track& t = shipped_track(1);
  const double H = 1.0, M = 0.5, L = 0.3;
  std::vector<std::vector<double>> patterns = {
      {H, H, H, H, H, H},  // single-surface contexts
      {M, M, M, M, M, M},
      {L, L, L, L, L, L},
      {H, M, L, H, M, L},  // mixed assignments
      {L, H, M, L, H, M},
      {M, L, H, M, L, H},
      {H, H, M, M, L, L},
      {L, L, H, H, M, M},
  };
  std::vector<Context> out;
  for (size_t i = 0; i < patterns.size(); ++i)
    out.push_back(track_context_from_pattern(t, patterns[i], static_cast<int>(i)));
  return out;
}

Context track1_reference_context() { return track1_train_contexts()[3]; }

Context sample_test_context(Rng& rng, const Track& track, const std::vector<SurfaceClass>& surface_set,
                            int id) {
  if (surface_set.empty()) throw EmptySurfaceSet("sample_test_context: empty surface set");
  std::vector<double> fr(track.region_count());
  for (double& f : fr) {
    SurfaceClass c = surface_set[uniform_int(rng, static_cast<int>(surface_set.size()))];
    auto [lo, hi] = surface_range(c);
    f = uniform(rng, lo, hi);
  }
  // distinct draws per region: each region is its own mode
  Context c;
  c.id = id;
  for (int r = 0; r < track.region_count(); ++r) {
    c.modes.push_back(LatentMode::scalar(fr[r]));
    auto [s0, s1] = track.region_span(r);
    Region reg;
    reg.kind = Region::Kind::Arc;
    reg.arc = {s0, s1};
    reg.mode = r;
    c.switching.regions.push_back(reg);
  }
  c.validate();
  return c;
}

}  // namespace sacmoe
