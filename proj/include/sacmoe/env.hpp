#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sacmoe/bicycle.hpp"
#include "sacmoe/hybrid.hpp"
#include "sacmoe/rng.hpp"
#include "sacmoe/track.hpp"

namespace sacmoe {

// Oracle side-channel. Exposed for the SAC-UPTrue / SAC-Sw baselines and for
// analysis; never part of the observation handed to SAC or SAC-MoE.
struct EnvInfo {
  int active_mode_index = 0;  // mode active at the pre-step state
  VecD active_mu;
  double progress = 0;  // cumulative task progress (arc length / distance gained)
  bool crashed = false;
  bool reached_goal = false;
  bool truncated = false;  // done came from the step budget, not a terminal event
  int laps = 0;
  double lap_time = 0;  // seconds, of the lap completed this step (0 otherwise)
};

struct EnvStep {
  VecD next_obs;
  double reward = 0;
  bool done = false;
  EnvInfo info;
};

// Single-owner, single-thread environment. Parallel rollouts use one
// instance per thread with streams derived from (root seed, context id,
// episode index).
class Env {
 public:
  virtual ~Env() = default;

  virtual int observation_dim() const = 0;
  int action_dim() const { return 2; }
  // per-component half-range mapping normalized actions in [-1,1] to
  // physical units (a_long, psi)
  virtual VecD action_scale() const = 0;

  virtual VecD reset(const Context& ctx, std::uint64_t seed) = 0;
  virtual EnvStep step(const BicycleAction& a) = 0;

  // oracle view of the current (pre-step) state
  virtual int current_mode_index() const = 0;
  VecD current_mu() const { return context().mu_of(current_mode_index()); }

  virtual const Context& context() const = 0;
  virtual const BicycleState& physical_state() const = 0;
  virtual int steps_taken() const = 0;
  virtual int episode_cap() const = 0;
  virtual std::unique_ptr<Env> clone_fresh() const = 0;  // same config, unreset

  const BicycleParams& bicycle_params() const { return params_; }

 protected:
  BicycleParams params_{};
};

// ----- goal-seeking workspace (the two-mode demonstration setting) ----- //

struct GoalSeekOptions {
  double workspace_half = 10.0;  // box [-h, h]^2
  double goal_x = 6.0, goal_y = 0.0;
  double goal_radius = 0.6;
  double start_x = -6.0, start_y = 0.0;
  int episode_cap = 200;
};

class GoalSeekEnv : public Env {
 public:
  using Options = GoalSeekOptions;

  explicit GoalSeekEnv(Options opt = Options());

  int observation_dim() const override { return 7; }
  VecD action_scale() const override;
  VecD reset(const Context& ctx, std::uint64_t seed) override;
  EnvStep step(const BicycleAction& a) override;
  int current_mode_index() const override;
  const Context& context() const override { return ctx_; }
  const BicycleState& physical_state() const override { return state_; }
  int steps_taken() const override { return steps_; }
  int episode_cap() const override { return opt_.episode_cap; }
  std::unique_ptr<Env> clone_fresh() const override { return std::make_unique<GoalSeekEnv>(opt_); }

  const Options& options() const { return opt_; }

 private:
  Options opt_;
  Context ctx_;
  BicycleState state_{};
  Rng rng_;
  bool live_ = false;
  bool done_ = true;
  int steps_ = 0;
  double dist_ = 0;     // current distance to goal
  double progress_ = 0; // cumulative distance gained

  VecD observe() const;
  double goal_distance(const BicycleState& s) const;
};

// single-mode workspace context with perturbation gain mu
Context goal_single_mode_context(double mu, int id, double workspace_half = 10.0);
// two vertical half-plane regions: x < 0 runs modes[0], x >= 0 modes[1]
Context goal_two_mode_context(double mu_left, double mu_right, int id, double workspace_half = 10.0);

// ----- racing circuit ----- //

struct RaceTrackOptions {
  int track_id = 1;  // 1 or 2
  int episode_cap = 250;
  double lap_bonus = 5.0;
  double crash_penalty = 10.0;
};

class RaceTrackEnv : public Env {
 public:
  using Options = RaceTrackOptions;

  explicit RaceTrackEnv(Options opt = Options());

  int observation_dim() const override { return 9; }
  VecD action_scale() const override;
  VecD reset(const Context& ctx, std::uint64_t seed) override;
  EnvStep step(const BicycleAction& a) override;
  int current_mode_index() const override;
  const Context& context() const override { return ctx_; }
  const BicycleState& physical_state() const override { return state_; }
  int steps_taken() const override { return steps_; }
  int episode_cap() const override { return opt_.episode_cap; }
  std::unique_ptr<Env> clone_fresh() const override { return std::make_unique<RaceTrackEnv>(opt_); }

  const Track& track() const { return track_; }
  const Options& options() const { return opt_; }
  double arc_position() const { return proj_.s; }

 private:
  Options opt_;
  Track track_;
  Context ctx_;
  BicycleState state_{};
  Track::Projection proj_{};
  Rng rng_;
  bool done_ = true;
  int steps_ = 0;
  double cum_progress_ = 0;
  int laps_ = 0;
  int last_lap_step_ = 0;

  VecD observe() const;
};

const Track& shipped_track(int track_id);

// Friction surface classes with the evaluation sampling ranges.
enum class SurfaceClass { Low, Medium, High };
std::pair<double, double> surface_range(SurfaceClass c);
SurfaceClass parse_surface_class(const std::string& name);  // UnknownSurfaceClass
std::vector<SurfaceClass> parse_surface_classes(const std::string& csv);
std::string surface_set_label(const std::vector<SurfaceClass>& set);

// Training context set on Track 1 over friction values {1.0, 0.5, 0.3}:
// three single-surface contexts plus five mixed region-to-mode assignments.
std::vector<Context> track1_train_contexts();
// The canonical mixed assignment (context id 3 of the training set).
Context track1_reference_context();

// Assigns every region of the given track a friction drawn from a uniformly
// chosen class of surface_set. Throws EmptySurfaceSet.
Context sample_test_context(Rng& rng, const Track& track, const std::vector<SurfaceClass>& surface_set,
                            int id = -1);

}  // namespace sacmoe
