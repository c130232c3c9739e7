#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sacmoe/errors.hpp"
#include "sacmoe/tape.hpp"

namespace sacmoe {

// A dynamics mode, characterized by its latent parameter vector. Scalar for
// the shipped environments (friction coefficient or perturbation gain).
struct LatentMode {
  VecD mu;

  static LatentMode scalar(double v) {
    LatentMode m;
    m.mu = VecD::Constant(1, v);
    return m;
  }
};

// State-space predicates. Boxes are axis-aligned in position; arcs are
// intervals of track arc-length [s0, s1), wrapping when s0 > s1.
struct BoxRegion {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
};

struct ArcRegion {
  double s0 = 0, s1 = 0;
};

struct Region {
  enum class Kind { Box, Arc };
  Kind kind = Kind::Box;
  BoxRegion box{};
  ArcRegion arc{};
  int mode = 0;
};

// Ordered region list; ties at shared boundaries resolve to the lowest
// region index (first match wins).
struct SwitchingMap {
  std::vector<Region> regions;
};

// The coordinates a predicate can look at: position, and arc-length along
// the track centerline for arc regions.
struct ModeQuery {
  double x = 0, y = 0;
  double s = 0;
};

bool region_matches(const Region& r, const ModeQuery& q);

// Unique active mode at the queried state. Throws NoRegionCovers if the map
// fails to cover it (a construction bug, treated as fatal).
int active_mode(const SwitchingMap& map, const ModeQuery& q);

// Number of predicates that fire, ignoring the tie-break. Coverage tests use
// this to check every state is claimed at least once.
int raw_match_count(const SwitchingMap& map, const ModeQuery& q);

// One environment: the modes present plus where they occur. id indexes the
// training/test context set and is what curricula see (never the parameters).
struct Context {
  std::vector<LatentMode> modes;
  SwitchingMap switching;
  int id = -1;

  void validate() const;
  const VecD& mu_of(int mode_index) const { return modes.at(mode_index).mu; }
};

// Human-readable structured config for context sets.
nlohmann::json context_to_json(const Context& c);
Context context_from_json(const nlohmann::json& j);
void save_contexts(const std::string& path, const std::vector<Context>& cs);
std::vector<Context> load_contexts(const std::string& path);

}  // namespace sacmoe
