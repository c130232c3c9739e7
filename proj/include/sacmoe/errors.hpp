#pragma once

#include <stdexcept>
#include <string>

namespace sacmoe {

// Error taxonomy. Each failure mode gets its own type so tests and callers
// can react to the exact condition.

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoTapeActive : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoRegionCovers : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepAfterDone : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySurfaceSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownSurfaceClass : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownContext : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyBank : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingLogs : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckpointVersionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidEpisodeCount : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sacmoe
