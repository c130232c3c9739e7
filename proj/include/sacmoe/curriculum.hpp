#pragma once

#include <deque>
#include <string>
#include <vector>

#include <json.hpp>

#include "sacmoe/rng.hpp"
#include "sacmoe/tape.hpp"

namespace sacmoe {

enum class CurriculumKind { A, B, C };

CurriculumKind parse_curriculum(const std::string& name);
std::string curriculum_name(CurriculumKind k);

struct EpisodeOutcome {
  double episode_return = 0;
  long length = 0;
};

// Dynamic context-sampling distribution over the training context set.
// Contexts are seen only as indices: the curriculum never reads mode
// parameters or switching maps.
//
//   A (uniform):        static uniform sampling, outcomes ignored.
//   B (step balancing): G accumulates episode steps; contexts with fewer
//                       steps are favored through a softmax.
//   C (performance):    G is a moving average of episode return; the argmin
//                       context gets probability 0.95, the rest split the
//                       remainder uniformly.
class Curriculum {
 public:
  Curriculum(CurriculumKind kind, int n_contexts, int window = 10);

  CurriculumKind kind() const { return kind_; }
  int contexts() const { return n_; }

  void record_outcome(int context_id, const EpisodeOutcome& u);
  int sample_context(Rng& rng) const;

  // current sampling distribution; always a valid probability vector
  const VecD& dist() const { return dist_; }
  // hardness estimates (B: accumulated steps; C: moving-average return;
  // unvisited contexts under C surface as the hardest)
  VecD hardness() const;
  const std::vector<long>& step_counts() const { return step_counts_; }
  long episodes_recorded() const { return episodes_; }

  nlohmann::json snapshot() const;
  static Curriculum from_snapshot(const nlohmann::json& j);

 private:
  CurriculumKind kind_;
  int n_;
  int window_;
  long episodes_ = 0;
  std::vector<long> step_counts_;
  std::vector<long> episode_counts_;
  std::vector<std::deque<double>> windows_;  // recent returns per context (C)
  VecD dist_;

  void refresh_dist();
  int argmin_context() const;  // C selection rule with unvisited-first and lowest-id ties
};

}  // namespace sacmoe
