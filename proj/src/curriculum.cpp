#include "sacmoe/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sacmoe/errors.hpp"

namespace sacmoe {

CurriculumKind parse_curriculum(const std::string& name) {
  if (name == "A" || name == "a" || name == "uniform") return CurriculumKind::A;
  if (name == "B" || name == "b" || name == "steps") return CurriculumKind::B;
  if (name == "C" || name == "c" || name == "performance") return CurriculumKind::C;
  throw ConfigError("unknown curriculum: " + name);
}

std::string curriculum_name(CurriculumKind k) {
  switch (k) {
    case CurriculumKind::A: return "A";
    case CurriculumKind::B: return "B";
    case CurriculumKind::C: return "C";
  }
  return "?";
}

Curriculum::Curriculum(CurriculumKind kind, int n_contexts, int window)
    : kind_(kind), n_(n_contexts), window_(window) {
  if (n_ < 1) throw ConfigError("curriculum: need at least one context");
  if (window_ < 1) throw ConfigError("curriculum: window must be positive");
  step_counts_.assign(n_, 0);
  episode_counts_.assign(n_, 0);
  windows_.assign(n_, {});
  refresh_dist();
}

void Curriculum::record_outcome(int context_id, const EpisodeOutcome& u) {
  if (context_id < 0 || context_id >= n_)
    throw UnknownContext("curriculum: context " + std::to_string(context_id) + " out of range");
  ++episodes_;
  ++episode_counts_[context_id];
  step_counts_[context_id] += u.length;
  auto& w = windows_[context_id];
  w.push_back(u.episode_return);
  while (static_cast<int>(w.size()) > window_) w.pop_front();
  refresh_dist();
}

VecD Curriculum::hardness() const {
  VecD g = VecD::Zero(n_);
  switch (kind_) {
    case CurriculumKind::A:
      break;  // uniform curriculum ignores outcomes
    case CurriculumKind::B:
      for (int i = 0; i < n_; ++i) g(i) = static_cast<double>(step_counts_[i]);
      break;
    case CurriculumKind::C:
      for (int i = 0; i < n_; ++i) {
        if (windows_[i].empty()) {
          g(i) = -std::numeric_limits<double>::infinity();  // unvisited counts as hardest
        } else {
          double s = 0;
          for (double r : windows_[i]) s += r;
          g(i) = s / static_cast<double>(windows_[i].size());
        }
      }
      break;
  }
  return g;
}

int Curriculum::argmin_context() const {
  // lowest moving-average return wins; unvisited contexts rank below any
  // finite average; ties resolve to the lowest context id
  int best = 0;
  VecD g = hardness();
  for (int i = 1; i < n_; ++i)
    if (g(i) < g(best)) best = i;
  return best;
}

void Curriculum::refresh_dist() {
  dist_ = VecD::Constant(n_, 1.0 / n_);
  if (n_ == 1 || episodes_ == 0) return;  // uniform until the first outcome
  switch (kind_) {
    case CurriculumKind::A:
      break;
    case CurriculumKind::B: {
      // softmax over negative accumulated steps; the temperature shrinks
      // relative to the mean count so imbalances of a few episode lengths
      // already matter, and degrades to uniform at the start
      double mean = 0;
      for (long c : step_counts_) mean += static_cast<double>(c);
      mean /= n_;
      const double temp = mean / 5.0 + 1.0;
      VecD z(n_);
      for (int i = 0; i < n_; ++i) z(i) = -static_cast<double>(step_counts_[i]) / temp;
      const double m = z.maxCoeff();
      VecD e = (z.array() - m).exp();
      dist_ = e / e.sum();
      break;
    }
    case CurriculumKind::C: {
      const double p = 0.95;
      const int hard = argmin_context();
      dist_ = VecD::Constant(n_, (1.0 - p) / (n_ - 1));
      dist_(hard) = p;
      break;
    }
  }
  dist_ /= dist_.sum();  // exact normalization
}

int Curriculum::sample_context(Rng& rng) const {
  const double u = uniform01(rng);
  double acc = 0;
  for (int i = 0; i < n_; ++i) {
    acc += dist_(i);
    if (u < acc) return i;
  }
  return n_ - 1;
}

nlohmann::json Curriculum::snapshot() const {
  nlohmann::json j;
  j["kind"] = curriculum_name(kind_);
  j["contexts"] = n_;
  j["window"] = window_;
  j["episodes"] = episodes_;
  j["step_counts"] = step_counts_;
  j["episode_counts"] = episode_counts_;
  auto w = nlohmann::json::array();
  for (const auto& d : windows_) w.push_back(std::vector<double>(d.begin(), d.end()));
  j["windows"] = w;
  return j;
}

Curriculum Curriculum::from_snapshot(const nlohmann::json& j) {
  Curriculum c(parse_curriculum(j.at("kind").get<std::string>()), j.at("contexts").get<int>(),
               j.at("window").get<int>());
  c.episodes_ = j.at("episodes").get<long>();
  c.step_counts_ = j.at("step_counts").get<std::vector<long>>();
  c.episode_counts_ = j.at("episode_counts").get<std::vector<long>>();
  const auto& w = j.at("windows");
  if (static_cast<int>(w.size()) != c.n_ || static_cast<int>(c.step_counts_.size()) != c.n_)
    throw ConfigError("curriculum snapshot: inconsistent sizes");
  for (int i = 0; i < c.n_; ++i) {
    auto v = w[i].get<std::vector<double>>();
    c.windows_[i].assign(v.begin(), v.end());
  }
  c.refresh_dist();
  return c;
}

}  // namespace sacmoe
