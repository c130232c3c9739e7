#include "sacmoe/baselines.hpp"

#include "sacmoe/errors.hpp"

namespace sacmoe {

int select_component(const PolicyBank& bank, const VecD& active_mu) {
  if (bank.entries.empty()) throw EmptyBank("select_component: empty policy bank");
  int best = 0;
  double best_d = (bank.entries[0].mu - active_mu).norm();
  for (int i = 1; i < static_cast<int>(bank.entries.size()); ++i) {
    const double d = (bank.entries[i].mu - active_mu).norm();
    if (d < best_d) {  // strict: ties keep the lowest index
      best = i;
      best_d = d;
    }
  }
  return best;
}

VecD switched_action(const PolicyBank& bank, const VecD& obs, const VecD& oracle_mode_mu, Rng& rng,
                     bool deterministic, int* selected_out) {
  const int idx = select_component(bank, oracle_mode_mu);
  if (selected_out) *selected_out = idx;
  return actor_act(*bank.entries[idx].policy, obs, deterministic, /*training=*/false, rng);
}

}  // namespace sacmoe
