#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sacmoe/actor.hpp"

namespace sacmoe {

// Bank of mode-specific component policies, each trained on a single-mode
// context. Dispatch picks the component whose training mode value is nearest
// to the oracle-reported active mode.
struct PolicyBankEntry {
  VecD mu;  // mode value the component was trained on
  std::shared_ptr<ActorNet<float>> policy;
};

struct PolicyBank {
  std::vector<PolicyBankEntry> entries;
};

// argmin_m |mu_m - active_mu| (Euclidean); ties -> lowest index.
int select_component(const PolicyBank& bank, const VecD& active_mu);

// Action from the selected component only; exactly one component acts per
// step. The component is queried in evaluation mode (no router noise).
VecD switched_action(const PolicyBank& bank, const VecD& obs, const VecD& oracle_mode_mu, Rng& rng,
                     bool deterministic = true, int* selected_out = nullptr);

}  // namespace sacmoe
