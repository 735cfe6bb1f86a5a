#pragma once

#include <cstddef>
#include <vector>

#include "rmfs/sim.hpp"

namespace rmfs {

enum class TerminalMode {
  kQBootstrap,    // sum of cycle times plus the best Q-value at the last state
  kAverageCycle,  // mean cycle time over the simulated window
};

struct RolloutConfig {
  // Storage tasks per trajectory, the first action's own cycle included.
  int horizon = 20;
  TerminalMode mode = TerminalMode::kAverageCycle;

  void validate() const;
};

// Per-zone value estimates (costs) at a decision point.
class ActionValueModel {
 public:
  virtual ~ActionValueModel() = default;
  virtual std::vector<double> action_values(const Simulator& sim, const Decision& decision) const = 0;
};

// Deadline-ordered copy of the orders the rollout may use.
std::vector<Order> revealed_horizon(const Simulator& sim);

struct RolloutResult {
  ZoneId zone = kNoId;
  std::vector<double> value;  // per zone; meaningless where infeasible
  std::vector<int> visits;    // 1 per feasible zone, 0 otherwise
};

// Evaluates every feasible first action of the pending storage decision in
// `live` by simulating the base policy over the orders revealed so far. `live`
// is never modified; `base` must be deterministic. `model` is required for
// kQBootstrap.
RolloutResult evaluate_rollouts(const Simulator& live, StoragePolicy& base, const RolloutConfig& config,
                                const ActionValueModel* model);

ZoneId rollout_decide(const Simulator& live, StoragePolicy& base, const RolloutConfig& config,
                      const ActionValueModel* model);

class RolloutPolicy : public StoragePolicy {
 public:
  RolloutPolicy(StoragePolicy& base, RolloutConfig config, const ActionValueModel* model);
  Placement choose(const Simulator& sim, const Decision& decision) override;

 private:
  StoragePolicy& base_;
  RolloutConfig config_;
  const ActionValueModel* model_;
};

}  // namespace rmfs
