#include "rmfs/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rmfs {

namespace {

double min_feasible(const std::vector<double>& values, const std::vector<std::uint8_t>& feasible) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t z = 0; z < values.size(); ++z) {
    if (feasible[z]) best = std::min(best, values[z]);
  }
  return std::isinf(best) ? 0.0 : best;
}

}  // namespace

void RolloutConfig::validate() const {
  if (horizon < 0) throw std::invalid_argument("rollout: horizon must be >= 0");
}

std::vector<Order> revealed_horizon(const Simulator& sim) { return sim.revealed_orders(); }

RolloutResult evaluate_rollouts(const Simulator& live, StoragePolicy& base, const RolloutConfig& config,
                                const ActionValueModel* model) {
  config.validate();
  const bool bootstrap = config.mode == TerminalMode::kQBootstrap;
  if (bootstrap && model == nullptr) {
    throw std::invalid_argument("rollout: q_bootstrap needs an action-value model");
  }
  const std::size_t zones = live.layout().zone_count();
  const std::size_t horizon = static_cast<std::size_t>(std::max(config.horizon, bootstrap ? 0 : 1));
  // Each decision consumes one order, so this many pending orders per shelf
  // reproduce the full queue for the whole trajectory.
  const std::size_t max_decisions = 4 * (horizon + 1) + 2 * live.robots().size() + 8;

  RolloutResult result;
  result.value.assign(zones, std::numeric_limits<double>::infinity());
  result.visits.assign(zones, 0);

  Simulator probe = live.frozen_copy(0);
  const Decision* pending = probe.next_decision();
  if (pending == nullptr || pending->opportunistic) {
    throw std::logic_error("rollout: no storage decision is pending");
  }
  const Decision root = *pending;
  const auto feasible = probe.feasible_zones();
  const auto feasible_count = std::count(feasible.begin(), feasible.end(), std::uint8_t{1});
  if (feasible_count == 0) throw std::logic_error("rollout: no feasible zone");

  if (feasible_count == 1) {
    result.zone = static_cast<ZoneId>(std::find(feasible.begin(), feasible.end(), 1) - feasible.begin());
    result.value[static_cast<std::size_t>(result.zone)] = 0.0;
    result.visits[static_cast<std::size_t>(result.zone)] = 1;
    return result;
  }

  std::vector<double> root_values;
  if (bootstrap && horizon == 0) root_values = model->action_values(probe, root);

  for (std::size_t z = 0; z < zones; ++z) {
    if (!feasible[z]) continue;
    double value = 0.0;
    if (bootstrap && horizon == 0) {
      value = root_values[z];
    } else {
      Simulator sim = live.frozen_copy(max_decisions);
      sim.next_decision();
      double travel = sim.apply({static_cast<ZoneId>(z), std::nullopt}).travel;
      std::size_t cycles = 1;
      std::size_t stored = 1;
      double terminal = 0.0;
      while (const Decision* d = sim.next_decision()) {
        if (stored >= horizon) {
          if (bootstrap) terminal = min_feasible(model->action_values(sim, *d), sim.feasible_zones());
          break;
        }
        if (sim.decisions_taken() - live.decisions_taken() >= max_decisions - 1) break;
        const Decision decision = *d;
        if (decision.opportunistic) {
          travel += sim.apply_opportunistic().travel;
        } else {
          travel += sim.apply(base.choose(sim, decision)).travel;
          ++stored;
        }
        ++cycles;
      }
      value = bootstrap ? travel + terminal : travel / static_cast<double>(cycles);
    }
    result.value[z] = value;
    result.visits[z] += 1;
    if (result.zone == kNoId || value < result.value[static_cast<std::size_t>(result.zone)]) {
      result.zone = static_cast<ZoneId>(z);
    }
  }
  return result;
}

ZoneId rollout_decide(const Simulator& live, StoragePolicy& base, const RolloutConfig& config,
                      const ActionValueModel* model) {
  return evaluate_rollouts(live, base, config, model).zone;
}

RolloutPolicy::RolloutPolicy(StoragePolicy& base, RolloutConfig config, const ActionValueModel* model)
    : base_(base), config_(config), model_(model) {
  config_.validate();
}

Placement RolloutPolicy::choose(const Simulator& sim, const Decision&) {
  return {rollout_decide(sim, base_, config_, model_), std::nullopt};
}

}  // namespace rmfs
