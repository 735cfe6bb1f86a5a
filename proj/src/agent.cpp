#include "rmfs/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace rmfs {

namespace {

std::vector<std::size_t> architecture(std::size_t inputs, const std::vector<std::size_t>& hidden,
                                      std::size_t actions) {
  std::vector<std::size_t> sizes{inputs};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(actions);
  return sizes;
}

double min_value(std::span<const double> values, std::span<const std::uint8_t> feasible) {
  const ZoneId a = masked_argmin(values, feasible);
  return a == kNoId ? 0.0 : values[static_cast<std::size_t>(a)];
}

}  // namespace

void AgentConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("agent: epsilon must be in [0, 1]");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("agent: learning rate must be positive");
  if (!(avg_reward_step >= 0.0)) throw std::invalid_argument("agent: average reward step must be >= 0");
  if (replay_capacity == 0 || train_period == 0 || sample_size == 0 || minibatch == 0 ||
      target_sync == 0 || eval_every == 0) {
    throw std::invalid_argument("agent: counts must be positive");
  }
  if (sample_size > replay_capacity) throw std::invalid_argument("agent: sample size exceeds replay capacity");
  for (std::size_t h : hidden) {
    if (h == 0) throw std::invalid_argument("agent: hidden layer sizes must be positive");
  }
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay: capacity must be positive");
  items_.reserve(capacity);
}

void ReplayMemory::push(Experience e) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(e));
    return;
  }
  items_[head_] = std::move(e);
  head_ = (head_ + 1) % capacity_;
}

const Experience& ReplayMemory::at(std::size_t i) const {
  if (i >= items_.size()) throw std::out_of_range("replay: index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<std::size_t> ReplayMemory::sample(std::size_t count, std::mt19937_64& rng) const {
  if (items_.empty()) return {};
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::size_t> out(count);
  for (auto& i : out) i = pick(rng);
  return out;
}

ZoneId masked_argmin(std::span<const double> values, std::span<const std::uint8_t> feasible) {
  ZoneId best = kNoId;
  for (std::size_t a = 0; a < values.size() && a < feasible.size(); ++a) {
    if (!feasible[a]) continue;
    if (best == kNoId || values[a] < values[static_cast<std::size_t>(best)]) best = static_cast<ZoneId>(a);
  }
  return best;
}

DqnAgent::DqnAgent(AgentConfig config, std::size_t inputs, std::size_t actions)
    : config_(std::move(config)),
      actions_(actions),
      memory_(config_.replay_capacity),
      rng_(config_.seed) {
  config_.validate();
  online_ = Network(architecture(inputs, config_.hidden, actions), derive_seed(config_.seed, 0));
  target_ = online_;
  adam_ = Adam(online_.parameter_count(), AdamConfig{config_.learning_rate});
}

ActionChoice DqnAgent::select_action(std::span<const double> features, std::span<const std::uint8_t> feasible,
                                     bool explore) {
  std::vector<ZoneId> options;
  for (std::size_t a = 0; a < feasible.size(); ++a) {
    if (feasible[a]) options.push_back(static_cast<ZoneId>(a));
  }
  if (options.empty()) throw std::logic_error("agent: no feasible action");
  if (options.size() == 1) return {options.front(), true};
  if (explore && config_.epsilon > 0.0) {
    std::bernoulli_distribution coin(config_.epsilon);
    if (coin(rng_)) {
      std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
      return {options[pick(rng_)], false};
    }
  }
  return {masked_argmin(q_values(features), feasible), true};
}

double DqnAgent::compute_target(const Experience& e) const {
  // Online network picks, target network evaluates.
  const auto online_next = online_.forward(e.next_state);
  const ZoneId best = masked_argmin(online_next, e.next_feasible);
  const double next = best == kNoId ? 0.0 : target_.forward(e.next_state)[static_cast<std::size_t>(best)];
  return e.cost - avg_reward_ + next;
}

void DqnAgent::update_avg_reward(const Experience& e, double target) {
  if (!e.greedy) return;
  const auto q = online_.forward(e.state);
  const double current = e.action == kAllActions ? min_value(q, std::vector<std::uint8_t>(q.size(), 1))
                                                 : q.at(static_cast<std::size_t>(e.action));
  avg_reward_ += config_.avg_reward_step * (target - current);
  check_divergence("average reward update");
}

void DqnAgent::observe(Experience e) {
  if (e.action != kAllActions && (e.action < 0 || static_cast<std::size_t>(e.action) >= actions_)) {
    throw std::invalid_argument("agent: action out of range");
  }
  update_avg_reward(e, compute_target(e));
  memory_.push(std::move(e));
  ++steps_;
  if (steps_ % config_.train_period == 0) train();
  if (steps_ % config_.target_sync == 0) target_.copy_weights_from(online_);
}

void DqnAgent::observe_opportunistic(std::vector<double> state, double cost, std::vector<double> next_state,
                                     std::vector<std::uint8_t> next_feasible) {
  observe({std::move(state), kAllActions, cost, std::move(next_state), std::move(next_feasible), true});
}

void DqnAgent::train() {
  const auto picks = memory_.sample(config_.sample_size, rng_);
  for (std::size_t begin = 0; begin < picks.size(); begin += config_.minibatch) {
    const std::size_t end = std::min(picks.size(), begin + config_.minibatch);
    std::vector<std::vector<double>> inputs;
    std::vector<TargetRow> targets;
    for (std::size_t k = begin; k < end; ++k) {
      const Experience& e = memory_.at(picks[k]);
      TargetRow row;
      row.mask.assign(actions_, e.action == kAllActions ? 1 : 0);
      row.values.assign(actions_, 0.0);
      const double y = compute_target(e);
      if (e.action == kAllActions) {
        std::fill(row.values.begin(), row.values.end(), y);
      } else {
        row.mask[static_cast<std::size_t>(e.action)] = 1;
        row.values[static_cast<std::size_t>(e.action)] = y;
      }
      inputs.push_back(e.state);
      targets.push_back(std::move(row));
    }
    last_loss_ = train_batch(online_, adam_, inputs, targets);
  }
  ++rounds_;
  check_divergence("training");
}

void DqnAgent::check_divergence(const char* where) const {
  if (std::isfinite(avg_reward_) && std::abs(avg_reward_) <= 1e6 && std::isfinite(last_loss_)) return;
  std::ostringstream msg;
  msg << "agent: training diverged during " << where << " at step " << steps_ << " (average cost "
      << avg_reward_ << ", last loss " << last_loss_ << ")";
  throw std::runtime_error(msg.str());
}

std::size_t feature_count(std::size_t zones) { return 3 * zones + 3; }

std::vector<double> extract_features(const Simulator& sim, const Decision& decision,
                                     const TurnoverTable& turnover) {
  const Layout& layout = sim.layout();
  const std::size_t zones = layout.zone_count();
  std::vector<double> f(feature_count(zones), 0.0);
  const auto shelf = static_cast<std::size_t>(decision.shelf);
  f[0] = turnover.rate.at(shelf);
  f[1] = turnover.rank.at(shelf);
  if (!decision.opportunistic && decision.retrieval_zone != kNoId) {
    f[2 + static_cast<std::size_t>(decision.retrieval_zone)] = 1.0;
  }
  const auto free = sim.zone_free_counts();
  const auto inbound = sim.inbound_robots();
  const double fleet = static_cast<double>(std::max<std::size_t>(1, sim.robots().size()));
  for (std::size_t z = 0; z < zones; ++z) {
    const double capacity = static_cast<double>(layout.zone(static_cast<ZoneId>(z)).capacity());
    f[2 + zones + z] = capacity > 0.0 ? (capacity - free[z]) / capacity : 1.0;
    f[2 + 2 * zones + z] = inbound[z] / fleet;
  }
  f[2 + 3 * zones] = decision.opportunistic ? 1.0 : 0.0;
  return f;
}

LearningAgentPolicy::LearningAgentPolicy(DqnAgent& agent, TurnoverTable turnover)
    : agent_(agent), turnover_(std::move(turnover)) {}

void LearningAgentPolicy::close_pending(const std::vector<double>& next, const std::vector<std::uint8_t>& feasible) {
  if (!pending_) return;
  pending_->next_state = next;
  pending_->next_feasible = feasible;
  agent_.observe(std::move(*pending_));
  pending_.reset();
}

Placement LearningAgentPolicy::choose(const Simulator& sim, const Decision& decision) {
  auto f = extract_features(sim, decision, turnover_);
  const auto feasible = sim.feasible_zones();
  close_pending(f, feasible);
  const ActionChoice choice = agent_.select_action(f, feasible, true);
  pending_ = Experience{std::move(f), choice.zone, 0.0, {}, {}, choice.greedy};
  return {choice.zone, std::nullopt};
}

void LearningAgentPolicy::on_opportunistic(const Simulator& sim, const Decision& decision) {
  auto f = extract_features(sim, decision, turnover_);
  // Every action is equivalent in an opportunistic state.
  const std::vector<std::uint8_t> all(sim.layout().zone_count(), 1);
  close_pending(f, all);
  pending_ = Experience{std::move(f), kAllActions, 0.0, {}, {}, true};
}

void LearningAgentPolicy::on_cycle(const CycleRecord& record) {
  if (pending_) pending_->cost = record.travel;
}

GreedyAgentPolicy::GreedyAgentPolicy(Network network, TurnoverTable turnover)
    : network_(std::move(network)), turnover_(std::move(turnover)) {}

std::vector<double> GreedyAgentPolicy::action_values(const Simulator& sim, const Decision& decision) const {
  return network_.forward(extract_features(sim, decision, turnover_));
}

Placement GreedyAgentPolicy::choose(const Simulator& sim, const Decision& decision) {
  const ZoneId zone = masked_argmin(action_values(sim, decision), sim.feasible_zones());
  if (zone == kNoId) throw std::logic_error("agent: no feasible zone");
  return {zone, std::nullopt};
}

TrainingResult train_agent(const TrainingSpec& spec) {
  spec.agent.validate();
  auto layout = std::make_shared<const Layout>(spec.layout);
  const std::size_t zones = layout->zone_count();
  const auto shelves = static_cast<std::size_t>(spec.demand.items);
  const TurnoverTable turnover = TurnoverTable::from_demand(spec.demand);

  SimConfig sim_config = spec.sim;
  sim_config.horizon = spec.demand.horizon;
  sim_config.keep_trace = false;

  DemandConfig held_out = spec.demand;
  held_out.seed = spec.eval_seed;
  auto eval_orders = std::make_shared<const std::vector<Order>>(generate_orders(held_out));
  const std::uint64_t eval_sim_seed = derive_seed(spec.eval_seed, 1);

  TrainingResult result;
  RandomPolicy random(derive_seed(spec.eval_seed, 2));
  result.random_baseline =
      run_episode(layout, eval_orders, shelves, random, sim_config, eval_sim_seed).avg_travel_time;
  if (!(result.random_baseline > 0.0)) {
    throw std::invalid_argument("train: evaluation episode ends before any cycle is counted");
  }

  DqnAgent agent(spec.agent, feature_count(zones), zones);
  LearningAgentPolicy learner(agent, turnover);
  for (std::size_t episode = 1; episode <= spec.agent.episodes; ++episode) {
    DemandConfig demand = spec.demand;
    demand.seed = derive_seed(spec.agent.seed, 2 * episode);
    auto orders = std::make_shared<const std::vector<Order>>(generate_orders(demand));
    run_episode(layout, orders, shelves, learner, sim_config, derive_seed(spec.agent.seed, 2 * episode + 1));

    if (episode % spec.agent.eval_every == 0) {
      GreedyAgentPolicy greedy(agent.online(), turnover);
      const double t = run_episode(layout, eval_orders, shelves, greedy, sim_config, eval_sim_seed).avg_travel_time;
      CurvePoint point{episode, 100.0 * (result.random_baseline - t) / result.random_baseline};
      result.curve.push_back(point);
      if (spec.progress) spec.progress(point);
    }
  }
  result.network = agent.online();
  result.avg_reward = agent.avg_reward();
  result.steps = agent.steps();
  return result;
}

}  // namespace rmfs
