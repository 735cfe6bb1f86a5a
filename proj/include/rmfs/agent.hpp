#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "rmfs/demand.hpp"
#include "rmfs/layout.hpp"
#include "rmfs/nn.hpp"
#include "rmfs/policies.hpp"
#include "rmfs/rollout.hpp"
#include "rmfs/sim.hpp"

namespace rmfs {

struct AgentConfig {
  double epsilon = 0.1;
  double learning_rate = 0.00025;
  double avg_reward_step = 0.0001;
  std::size_t replay_capacity = 1000;
  std::size_t train_period = 100;
  std::size_t sample_size = 256;
  std::size_t minibatch = 64;
  std::size_t target_sync = 500;
  std::size_t episodes = 10000;
  std::size_t eval_every = 100;
  std::vector<std::size_t> hidden{32, 32, 32};
  std::uint64_t seed = 1;

  void validate() const;
};

// Action of an opportunistic step: the target applies to every output.
inline constexpr int kAllActions = -1;

struct Experience {
  std::vector<double> state;
  int action = 0;
  double cost = 0.0;  // travel seconds
  std::vector<double> next_state;
  std::vector<std::uint8_t> next_feasible;
  bool greedy = true;
};

class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // i = 0 is the oldest retained experience.
  const Experience& at(std::size_t i) const;
  // Slot indices (as for at()), uniform with replacement.
  std::vector<std::size_t> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // oldest slot once full
  std::vector<Experience> items_;
};

struct ActionChoice {
  ZoneId zone = kNoId;
  bool greedy = true;
};

// Masked argmin over `values`, ties to the lowest index; kNoId if nothing is feasible.
ZoneId masked_argmin(std::span<const double> values, std::span<const std::uint8_t> feasible);

// Double deep Q-learning on differential returns. Values are costs, so greedy
// means argmin.
class DqnAgent {
 public:
  DqnAgent(AgentConfig config, std::size_t inputs, std::size_t actions);

  ActionChoice select_action(std::span<const double> features, std::span<const std::uint8_t> feasible,
                             bool explore);
  std::vector<double> q_values(std::span<const double> features) const { return online_.forward(features); }

  double compute_target(const Experience& e) const;
  // Computes the target, updates the average cost if the action was greedy,
  // stores the experience and trains or syncs on schedule.
  void observe(Experience e);
  void observe_opportunistic(std::vector<double> state, double cost, std::vector<double> next_state,
                             std::vector<std::uint8_t> next_feasible);
  void update_avg_reward(const Experience& e, double target);

  double avg_reward() const { return avg_reward_; }
  void set_avg_reward(double r) { avg_reward_ = r; }
  std::size_t steps() const { return steps_; }
  std::size_t training_rounds() const { return rounds_; }
  double last_loss() const { return last_loss_; }
  const Network& online() const { return online_; }
  const Network& target() const { return target_; }
  Network& online() { return online_; }
  const ReplayMemory& memory() const { return memory_; }
  const AgentConfig& config() const { return config_; }
  std::mt19937_64& rng() { return rng_; }

 private:
  void train();
  void check_divergence(const char* where) const;

  AgentConfig config_;
  std::size_t actions_;
  Network online_;
  Network target_;
  Adam adam_;
  ReplayMemory memory_;
  std::mt19937_64 rng_;
  double avg_reward_ = 0.0;
  std::size_t steps_ = 0;
  std::size_t rounds_ = 0;
  double last_loss_ = 0.0;
};

// 3n+3 features: turnover rate and rank of the shelf, one-hot zone of the next
// retrieval, zone occupation, inbound robots per zone over fleet size, and the
// opportunistic flag.
std::vector<double> extract_features(const Simulator& sim, const Decision& decision,
                                     const TurnoverTable& turnover);
std::size_t feature_count(std::size_t zones);

// Trains `agent` on every decision it routes. The pending transition survives
// episode boundaries, so consecutive episodes form one continuing task.
class LearningAgentPolicy : public StoragePolicy {
 public:
  LearningAgentPolicy(DqnAgent& agent, TurnoverTable turnover);
  Placement choose(const Simulator& sim, const Decision& decision) override;
  void on_opportunistic(const Simulator& sim, const Decision& decision) override;
  void on_cycle(const CycleRecord& record) override;
  void set_turnover(TurnoverTable turnover) { turnover_ = std::move(turnover); }

 private:
  void close_pending(const std::vector<double>& next, const std::vector<std::uint8_t>& feasible);

  DqnAgent& agent_;
  TurnoverTable turnover_;
  std::optional<Experience> pending_;
};

// Inference only: masked argmin of a fixed network.
class GreedyAgentPolicy : public StoragePolicy, public ActionValueModel {
 public:
  GreedyAgentPolicy(Network network, TurnoverTable turnover);
  Placement choose(const Simulator& sim, const Decision& decision) override;
  std::vector<double> action_values(const Simulator& sim, const Decision& decision) const override;
  const Network& network() const { return network_; }

 private:
  Network network_;
  TurnoverTable turnover_;
};

struct CurvePoint {
  std::size_t episode = 0;
  double gain_percent = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct TrainingSpec {
  LayoutConfig layout;
  DemandConfig demand;  // the seed is replaced per episode
  SimConfig sim;
  AgentConfig agent;
  std::uint64_t eval_seed = 2021;
  std::function<void(const CurvePoint&)> progress;
};

struct TrainingResult {
  Network network;
  std::vector<CurvePoint> curve;
  double random_baseline = 0.0;  // avg travel of Random on the held-out instance
  double avg_reward = 0.0;
  std::size_t steps = 0;
};

// Each episode draws a fresh demand instance. Every eval_every episodes the
// greedy policy is scored against Random on a fixed held-out instance.
TrainingResult train_agent(const TrainingSpec& spec);

}  // namespace rmfs
