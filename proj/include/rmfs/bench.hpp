#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rmfs/agent.hpp"
#include "rmfs/demand.hpp"
#include "rmfs/layout.hpp"
#include "rmfs/rollout.hpp"
#include "rmfs/sim.hpp"

namespace rmfs {

// Percentage decrease of travel time relative to Random.
double compute_gain(double t_policy, double t_random);

struct ExperimentConfig {
  LayoutConfig layout;
  DemandConfig demand;  // evaluation scale; skew and seed are set per run
  SimConfig sim;
  AgentConfig agent;
  std::vector<double> s_values{0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<std::string> policies{"random", "class", "sl", "agent"};
  std::vector<int> horizons{5, 10, 20, 30, 40};
  std::uint64_t eval_seed = 2021;
  double train_orders = 5000.0;  // orders per training episode
  std::filesystem::path out_dir = "out";
  std::filesystem::path weights_dir;  // defaults to out_dir

  void validate() const;
  std::filesystem::path weights_path(double s) const;
};

// INI file with sections [layout] [demand] [sim] [agent] [experiment]; keys
// left out keep their defaults. Lists are comma separated.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig parse_experiment_config(std::istream& in);

struct PolicySpec {
  std::string base;            // random | class | sl | agent
  std::optional<int> horizon;  // set when wrapped in a rollout
  TerminalMode mode = TerminalMode::kAverageCycle;

  std::string name() const;
};

// "sl", "agent+rollout:h=20", ... Throws std::invalid_argument.
PolicySpec parse_policy_spec(const std::string& text);

struct ResultRow {
  std::string policy;
  double s = 0.0;
  std::optional<int> h;
  double t_seconds = 0.0;
  double gain_percent = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

// Shared evaluation instance of one skew value.
struct EvalInstance {
  std::shared_ptr<const Layout> layout;
  std::shared_ptr<const std::vector<Order>> orders;
  DemandConfig demand;
  SimConfig sim;
  std::uint64_t sim_seed = 0;
};
EvalInstance make_eval_instance(const ExperimentConfig& config, double s);

// Average travel time of one policy on the instance. Agent policies need
// `network`.
double evaluate_policy(const EvalInstance& instance, const PolicySpec& spec, const Network* network,
                       std::uint64_t seed);

// Every listed policy on the shared instance of every s, Random included as
// the anchor. Rows come back sorted by (s, policy, h).
std::vector<ResultRow> run_matrix(const ExperimentConfig& config, std::span<const std::string> policies);

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results_csv(std::istream& in);

void emit_training_curve(std::ostream& out, std::span<const CurvePoint> curve);
// Reference lines: gain of each baseline on the shared instance.
void write_baselines_csv(std::ostream& out, std::span<const std::pair<std::string, double>> gains);

// Desk-scale training setup for skew `s`.
TrainingSpec make_training_spec(const ExperimentConfig& config, double s);

void save_network(const Network& net, const std::filesystem::path& path);
Network load_network(const std::filesystem::path& path);

}  // namespace rmfs
