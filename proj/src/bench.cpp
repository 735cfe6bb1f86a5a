#include "rmfs/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rmfs/policies.hpp"

namespace rmfs {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) {
    std::istringstream in(item);
    T value{};
    if (!(in >> value) || !(in >> std::ws).eof()) throw std::invalid_argument("config: bad list item '" + item + "'");
    out.push_back(value);
  }
  return out;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::uint64_t policy_seed(std::uint64_t eval_seed, const std::string& base) {
  if (base == "random") return derive_seed(eval_seed, 2);
  if (base == "class") return derive_seed(eval_seed, 3);
  return derive_seed(eval_seed, 4);
}

}  // namespace

double compute_gain(double t_policy, double t_random) {
  if (!(t_random > 0.0)) throw std::invalid_argument("gain: the Random baseline must be positive");
  return 100.0 * (t_random - t_policy) / t_random;
}

void ExperimentConfig::validate() const {
  layout.validate();
  demand.validate();
  sim.validate();
  agent.validate();
  if (s_values.empty() || policies.empty() || horizons.empty()) {
    throw std::invalid_argument("experiment: s values, policies and horizons must be nonempty");
  }
  for (double s : s_values) {
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("experiment: s must be in (0, 1]");
  }
  for (int h : horizons) {
    if (h < 0) throw std::invalid_argument("experiment: horizons must be >= 0");
  }
  for (const auto& p : policies) parse_policy_spec(p);
  if (!(train_orders >= 1.0)) throw std::invalid_argument("experiment: train_orders must be >= 1");
}

std::filesystem::path ExperimentConfig::weights_path(double s) const {
  char name[48];
  std::snprintf(name, sizeof name, "agent_s%.2f.net", s);
  return (weights_dir.empty() ? out_dir : weights_dir) / name;
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }

  ExperimentConfig c;
  auto get = [&](const char* key, auto& field) {
    try {
      if (tree.get_child_optional(key)) field = tree.get<std::decay_t<decltype(field)>>(key);
    } catch (const pt::ptree_bad_data&) {
      throw std::invalid_argument(std::string("config: bad value for ") + key);
    }
  };
  get("layout.blocks_wide", c.layout.blocks_wide);
  get("layout.blocks_deep", c.layout.blocks_deep);
  get("layout.block_cols", c.layout.block_cols);
  get("layout.block_rows", c.layout.block_rows);
  get("layout.cell_pitch", c.layout.cell_pitch);
  get("layout.speed", c.layout.speed);
  get("layout.pick_time", c.layout.pick_time);
  get("layout.handle_time", c.layout.handle_time);

  get("demand.items", c.demand.items);
  get("demand.orders", c.demand.orders);
  get("demand.periods", c.demand.periods);
  get("demand.tightness", c.demand.tightness);
  get("demand.horizon", c.demand.horizon);

  get("sim.robots", c.sim.robots);
  get("sim.warmup_cycles", c.sim.warmup_cycles);

  get("agent.epsilon", c.agent.epsilon);
  get("agent.learning_rate", c.agent.learning_rate);
  get("agent.avg_reward_step", c.agent.avg_reward_step);
  get("agent.replay_capacity", c.agent.replay_capacity);
  get("agent.train_period", c.agent.train_period);
  get("agent.sample_size", c.agent.sample_size);
  get("agent.minibatch", c.agent.minibatch);
  get("agent.target_sync", c.agent.target_sync);
  get("agent.episodes", c.agent.episodes);
  get("agent.eval_every", c.agent.eval_every);
  get("agent.seed", c.agent.seed);
  if (auto v = tree.get_optional<std::string>("agent.hidden")) c.agent.hidden = parse_list<std::size_t>(*v);

  if (auto v = tree.get_optional<std::string>("experiment.s_values")) c.s_values = parse_list<double>(*v);
  if (auto v = tree.get_optional<std::string>("experiment.policies")) c.policies = split_list(*v);
  if (auto v = tree.get_optional<std::string>("experiment.horizons")) c.horizons = parse_list<int>(*v);
  get("experiment.eval_seed", c.eval_seed);
  get("experiment.train_orders", c.train_orders);
  if (auto v = tree.get_optional<std::string>("experiment.out_dir")) c.out_dir = trim(*v);
  if (auto v = tree.get_optional<std::string>("experiment.weights_dir")) c.weights_dir = trim(*v);

  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  return parse_experiment_config(in);
}

std::string PolicySpec::name() const {
  return horizon ? base + "+rollout:h=" + std::to_string(*horizon) : base;
}

PolicySpec parse_policy_spec(const std::string& text) {
  PolicySpec spec;
  const auto plus = text.find('+');
  spec.base = trim(text.substr(0, plus));
  if (spec.base != "random" && spec.base != "class" && spec.base != "sl" && spec.base != "agent") {
    throw std::invalid_argument("policy: unknown base policy '" + spec.base + "'");
  }
  if (plus == std::string::npos) return spec;
  const std::string suffix = trim(text.substr(plus + 1));
  const std::string prefix = "rollout:h=";
  if (suffix.rfind(prefix, 0) != 0) throw std::invalid_argument("policy: bad suffix '" + suffix + "'");
  std::size_t used = 0;
  int h = 0;
  try {
    h = std::stoi(suffix.substr(prefix.size()), &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("policy: bad horizon in '" + text + "'");
  }
  if (used != suffix.size() - prefix.size() || h < 0) {
    throw std::invalid_argument("policy: bad horizon in '" + text + "'");
  }
  if (spec.base != "sl" && spec.base != "agent") {
    throw std::invalid_argument("policy: rollouts need a deterministic base (sl or agent)");
  }
  spec.horizon = h;
  spec.mode = spec.base == "agent" ? TerminalMode::kQBootstrap : TerminalMode::kAverageCycle;
  return spec;
}

EvalInstance make_eval_instance(const ExperimentConfig& config, double s) {
  EvalInstance inst;
  inst.layout = std::make_shared<const Layout>(config.layout);
  inst.demand = config.demand;
  inst.demand.skew = s;
  inst.demand.seed = config.eval_seed;
  inst.orders = std::make_shared<const std::vector<Order>>(generate_orders(inst.demand));
  inst.sim = config.sim;
  inst.sim.horizon = inst.demand.horizon;
  inst.sim.keep_trace = false;
  inst.sim_seed = derive_seed(config.eval_seed, 1);
  return inst;
}

double evaluate_policy(const EvalInstance& inst, const PolicySpec& spec, const Network* network,
                       std::uint64_t seed) {
  const auto shelves = static_cast<std::size_t>(inst.demand.items);
  const TurnoverTable turnover = TurnoverTable::from_demand(inst.demand);
  auto run = [&](StoragePolicy& p) {
    return run_episode(inst.layout, inst.orders, shelves, p, inst.sim, inst.sim_seed).avg_travel_time;
  };
  if (spec.base == "random") {
    RandomPolicy p(seed);
    return run(p);
  }
  if (spec.base == "class") {
    ClassBasedPolicy p(*inst.layout, turnover, seed);
    return run(p);
  }
  if (spec.base == "sl") {
    ShortestLegPolicy base;
    if (!spec.horizon) return run(base);
    RolloutPolicy p(base, {*spec.horizon, spec.mode}, nullptr);
    return run(p);
  }
  if (network == nullptr) throw std::invalid_argument("evaluate: agent policy without a network");
  GreedyAgentPolicy base(*network, turnover);
  if (!spec.horizon) return run(base);
  RolloutPolicy p(base, {*spec.horizon, spec.mode}, &base);
  return run(p);
}

std::vector<ResultRow> run_matrix(const ExperimentConfig& config, std::span<const std::string> policies) {
  config.validate();
  std::vector<PolicySpec> specs{parse_policy_spec("random")};
  for (const auto& p : policies) {
    PolicySpec spec = parse_policy_spec(p);
    const bool seen = std::any_of(specs.begin(), specs.end(), [&](const PolicySpec& q) { return q.name() == spec.name(); });
    if (!seen) specs.push_back(spec);
  }
  const bool needs_agent = std::any_of(specs.begin(), specs.end(), [](const PolicySpec& q) { return q.base == "agent"; });

  struct Cell {
    double s;
    PolicySpec spec;
    std::future<double> t;
  };
  std::vector<EvalInstance> instances;
  std::vector<Network> networks;
  for (double s : config.s_values) {
    instances.push_back(make_eval_instance(config, s));
    if (needs_agent) {
      const auto path = config.weights_path(s);
      if (!std::filesystem::exists(path)) {
        throw std::runtime_error("eval: missing agent weights " + path.string() + " (run `train` first)");
      }
      networks.push_back(load_network(path));
    }
  }

  std::vector<Cell> cells;
  for (std::size_t i = 0; i < config.s_values.size(); ++i) {
    for (const auto& spec : specs) {
      const Network* net = needs_agent ? &networks[i] : nullptr;
      const EvalInstance* inst = &instances[i];
      const std::uint64_t seed = policy_seed(config.eval_seed, spec.base);
      cells.push_back({config.s_values[i], spec,
                       std::async(std::launch::async, [inst, spec, net, seed] {
                         return evaluate_policy(*inst, spec, net, seed);
                       })});
    }
  }

  std::map<double, double> random_t;
  std::vector<std::pair<Cell*, double>> done;
  for (auto& cell : cells) {
    const double t = cell.t.get();
    if (cell.spec.name() == "random") random_t[cell.s] = t;
    done.emplace_back(&cell, t);
  }
  std::vector<ResultRow> rows;
  for (const auto& [cell, t] : done) {
    rows.push_back({cell->spec.base + (cell->spec.horizon ? "+rollout" : ""), cell->s, cell->spec.horizon, t,
                    compute_gain(t, random_t.at(cell->s)), config.eval_seed});
  }
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.s, a.policy, a.h) < std::tie(b.s, b.policy, b.h);
  });
  return rows;
}

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << "policy,s,h,t_seconds,gain_percent,seed\n";
  for (const auto& r : rows) {
    out << r.policy << ',' << fmt(r.s) << ',' << (r.h ? std::to_string(*r.h) : "") << ',' << fmt(r.t_seconds) << ','
        << fmt(r.gain_percent) << ',' << r.seed << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) f.push_back(field);
    if (f.size() != 6) throw std::runtime_error("results csv: malformed row '" + line + "'");
    try {
      ResultRow r;
      r.policy = f[0];
      r.s = std::stod(f[1]);
      if (!f[2].empty()) r.h = std::stoi(f[2]);
      r.t_seconds = std::stod(f[3]);
      r.gain_percent = std::stod(f[4]);
      r.seed = std::stoull(f[5]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error("results csv: malformed row '" + line + "'");
    }
  }
  return rows;
}

void emit_training_curve(std::ostream& out, std::span<const CurvePoint> curve) {
  out << "episode,gain_percent\n";
  for (const auto& p : curve) out << p.episode << ',' << fmt(p.gain_percent) << '\n';
}

void write_baselines_csv(std::ostream& out, std::span<const std::pair<std::string, double>> gains) {
  out << "policy,gain_percent\n";
  for (const auto& [name, g] : gains) out << name << ',' << fmt(g) << '\n';
}

TrainingSpec make_training_spec(const ExperimentConfig& config, double s) {
  TrainingSpec spec;
  spec.layout = config.layout;
  spec.demand = config.demand;
  spec.demand.skew = s;
  if (config.train_orders != config.demand.orders) spec.demand = scale_to_orders(spec.demand, config.train_orders);
  spec.sim = config.sim;
  spec.agent = config.agent;
  spec.eval_seed = derive_seed(config.eval_seed, 5);
  return spec;
}

void save_network(const Network& net, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  net.save(out);
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return Network::load(in);
}

}  // namespace rmfs
