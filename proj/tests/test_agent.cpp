#include <doctest.h>

#include <algorithm>
#include <functional>
#include <memory>
#include <numeric>

#include "rmfs/agent.hpp"

using namespace rmfs;

namespace {

// Constant outputs: all weights zero, output biases set to `values`.
void set_outputs(Network& net, const std::vector<double>& values) {
  std::fill(net.parameters().begin(), net.parameters().end(), 0.0);
  const std::size_t last = net.layer_count() - 1;
  std::copy(values.begin(), values.end(), net.parameters().begin() + static_cast<std::ptrdiff_t>(net.bias_offset(last)));
}

std::size_t hash_params(const Network& net) {
  std::size_t h = 0;
  for (double p : net.parameters()) h = h * 1315423911u + std::hash<double>{}(p);
  return h;
}

const std::vector<std::uint8_t> kAll(6, 1);

Experience random_experience(std::mt19937_64& rng, int action) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Experience e;
  e.state.resize(21);
  e.next_state.resize(21);
  for (double& x : e.state) x = u(rng);
  for (double& x : e.next_state) x = u(rng);
  e.action = action;
  e.cost = 10.0 * u(rng);
  e.next_feasible = kAll;
  e.greedy = false;
  return e;
}

}  // namespace

TEST_SUITE("agent") {
  TEST_CASE("greedy selection is a masked argmin with ties to the lowest zone") {
    DqnAgent agent(AgentConfig{}, 21, 6);
    const std::vector<double> f(21, 0.0);
    set_outputs(agent.online(), {5, 1, 9, 9, 9, 9});
    CHECK(agent.select_action(f, kAll, false).zone == 1);
    set_outputs(agent.online(), {1, 2, 3, 4, 5, 6});
    CHECK(agent.select_action(f, std::vector<std::uint8_t>{0, 1, 1, 1, 1, 1}, false).zone == 1);
    set_outputs(agent.online(), {4, 2, 2, 4, 4, 4});
    CHECK(agent.select_action(f, kAll, false).zone == 1);
    const auto only = agent.select_action(f, std::vector<std::uint8_t>{0, 0, 0, 0, 1, 0}, true);
    CHECK(only.zone == 4);
    CHECK(only.greedy);
    CHECK_THROWS_AS(agent.select_action(f, std::vector<std::uint8_t>(6, 0), false), std::logic_error);
  }

  TEST_CASE("adding a constant to every value leaves choices unchanged") {
    DqnAgent agent(AgentConfig{}, 21, 6);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const std::vector<double> f(21, 0.0);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> v(6);
      for (double& x : v) x = u(rng);
      std::vector<std::uint8_t> mask(6);
      for (auto& m : mask) m = rng() % 3 ? 1 : 0;
      if (std::count(mask.begin(), mask.end(), 1) == 0) mask[rng() % 6] = 1;
      set_outputs(agent.online(), v);
      const ZoneId a = agent.select_action(f, mask, false).zone;
      for (double& x : v) x += 123.5;
      set_outputs(agent.online(), v);
      CHECK(agent.select_action(f, mask, false).zone == a);
    }
  }

  TEST_CASE("target uses the online argmin and the target network's value") {
    AgentConfig cfg;
    DqnAgent agent(cfg, 21, 6);
    std::mt19937_64 rng(2);
    Experience e = random_experience(rng, 3);

    // Constant online outputs: argmin is zone 0, valued by the target network.
    set_outputs(agent.online(), std::vector<double>(6, 0.0));
    CHECK(agent.compute_target(e) == doctest::Approx(e.cost + agent.target().forward(e.next_state)[0]));

    // Spreadsheet-style check with random online and target networks.
    DqnAgent other(cfg, 21, 6);
    other.set_avg_reward(2.5);
    for (double& p : other.online().parameters()) p *= 1.7;
    const auto q_online = other.online().forward(e.next_state);
    e.next_feasible = {1, 0, 1, 1, 0, 1};
    std::size_t best = 0;
    for (std::size_t a = 0; a < 6; ++a) {
      if (e.next_feasible[a] && (!e.next_feasible[best] || q_online[a] < q_online[best])) best = a;
    }
    const double y = e.cost - 2.5 + other.target().forward(e.next_state)[best];
    CHECK(other.compute_target(e) == doctest::Approx(y));
  }

  TEST_CASE("zero networks give a target of cost minus average") {
    AgentConfig cfg;
    cfg.target_sync = 1;
    cfg.avg_reward_step = 0.0;
    DqnAgent agent(cfg, 21, 6);
    std::mt19937_64 rng(1);
    set_outputs(agent.online(), std::vector<double>(6, 0.0));
    agent.observe(random_experience(rng, 1));  // syncs the zero online net into the target
    const Experience e = random_experience(rng, 0);
    agent.set_avg_reward(e.cost);
    CHECK(agent.compute_target(e) == doctest::Approx(0.0));
    agent.set_avg_reward(1.0);
    CHECK(agent.compute_target(e) == doctest::Approx(e.cost - 1.0));
  }

  TEST_CASE("average cost moves only on greedy steps") {
    AgentConfig cfg;
    cfg.avg_reward_step = 0.1;
    DqnAgent agent(cfg, 21, 6);
    std::mt19937_64 rng(6);
    Experience e = random_experience(rng, 2);
    e.greedy = false;
    agent.update_avg_reward(e, 50.0);
    CHECK(agent.avg_reward() == 0.0);
    e.greedy = true;
    const double q = agent.online().forward(e.state)[2];
    agent.update_avg_reward(e, q);
    CHECK(agent.avg_reward() == doctest::Approx(0.0));
    agent.update_avg_reward(e, q + 10.0);
    CHECK(agent.avg_reward() == doctest::Approx(1.0));
  }

  TEST_CASE("training happens every 100 steps and the target syncs every 500") {
    DqnAgent agent(AgentConfig{}, 21, 6);
    std::mt19937_64 rng(8);
    const Network initial = agent.online();
    const std::size_t target_hash = hash_params(agent.target());
    for (int k = 0; k < 99; ++k) agent.observe(random_experience(rng, k % 6));
    CHECK(agent.online() == initial);
    CHECK(agent.training_rounds() == 0);
    agent.observe(random_experience(rng, 0));
    CHECK_FALSE(agent.online() == initial);
    CHECK(agent.training_rounds() == 1);
    for (int k = 100; k < 499; ++k) {
      agent.observe(random_experience(rng, k % 6));
      CHECK(hash_params(agent.target()) == target_hash);
    }
    CHECK_FALSE(agent.target() == agent.online());
    agent.observe(random_experience(rng, 1));
    CHECK(agent.steps() == 500);
    CHECK(agent.target() == agent.online());
  }

  TEST_CASE("replay keeps the newest 1000 experiences") {
    DqnAgent agent(AgentConfig{}, 21, 6);
    std::mt19937_64 rng(9);
    for (int k = 0; k < 1001; ++k) {
      Experience e = random_experience(rng, 0);
      e.cost = k;
      agent.observe(std::move(e));
    }
    CHECK(agent.memory().size() == 1000);
    CHECK(agent.memory().at(0).cost == 1.0);
    CHECK(agent.memory().at(999).cost == 1000.0);
  }

  TEST_CASE("opportunistic experiences train all outputs toward one value") {
    AgentConfig cfg;
    cfg.train_period = 1;
    cfg.sample_size = 8;
    cfg.minibatch = 8;
    cfg.learning_rate = 0.01;
    cfg.avg_reward_step = 0.0;
    DqnAgent agent(cfg, 21, 6);
    std::mt19937_64 rng(10);
    const Experience proto = random_experience(rng, 0);
    for (int k = 0; k < 3000; ++k) agent.observe_opportunistic(proto.state, 0.0, proto.state, kAll);
    const Experience& stored = agent.memory().at(0);
    CHECK(stored.action == kAllActions);
    CHECK(stored.greedy);
    const auto q = agent.online().forward(proto.state);
    CHECK(*std::max_element(q.begin(), q.end()) - *std::min_element(q.begin(), q.end()) < 1e-3);
  }

  TEST_CASE("a zero-travel opportunistic step pulls values by the average cost") {
    AgentConfig cfg;
    DqnAgent agent(cfg, 21, 6);
    std::mt19937_64 rng(12);
    const Experience proto = random_experience(rng, 0);
    agent.set_avg_reward(5.0);
    Experience e{proto.state, kAllActions, 0.0, proto.next_state, kAll, true};
    const auto q_next = agent.target().forward(proto.next_state);
    const auto q_online = agent.online().forward(proto.next_state);
    const auto best = static_cast<std::size_t>(std::min_element(q_online.begin(), q_online.end()) - q_online.begin());
    CHECK(agent.compute_target(e) == doctest::Approx(q_next[best] - 5.0));
  }

  TEST_CASE("divergence is detected") {
    AgentConfig cfg;
    cfg.avg_reward_step = 1.0;
    DqnAgent agent(cfg, 21, 6);
    std::mt19937_64 rng(13);
    Experience e = random_experience(rng, 0);
    e.greedy = true;
    e.cost = 1e9;
    CHECK_THROWS_AS(agent.observe(e), std::runtime_error);
  }

  TEST_CASE("feature vector has 3n+3 entries") {
    auto layout = std::make_shared<const Layout>(build_default_layout());
    DemandConfig d;
    d.skew = 0.6;
    d.seed = 2;
    d = scale_to_orders(d, 1000);
    auto orders = std::make_shared<const std::vector<Order>>(generate_orders(d));
    const auto turnover = TurnoverTable::from_demand(d);
    SimConfig sc;
    sc.horizon = d.horizon;
    Simulator sim(layout, orders, 34, sc, 3);
    ShortestLegPolicy sl;
    int storage = 0;
    int opportunistic = 0;
    while (const Decision* dp = sim.next_decision()) {
      const Decision dec = *dp;
      const auto f = extract_features(sim, dec, turnover);
      REQUIRE(f.size() == 21);
      CHECK(f[0] == turnover.rate[static_cast<std::size_t>(dec.shelf)]);
      CHECK(f[1] == turnover.rank[static_cast<std::size_t>(dec.shelf)]);
      const double hot = std::accumulate(f.begin() + 2, f.begin() + 8, 0.0);
      for (std::size_t z = 0; z < 6; ++z) {
        CHECK(f[8 + z] >= 0.0);
        CHECK(f[8 + z] <= 1.0);
        CHECK(f[8 + z] == doctest::Approx(1.0 - sim.zone_free(static_cast<ZoneId>(z)) / 6.0));
        CHECK(f[14 + z] == doctest::Approx(sim.inbound_robots()[z] / 5.0));
      }
      if (dec.opportunistic) {
        CHECK(hot == 0.0);
        CHECK(f[20] == 1.0);
        sim.apply_opportunistic();
        ++opportunistic;
      } else {
        CHECK(hot == 1.0);
        CHECK(f[2 + static_cast<std::size_t>(dec.retrieval_zone)] == 1.0);
        CHECK(f[20] == 0.0);
        sim.apply(sl.choose(sim, dec));
        ++storage;
      }
    }
    CHECK(storage > 50);
    CHECK(opportunistic > 0);
  }

  TEST_CASE("occupation is zero for empty zones") {
    auto layout = std::make_shared<const Layout>(build_default_layout());
    auto orders = std::make_shared<const std::vector<Order>>(std::vector<Order>{{0, 0, 0.0, 50.0, 1}, {1, 0, 0.0, 60.0, 1}});
    SimConfig sc;
    sc.robots = 1;
    Simulator sim(layout, orders, 1, sc, 1);
    const Decision* d = sim.next_decision();
    REQUIRE(d != nullptr);
    REQUIRE(d->opportunistic);
    const auto f = extract_features(sim, *d, TurnoverTable::from_rates({1.0}));
    for (std::size_t z = 0; z < 6; ++z) CHECK(f[8 + z] == 0.0);
  }

  TEST_CASE("learning policy observes one step per decision across episodes") {
    auto layout = std::make_shared<const Layout>(build_default_layout());
    DemandConfig d;
    d.seed = 4;
    d = scale_to_orders(d, 600);
    auto orders = std::make_shared<const std::vector<Order>>(generate_orders(d));
    SimConfig sc;
    sc.horizon = d.horizon;
    DqnAgent agent(AgentConfig{}, 21, 6);
    LearningAgentPolicy learner(agent, TurnoverTable::from_demand(d));
    ShortestLegPolicy sl;
    const std::size_t decisions = run_episode(layout, orders, 34, sl, sc, 5).total_cycles;
    run_episode(layout, orders, 34, learner, sc, 5);
    const std::size_t first = agent.steps();
    CHECK(first > decisions / 2);
    run_episode(layout, orders, 34, learner, sc, 6);
    // The last step of an episode is closed by the first decision of the next.
    CHECK(agent.steps() > first);
    CHECK(agent.memory().size() == std::min<std::size_t>(1000, agent.steps()));
  }

  TEST_CASE("greedy policy and its value model agree") {
    auto layout = std::make_shared<const Layout>(build_default_layout());
    DemandConfig d;
    d.seed = 4;
    d = scale_to_orders(d, 600);
    auto orders = std::make_shared<const std::vector<Order>>(generate_orders(d));
    SimConfig sc;
    sc.horizon = d.horizon;
    const auto turnover = TurnoverTable::from_demand(d);
    GreedyAgentPolicy greedy(Network({21, 32, 32, 32, 6}, 3), turnover);
    Simulator sim(layout, orders, 34, sc, 5);
    while (const Decision* dp = sim.next_decision()) {
      const Decision dec = *dp;
      if (dec.opportunistic) {
        sim.apply_opportunistic();
        continue;
      }
      const Placement p = greedy.choose(sim, dec);
      CHECK(p.zone == masked_argmin(greedy.action_values(sim, dec), sim.feasible_zones()));
      sim.apply(p);
    }
  }

  TEST_CASE("training loop produces one curve point per evaluation") {
    TrainingSpec spec;
    spec.demand = scale_to_orders(spec.demand, 60);
    CHECK_THROWS_AS(train_agent(spec), std::invalid_argument);
    spec.demand = scale_to_orders(spec.demand, 1000);
    spec.agent.episodes = 0;
    const TrainingResult none = train_agent(spec);
    CHECK(none.curve.empty());
    CHECK(none.steps == 0);
    CHECK(none.random_baseline > 0.0);

    spec.agent.episodes = 6;
    spec.agent.eval_every = 2;
    const TrainingResult r = train_agent(spec);
    REQUIRE(r.curve.size() == 3);
    CHECK(r.curve[0].episode == 2);
    CHECK(r.curve[2].episode == 6);
    CHECK(r.steps > 0);
    const TrainingResult again = train_agent(spec);
    CHECK(again.curve == r.curve);
    CHECK(again.network == r.network);
  }

  TEST_CASE("configuration checks") {
    AgentConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.sample_size = 2000;
    CHECK_THROWS(cfg.validate());
    cfg = AgentConfig{};
    cfg.epsilon = 1.5;
    CHECK_THROWS(cfg.validate());
    CHECK_THROWS(ReplayMemory(0));
  }
}
