#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "rmfs/demand.hpp"

using namespace rmfs;

TEST_SUITE("demand") {
  TEST_CASE("item rates sum to orders per period") {
    for (double s : {0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
      DemandConfig cfg;
      cfg.skew = s;
      double total = 0.0;
      for (int i = 1; i <= cfg.items; ++i) total += item_rate(i, cfg);
      CHECK(std::abs(total - cfg.orders / cfg.periods) < 1e-9);
    }
  }

  TEST_CASE("item rates follow the ABC curve") {
    DemandConfig cfg;
    cfg.skew = 1.0;
    for (int i = 1; i <= cfg.items; ++i) CHECK(item_rate(i, cfg) == doctest::Approx(30000.0 / 1440.0 / 34.0));
    cfg.skew = 0.5;
    const double first = std::sqrt(1.0 / 34.0) * 30000.0 / 1440.0;
    CHECK(item_rate(1, cfg) == doctest::Approx(first));
    for (int i = 2; i <= cfg.items; ++i) CHECK(item_rate(i, cfg) < item_rate(i - 1, cfg));
    CHECK_THROWS_AS(item_rate(0, cfg), std::out_of_range);
    CHECK_THROWS_AS(item_rate(35, cfg), std::out_of_range);
  }

  TEST_CASE("abc curve") {
    CHECK(abc_curve(0.0, 0.6) == 0.0);
    CHECK(abc_curve(1.0, 0.6) == 1.0);
    CHECK(abc_curve(0.25, 0.5) == doctest::Approx(0.5));
    CHECK_THROWS_AS(abc_curve(1.5, 0.5), std::domain_error);
    CHECK_THROWS_AS(abc_curve(0.5, 0.0), std::domain_error);
  }

  TEST_CASE("demand volume averages n over 20 seeds") {
    DemandConfig cfg;
    cfg.skew = 0.6;
    double units = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      cfg.seed = seed;
      for (const Order& o : generate_orders(cfg)) units += o.group_size;
    }
    units /= 20.0;
    CHECK(std::abs(units - 30000.0) <= 3.0 * std::sqrt(30000.0));
  }

  TEST_CASE("orders respect arrival grid and deadline bounds") {
    DemandConfig cfg;
    cfg.skew = 0.4;
    cfg.seed = 3;
    const auto orders = generate_orders(cfg);
    REQUIRE_FALSE(orders.empty());
    const double dt = cfg.period_length();
    for (std::size_t k = 0; k < orders.size(); ++k) {
      const Order& o = orders[k];
      CHECK(o.id == k);
      CHECK(o.group_size >= 1);
      CHECK(o.item >= 0);
      CHECK(o.item < cfg.items);
      CHECK(std::fmod(o.arrival, dt) == 0.0);
      CHECK(o.deadline >= o.arrival + 1.0);
      CHECK(o.deadline <= o.arrival + cfg.tightness * cfg.horizon);
      if (k > 0) CHECK(orders[k - 1].arrival <= o.arrival);
    }
  }

  TEST_CASE("generation is a function of the seed") {
    DemandConfig cfg;
    cfg.seed = 9;
    CHECK(generate_orders(cfg) == generate_orders(cfg));
    DemandConfig other = cfg;
    other.seed = 10;
    CHECK_FALSE(generate_orders(cfg) == generate_orders(other));
  }

  TEST_CASE("desk-scale scaling keeps the arrival rate and period length") {
    DemandConfig cfg;
    const DemandConfig small = scale_to_orders(cfg, 5000.0);
    CHECK(small.periods == 240);
    CHECK(small.horizon == doctest::Approx(14400.0));
    CHECK(small.orders == doctest::Approx(5000.0));
    CHECK(small.period_length() == doctest::Approx(cfg.period_length()));
    CHECK(item_rate(1, small) == doctest::Approx(item_rate(1, cfg)));
  }

  TEST_CASE("invalid configurations are rejected") {
    DemandConfig cfg;
    cfg.skew = 1.5;
    CHECK_THROWS(generate_orders(cfg));
    cfg = DemandConfig{};
    cfg.items = 0;
    CHECK_THROWS(generate_orders(cfg));
    cfg = DemandConfig{};
    cfg.tightness = 0.0;
    CHECK_THROWS(generate_orders(cfg));
  }

  TEST_CASE("orders csv round-trips") {
    DemandConfig cfg;
    cfg = scale_to_orders(cfg, 500.0);
    cfg.seed = 4;
    const auto orders = generate_orders(cfg);
    std::stringstream buf;
    write_orders_csv(buf, orders);
    CHECK(buf.str().rfind("id,item,arrival,deadline,group_size\n", 0) == 0);
    CHECK(read_orders_csv(buf) == orders);
    std::istringstream bad("id,item,arrival,deadline,group_size\n1,2,x\n");
    CHECK_THROWS(read_orders_csv(bad));
  }

  TEST_CASE("derived seeds differ per stream") {
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(5, 3) == derive_seed(5, 3));
  }
}
