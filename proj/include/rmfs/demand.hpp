#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace rmfs {

struct DemandConfig {
  int items = 34;           // m, item types (one shelf per item)
  double orders = 30000.0;  // n, expected orders over the horizon
  int periods = 1440;       // N, discretised periods
  double skew = 1.0;        // s in (0, 1]
  double tightness = 0.4;   // alpha in (0, 1]
  double horizon = 86400.0; // T, seconds
  std::uint64_t seed = 0;

  void validate() const;
  double period_length() const { return horizon / periods; }
};

struct Order {
  std::uint32_t id = 0;
  int item = 0;  // 0-based item id, equal to its shelf id
  double arrival = 0.0;
  double deadline = 0.0;
  int group_size = 1;

  friend bool operator==(const Order&, const Order&) = default;
};

// Cumulative demand share of the top fraction `x` of items: x^s.
double abc_curve(double x, double s);

// Poisson mean per period for item `i`, indexed 1..m.
double item_rate(int i, const DemandConfig& config);

// One grouped order per (period, item) with a nonzero Poisson draw, sorted by
// arrival then item. Fully determined by config.seed.
std::vector<Order> generate_orders(const DemandConfig& config);

// Keeps n/N (orders per period) and the period length fixed while shrinking
// the horizon to `orders` expected orders.
DemandConfig scale_to_orders(const DemandConfig& config, double orders);

// Independent child seed for stream `index` of `base` (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

void write_orders_csv(std::ostream& out, std::span<const Order> orders);
std::vector<Order> read_orders_csv(std::istream& in);

}  // namespace rmfs
