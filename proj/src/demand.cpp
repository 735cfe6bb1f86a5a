#include "rmfs/demand.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace rmfs {

void DemandConfig::validate() const {
  if (items < 1) throw std::invalid_argument("demand: items must be >= 1");
  if (!(orders >= 1.0)) throw std::invalid_argument("demand: orders must be >= 1");
  if (periods < 1) throw std::invalid_argument("demand: periods must be >= 1");
  if (!(skew > 0.0 && skew <= 1.0)) throw std::invalid_argument("demand: skew must be in (0, 1]");
  if (!(tightness > 0.0 && tightness <= 1.0)) {
    throw std::invalid_argument("demand: tightness must be in (0, 1]");
  }
  if (!(horizon > 0.0)) throw std::invalid_argument("demand: horizon must be positive");
  if (tightness * horizon <= 1.0) {
    throw std::invalid_argument("demand: tightness * horizon must exceed the 1 s minimum allowance");
  }
}

double abc_curve(double x, double s) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error("abc_curve: x must be in [0, 1]");
  if (!(s > 0.0 && s <= 1.0)) throw std::domain_error("abc_curve: s must be in (0, 1]");
  return std::pow(x, s);
}

double item_rate(int i, const DemandConfig& config) {
  if (i < 1 || i > config.items) throw std::out_of_range("item_rate: item index out of range");
  const double m = config.items;
  const double share = abc_curve(i / m, config.skew) - abc_curve((i - 1) / m, config.skew);
  return share * config.orders / config.periods;
}

std::vector<Order> generate_orders(const DemandConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::vector<std::poisson_distribution<int>> draws;
  std::vector<double> rates;
  for (int i = 1; i <= config.items; ++i) {
    rates.push_back(item_rate(i, config));
    draws.emplace_back(rates.back() > 0.0 ? rates.back() : 1.0);
  }
  std::uniform_real_distribution<double> allowance(1.0, config.tightness * config.horizon);

  std::vector<Order> orders;
  std::uint32_t next_id = 0;
  const double dt = config.period_length();
  for (int p = 0; p < config.periods; ++p) {
    const double arrival = p * dt;
    for (int i = 0; i < config.items; ++i) {
      if (rates[i] <= 0.0) continue;
      const int k = draws[i](rng);
      if (k < 1) continue;
      Order o;
      o.id = next_id++;
      o.item = i;
      o.arrival = arrival;
      o.deadline = arrival + allowance(rng);
      o.group_size = k;
      orders.push_back(o);
    }
  }
  return orders;
}

DemandConfig scale_to_orders(const DemandConfig& config, double orders) {
  DemandConfig scaled = config;
  const double ratio = orders / config.orders;
  const double dt = config.period_length();
  scaled.periods = std::max(1, static_cast<int>(std::lround(config.periods * ratio)));
  scaled.horizon = scaled.periods * dt;
  scaled.orders = config.orders / config.periods * scaled.periods;
  return scaled;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void write_orders_csv(std::ostream& out, std::span<const Order> orders) {
  out << "id,item,arrival,deadline,group_size\n";
  out << std::setprecision(17);
  for (const Order& o : orders) {
    out << o.id << ',' << o.item << ',' << o.arrival << ',' << o.deadline << ',' << o.group_size
        << '\n';
  }
}

std::vector<Order> read_orders_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  std::vector<Order> orders;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    Order o;
    char sep = 0;
    if (!(row >> o.id >> sep >> o.item >> sep >> o.arrival >> sep >> o.deadline >> sep >>
          o.group_size)) {
      throw std::runtime_error("orders csv: malformed row '" + line + "'");
    }
    orders.push_back(o);
  }
  return orders;
}

}  // namespace rmfs
