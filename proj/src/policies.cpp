#include "rmfs/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rmfs {

namespace {

ZoneId zone_of_cell(const Simulator& sim, GridPosition cell) { return *sim.layout().zone_of(cell); }

}  // namespace

TurnoverTable TurnoverTable::from_rates(std::vector<double> rates) {
  TurnoverTable t;
  t.rate = std::move(rates);
  const std::size_t m = t.rate.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return t.rate[a] > t.rate[b]; });
  t.rank.assign(m, 0.0);
  for (std::size_t pos = 0; pos < m; ++pos) {
    t.rank[order[pos]] = m > 1 ? static_cast<double>(pos) / static_cast<double>(m - 1) : 0.0;
  }
  return t;
}

TurnoverTable TurnoverTable::from_demand(const DemandConfig& config) {
  std::vector<double> rates;
  for (int i = 1; i <= config.items; ++i) rates.push_back(item_rate(i, config));
  return from_rates(std::move(rates));
}

std::size_t TurnoverTable::position(ShelfId shelf) const {
  const std::size_t m = rate.size();
  return static_cast<std::size_t>(std::lround(rank.at(static_cast<std::size_t>(shelf)) * (m > 1 ? m - 1 : 0)));
}

Placement RandomPolicy::choose(const Simulator& sim, const Decision&) {
  std::vector<GridPosition> free;
  for (const GridPosition& cell : sim.layout().storage_cells()) {
    if (!sim.cell_taken(cell)) free.push_back(cell);
  }
  if (free.empty()) throw std::logic_error("random policy: no free storage location");
  std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
  const GridPosition cell = free[pick(rng_)];
  return {zone_of_cell(sim, cell), cell};
}

ClassBasedPolicy::ClassBasedPolicy(const Layout& layout, TurnoverTable turnover, std::uint64_t seed)
    : ClassBasedPolicy(layout, std::move(turnover), seed, Split{}) {}

ClassBasedPolicy::ClassBasedPolicy(const Layout& layout, TurnoverTable turnover, std::uint64_t seed,
                                   Split split)
    : rng_(seed) {
  const auto cells = layout.storage_cells();
  const double total_cells = static_cast<double>(cells.size());
  const double total_shelves = static_cast<double>(turnover.size());

  // Cumulative boundaries, rounded, so the bands partition every cell.
  std::size_t begin = 0;
  double cell_cum = 0.0;
  for (std::size_t k = 0; k < split.cell_share.size(); ++k) {
    cell_cum += split.cell_share[k];
    std::size_t end = k + 1 == split.cell_share.size()
                          ? cells.size()
                          : static_cast<std::size_t>(std::lround(cell_cum * total_cells));
    end = std::clamp(end, begin, cells.size());
    bands_.emplace_back(cells.begin() + static_cast<std::ptrdiff_t>(begin),
                        cells.begin() + static_cast<std::ptrdiff_t>(end));
    begin = end;
  }

  std::array<std::size_t, 3> shelf_bound{};
  double shelf_cum = 0.0;
  for (std::size_t k = 0; k < split.shelf_share.size(); ++k) {
    shelf_cum += split.shelf_share[k];
    shelf_bound[k] = k + 1 == split.shelf_share.size()
                         ? turnover.size()
                         : static_cast<std::size_t>(std::lround(shelf_cum * total_shelves));
  }
  shelf_class_.resize(turnover.size());
  for (std::size_t s = 0; s < turnover.size(); ++s) {
    const std::size_t pos = turnover.position(static_cast<ShelfId>(s));
    int cls = 0;
    while (cls < 2 && pos >= shelf_bound[static_cast<std::size_t>(cls)]) ++cls;
    shelf_class_[s] = cls;
  }
}

Placement ClassBasedPolicy::choose(const Simulator& sim, const Decision& decision) {
  const int home = shelf_class(decision.shelf);
  const int bands = static_cast<int>(bands_.size());
  // Home band first, then by distance in band index, nearer-to-station first.
  std::vector<int> order{home};
  for (int k = 1; k < bands; ++k) {
    if (home - k >= 0) order.push_back(home - k);
    if (home + k < bands) order.push_back(home + k);
  }
  for (int cls : order) {
    std::vector<GridPosition> free;
    for (const GridPosition& cell : bands_[static_cast<std::size_t>(cls)]) {
      if (!sim.cell_taken(cell)) free.push_back(cell);
    }
    if (free.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
    const GridPosition cell = free[pick(rng_)];
    return {zone_of_cell(sim, cell), cell};
  }
  throw std::logic_error("class-based policy: no free storage location");
}

std::optional<double> ShortestLegPolicy::leg(const Simulator& sim, ZoneId zone,
                                             std::optional<GridPosition> retrieval_cell) {
  const Layout& layout = sim.layout();
  const auto candidate = closest_open_location(layout.zone(zone),
                                               [&](GridPosition p) { return sim.cell_taken(p); });
  if (!candidate) return std::nullopt;
  double d = layout.loaded_distance(layout.station(), *candidate);
  if (retrieval_cell) d += layout.unloaded_distance(*candidate, *retrieval_cell);
  return d;
}

ZoneId ShortestLegPolicy::best_zone(const Simulator& sim, std::optional<GridPosition> retrieval_cell) {
  ZoneId best = kNoId;
  double best_leg = std::numeric_limits<double>::infinity();
  for (std::size_t z = 0; z < sim.layout().zone_count(); ++z) {
    const auto l = leg(sim, static_cast<ZoneId>(z), retrieval_cell);
    if (l && *l < best_leg) {
      best_leg = *l;
      best = static_cast<ZoneId>(z);
    }
  }
  if (best == kNoId) throw std::logic_error("shortest leg policy: every zone is full");
  return best;
}

Placement ShortestLegPolicy::choose(const Simulator& sim, const Decision& decision) {
  std::optional<GridPosition> retrieval;
  if (!decision.opportunistic) retrieval = decision.retrieval_cell;
  return {best_zone(sim, retrieval), std::nullopt};
}

}  // namespace rmfs
