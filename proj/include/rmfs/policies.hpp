#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "rmfs/demand.hpp"
#include "rmfs/sim.hpp"

namespace rmfs {

// Per-shelf demand rates, granted to turnover-aware policies and features.
struct TurnoverTable {
  std::vector<double> rate;  // orders per period
  std::vector<double> rank;  // 0 for the fastest mover, 1 for the slowest

  static TurnoverTable from_rates(std::vector<double> rates);
  static TurnoverTable from_demand(const DemandConfig& config);
  std::size_t size() const { return rate.size(); }
  // Position of the shelf in decreasing-rate order (ties by shelf id).
  std::size_t position(ShelfId shelf) const;
};

// Uniform over free storage locations.
class RandomPolicy : public StoragePolicy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  Placement choose(const Simulator& sim, const Decision& decision) override;

 private:
  std::mt19937_64 rng_;
};

// Concentric distance bands filled by turnover class, random cell within band.
class ClassBasedPolicy : public StoragePolicy {
 public:
  struct Split {
    std::array<double, 3> shelf_share{0.2, 0.3, 0.5};
    std::array<double, 3> cell_share{0.2, 0.3, 0.5};
  };

  ClassBasedPolicy(const Layout& layout, TurnoverTable turnover, std::uint64_t seed);
  ClassBasedPolicy(const Layout& layout, TurnoverTable turnover, std::uint64_t seed, Split split);
  Placement choose(const Simulator& sim, const Decision& decision) override;

  int shelf_class(ShelfId shelf) const { return shelf_class_.at(static_cast<std::size_t>(shelf)); }
  // Storage cells of each band, nearest band first.
  const std::vector<std::vector<GridPosition>>& bands() const { return bands_; }

 private:
  std::vector<int> shelf_class_;
  std::vector<std::vector<GridPosition>> bands_;
  std::mt19937_64 rng_;
};

// Minimises loaded access plus unloaded interleaving distance for the current
// cycle, using each zone's closest open cell as its candidate.
class ShortestLegPolicy : public StoragePolicy {
 public:
  Placement choose(const Simulator& sim, const Decision& decision) override;

  // Leg length of `zone`'s candidate cell, or none when the zone is full.
  // Without a retrieval cell only the access leg counts.
  static std::optional<double> leg(const Simulator& sim, ZoneId zone,
                                   std::optional<GridPosition> retrieval_cell);
  static ZoneId best_zone(const Simulator& sim, std::optional<GridPosition> retrieval_cell);
};

}  // namespace rmfs
