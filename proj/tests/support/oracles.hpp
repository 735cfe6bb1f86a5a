#pragma once

// Reference computations kept independent of the library internals.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <tuple>
#include <vector>

#include "rmfs/layout.hpp"
#include "rmfs/sim.hpp"

namespace rmfs::oracle {

// All-pairs loaded distance in cells: Floyd-Warshall over aisle and station
// cells, then endpoints attached through their passable neighbours.
class LoadedDistances {
 public:
  explicit LoadedDistances(const Layout& layout) : layout_(layout) {
    const int n = static_cast<int>(layout.cell_count());
    dist_.assign(static_cast<std::size_t>(n) * n, kInf);
    for (int i = 0; i < n; ++i) {
      if (!passable(i)) continue;
      at(i, i) = 0;
      for (int j : neighbours(i)) {
        if (passable(j)) at(i, j) = 1;
      }
    }
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        if (at(i, k) >= kInf) continue;
        for (int j = 0; j < n; ++j) at(i, j) = std::min(at(i, j), at(i, k) + at(k, j));
      }
    }
  }

  // Cells, or nullopt when no path exists.
  std::optional<int> operator()(GridPosition a, GridPosition b) const {
    const int ia = static_cast<int>(layout_.index(a));
    const int ib = static_cast<int>(layout_.index(b));
    if (ia == ib) return 0;
    const auto na = neighbours(ia);
    if (std::find(na.begin(), na.end(), ib) != na.end()) return 1;
    int best = kInf;
    for (int x : na) {
      if (!passable(x)) continue;
      for (int y : neighbours(ib)) {
        if (passable(y) && at(x, y) < kInf) best = std::min(best, at(x, y) + 2);
      }
    }
    if (best >= kInf) return std::nullopt;
    return best;
  }

 private:
  static constexpr int kInf = std::numeric_limits<int>::max() / 4;

  bool passable(int i) const {
    const auto k = layout_.kind(layout_.position(static_cast<std::size_t>(i)));
    return k == CellKind::kAisle || k == CellKind::kStation;
  }
  std::vector<int> neighbours(int i) const {
    const GridPosition p = layout_.position(static_cast<std::size_t>(i));
    std::vector<int> out;
    for (GridPosition q : {GridPosition{p.col + 1, p.row}, GridPosition{p.col - 1, p.row},
                           GridPosition{p.col, p.row + 1}, GridPosition{p.col, p.row - 1}}) {
      if (layout_.in_bounds(q) && layout_.kind(q) != CellKind::kVoid) {
        out.push_back(static_cast<int>(layout_.index(q)));
      }
    }
    return out;
  }
  int& at(int i, int j) { return dist_[static_cast<std::size_t>(i) * layout_.cell_count() + j]; }
  int at(int i, int j) const { return dist_[static_cast<std::size_t>(i) * layout_.cell_count() + j]; }

  const Layout& layout_;
  std::vector<int> dist_;
};

inline int manhattan(GridPosition a, GridPosition b) { return std::abs(a.col - b.col) + std::abs(a.row - b.row); }

// Shortest-leg choice by exhaustive search over free cells: each zone's
// candidate is its free cell nearest the station (ties by row, then column).
inline ZoneId shortest_leg_zone(const Simulator& sim, const LoadedDistances& loaded,
                                std::optional<GridPosition> retrieval) {
  const Layout& layout = sim.layout();
  ZoneId best = kNoId;
  double best_leg = std::numeric_limits<double>::infinity();
  for (const Zone& zone : layout.zones()) {
    std::optional<GridPosition> cand;
    for (const GridPosition& c : zone.cells) {
      if (sim.cell_taken(c)) continue;
      auto key = [&](GridPosition p) { return std::tuple(manhattan(p, layout.station()), p.row, p.col); };
      if (!cand || key(c) < key(*cand)) cand = c;
    }
    if (!cand) continue;
    double leg = *loaded(layout.station(), *cand);
    if (retrieval) leg += manhattan(*cand, *retrieval);
    if (leg < best_leg) {
      best_leg = leg;
      best = zone.id;
    }
  }
  return best;
}

}  // namespace rmfs::oracle
