#include "rmfs/layout.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>
#include <tuple>

namespace rmfs {

void LayoutConfig::validate() const {
  if (blocks_wide < 1 || blocks_deep < 1 || block_cols < 1 || block_rows < 1) {
    throw std::invalid_argument("layout: block grid dimensions must be positive");
  }
  if (block_cols > 2) {
    // Wider blocks would leave interior cells without an adjacent aisle.
    throw std::invalid_argument("layout: block_cols must be 1 or 2");
  }
  if (!(cell_pitch > 0.0) || !(speed > 0.0) || pick_time < 0.0 || handle_time < 0.0) {
    throw std::invalid_argument("layout: pitch and speed must be positive, times nonnegative");
  }
}

Layout::Layout(const LayoutConfig& config) : config_(config) {
  config_.validate();
  cols_ = 1 + config_.blocks_wide * (config_.block_cols + 1);
  const int floor_rows = 1 + config_.blocks_deep * (config_.block_rows + 1);
  rows_ = floor_rows + 1;
  kinds_.assign(static_cast<std::size_t>(cols_ * rows_), CellKind::kVoid);
  zone_by_cell_.assign(kinds_.size(), -1);

  for (int r = 0; r < floor_rows; ++r) {
    for (int c = 0; c < cols_; ++c) kinds_[index({c, r})] = CellKind::kAisle;
  }
  station_ = {(cols_ - 1) / 2, floor_rows};
  kinds_[index(station_)] = CellKind::kStation;

  std::vector<Zone> blocks;
  for (int by = 0; by < config_.blocks_deep; ++by) {
    for (int bx = 0; bx < config_.blocks_wide; ++bx) {
      Zone z;
      const int c0 = 1 + bx * (config_.block_cols + 1);
      const int r0 = 1 + by * (config_.block_rows + 1);
      for (int r = r0; r < r0 + config_.block_rows; ++r) {
        for (int c = c0; c < c0 + config_.block_cols; ++c) {
          kinds_[index({c, r})] = CellKind::kStorage;
          z.cells.push_back({c, r});
        }
      }
      z.centroid_col = c0 + (config_.block_cols - 1) / 2.0;
      z.centroid_row = r0 + (config_.block_rows - 1) / 2.0;
      blocks.push_back(std::move(z));
    }
  }

  auto to_station = [this](GridPosition p) { return unloaded_distance(p, station_); };
  auto cell_order = [&](const GridPosition& a, const GridPosition& b) {
    return std::tuple(to_station(a), a) < std::tuple(to_station(b), b);
  };
  auto centroid_distance = [this](const Zone& z) {
    return std::abs(z.centroid_col - station_.col) + std::abs(z.centroid_row - station_.row);
  };
  std::stable_sort(blocks.begin(), blocks.end(), [&](const Zone& a, const Zone& b) {
    return std::tuple(centroid_distance(a), a.centroid_row, a.centroid_col) <
           std::tuple(centroid_distance(b), b.centroid_row, b.centroid_col);
  });
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Zone& z = blocks[i];
    z.id = static_cast<ZoneId>(i);
    std::sort(z.cells.begin(), z.cells.end(), cell_order);
    for (const GridPosition& p : z.cells) {
      zone_by_cell_[index(p)] = z.id;
      storage_by_distance_.push_back(p);
    }
  }
  zones_ = std::move(blocks);
  std::sort(storage_by_distance_.begin(), storage_by_distance_.end(), cell_order);

  compute_loaded_steps();
}

bool Layout::in_bounds(GridPosition p) const {
  return p.col >= 0 && p.row >= 0 && p.col < cols_ && p.row < rows_;
}

void Layout::check_bounds(GridPosition p) const {
  if (!in_bounds(p)) {
    throw std::out_of_range("layout: position (" + std::to_string(p.col) + "," +
                            std::to_string(p.row) + ") out of bounds");
  }
}

CellKind Layout::kind(GridPosition p) const {
  check_bounds(p);
  return kinds_[index(p)];
}

std::size_t Layout::index(GridPosition p) const {
  check_bounds(p);
  return static_cast<std::size_t>(p.row) * static_cast<std::size_t>(cols_) +
         static_cast<std::size_t>(p.col);
}

GridPosition Layout::position(std::size_t index) const {
  return {static_cast<int>(index % static_cast<std::size_t>(cols_)),
          static_cast<int>(index / static_cast<std::size_t>(cols_))};
}

const Zone& Layout::zone(ZoneId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= zones_.size()) {
    throw std::out_of_range("layout: zone id " + std::to_string(id) + " out of range");
  }
  return zones_[static_cast<std::size_t>(id)];
}

std::optional<ZoneId> Layout::zone_of(GridPosition p) const {
  check_bounds(p);
  const int z = zone_by_cell_[index(p)];
  if (z < 0) return std::nullopt;
  return z;
}

double Layout::unloaded_distance(GridPosition a, GridPosition b) const {
  check_bounds(a);
  check_bounds(b);
  return (std::abs(a.col - b.col) + std::abs(a.row - b.row)) * config_.cell_pitch;
}

double Layout::loaded_distance(GridPosition a, GridPosition b) const {
  check_bounds(a);
  check_bounds(b);
  const int steps = loaded_steps_[index(a) * cell_count() + index(b)];
  if (steps < 0) {
    throw std::runtime_error("layout: no loaded path between (" + std::to_string(a.col) + "," +
                             std::to_string(a.row) + ") and (" + std::to_string(b.col) + "," +
                             std::to_string(b.row) + ")");
  }
  return steps * config_.cell_pitch;
}

double Layout::travel_time(double distance) const {
  if (distance < 0.0) throw std::invalid_argument("layout: negative travel distance");
  return distance / config_.speed;
}

// One BFS per source. Storage cells are reachable as path endpoints but are
// never expanded, except when they are the source itself.
void Layout::compute_loaded_steps() {
  const std::size_t n = cell_count();
  loaded_steps_.assign(n * n, -1);
  constexpr int kDc[] = {1, -1, 0, 0};
  constexpr int kDr[] = {0, 0, 1, -1};
  std::deque<std::size_t> frontier;
  for (std::size_t src = 0; src < n; ++src) {
    if (kinds_[src] == CellKind::kVoid) continue;
    int* dist = &loaded_steps_[src * n];
    dist[src] = 0;
    frontier.assign(1, src);
    while (!frontier.empty()) {
      const std::size_t u = frontier.front();
      frontier.pop_front();
      if (u != src && kinds_[u] == CellKind::kStorage) continue;
      const GridPosition pu = position(u);
      for (int k = 0; k < 4; ++k) {
        const GridPosition pv{pu.col + kDc[k], pu.row + kDr[k]};
        if (!in_bounds(pv)) continue;
        const std::size_t v = index(pv);
        if (kinds_[v] == CellKind::kVoid || dist[v] >= 0) continue;
        dist[v] = dist[u] + 1;
        frontier.push_back(v);
      }
    }
  }
}

Layout build_default_layout() { return Layout(LayoutConfig{}); }

}  // namespace rmfs
