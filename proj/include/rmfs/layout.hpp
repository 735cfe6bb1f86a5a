#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rmfs {

struct GridPosition {
  int col = 0;
  int row = 0;

  friend bool operator==(const GridPosition&, const GridPosition&) = default;
  // Row-major order, used for deterministic tie-breaks.
  friend std::strong_ordering operator<=>(const GridPosition& a, const GridPosition& b) {
    if (auto c = a.row <=> b.row; c != 0) return c;
    return a.col <=> b.col;
  }
};

enum class CellKind : std::uint8_t { kVoid, kStorage, kAisle, kStation };

using ZoneId = int;

struct Zone {
  ZoneId id = 0;
  // Ordered by unloaded distance to the station, then (row, col). The first
  // free entry is therefore the within-zone storage location.
  std::vector<GridPosition> cells;
  double centroid_col = 0.0;
  double centroid_row = 0.0;

  std::size_t capacity() const { return cells.size(); }
};

// Rectangular array of storage blocks separated by one-cell aisles, with a
// single picking station one cell below the bottom aisle.
struct LayoutConfig {
  int blocks_wide = 3;
  int blocks_deep = 2;
  int block_cols = 2;
  int block_rows = 3;
  double cell_pitch = 1.0;   // meters per cell
  double speed = 0.6;        // m/s, loaded and unloaded
  double pick_time = 8.0;    // seconds per picked unit
  double handle_time = 3.0;  // seconds per load or unload

  void validate() const;
};

class Layout {
 public:
  explicit Layout(const LayoutConfig& config);

  int cols() const { return cols_; }
  int rows() const { return rows_; }
  std::size_t cell_count() const { return kinds_.size(); }
  bool in_bounds(GridPosition p) const;
  CellKind kind(GridPosition p) const;
  std::size_t index(GridPosition p) const;
  GridPosition position(std::size_t index) const;

  GridPosition station() const { return station_; }
  std::span<const Zone> zones() const { return zones_; }
  std::size_t zone_count() const { return zones_.size(); }
  const Zone& zone(ZoneId id) const;
  // Zone containing a storage cell; none for aisle, station or void cells.
  std::optional<ZoneId> zone_of(GridPosition p) const;

  // Storage cells ordered by unloaded distance to the station, then (row, col).
  std::span<const GridPosition> storage_cells() const { return storage_by_distance_; }

  // Manhattan distance; unloaded robots pass under stored shelves.
  double unloaded_distance(GridPosition a, GridPosition b) const;
  // Shortest path whose intermediate cells are aisle or station cells.
  double loaded_distance(GridPosition a, GridPosition b) const;
  double travel_time(double distance) const;

  const LayoutConfig& config() const { return config_; }
  double cell_pitch() const { return config_.cell_pitch; }
  double speed() const { return config_.speed; }
  double pick_time() const { return config_.pick_time; }
  double handle_time() const { return config_.handle_time; }

 private:
  void check_bounds(GridPosition p) const;
  void compute_loaded_steps();

  LayoutConfig config_;
  int cols_ = 0;
  int rows_ = 0;
  std::vector<CellKind> kinds_;
  std::vector<int> zone_by_cell_;  // -1 outside storage
  std::vector<Zone> zones_;
  std::vector<GridPosition> storage_by_distance_;
  GridPosition station_;
  std::vector<int> loaded_steps_;  // all pairs, -1 when unreachable
};

// 3 x 2 blocks of 2 x 3 shelves: 36 storage cells in 6 zones.
Layout build_default_layout();

// First free cell of `zone` in station-distance order, or none if the zone is
// full. `occupied(GridPosition)` reports whether a cell is taken.
template <class IsOccupied>
std::optional<GridPosition> closest_open_location(const Zone& zone, IsOccupied&& occupied) {
  for (const GridPosition& cell : zone.cells) {
    if (!occupied(cell)) return cell;
  }
  return std::nullopt;
}

}  // namespace rmfs
