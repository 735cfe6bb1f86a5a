#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rmfs/demand.hpp"
#include "rmfs/layout.hpp"

namespace rmfs {

using ShelfId = int;
using RobotId = int;
inline constexpr int kNoId = -1;

enum class RobotPhase : std::uint8_t {
  kIdleAtStation,
  kStoring,       // loaded, station -> storage cell, then unloading
  kInterleaving,  // unloaded, toward the retrieval cell, then loading
  kRetrieving,    // loaded, retrieval cell -> station
  kQueued,
  kPicking,
};

struct RobotState {
  RobotId id = 0;
  RobotPhase phase = RobotPhase::kIdleAtStation;
  ShelfId carried_shelf = kNoId;
  ShelfId target_shelf = kNoId;  // claimed for retrieval, not yet loaded
  int reserved_cell = -1;        // cell index the carried shelf is heading to
  std::optional<Order> assigned;
  double busy_until = 0.0;
  bool waiting = false;  // idle with no eligible order

  friend bool operator==(const RobotState&, const RobotState&) = default;
};

struct SimConfig {
  int robots = 5;
  int warmup_cycles = 100;
  double horizon = std::numeric_limits<double>::infinity();
  bool check_invariants = false;  // full consistency check after every event
  bool keep_trace = false;

  void validate() const;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

// A robot at the station that needs its next task. For a storage decision the
// policy picks the zone for `shelf`; opportunistic decisions need no choice.
struct Decision {
  RobotId robot = kNoId;
  ShelfId shelf = kNoId;
  Order next;
  bool opportunistic = false;
  GridPosition retrieval_cell;  // meaningless when opportunistic
  ZoneId retrieval_zone = kNoId;
  double clock = 0.0;

  friend bool operator==(const Decision&, const Decision&) = default;
};

struct Placement {
  ZoneId zone = 0;
  std::optional<GridPosition> cell;  // defaults to the zone's closest open cell
};

struct CycleRecord {
  double clock = 0.0;
  RobotId robot = kNoId;
  ShelfId shelf = kNoId;  // shelf stored (or kept, when opportunistic)
  ZoneId zone = kNoId;
  double access = 0.0;      // loaded, station -> storage cell
  double interleave = 0.0;  // unloaded, storage cell -> retrieval cell
  double retrieve = 0.0;    // loaded, retrieval cell -> station
  double travel = 0.0;      // access + interleave + retrieve, seconds
  bool opportunistic = false;
  bool retrieval_only = false;  // start-up trip of a robot without a shelf

  friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

struct EpisodeMetrics {
  double avg_travel_time = 0.0;  // every station visit counts as a cycle
  std::size_t total_cycles = 0;
  double total_travel = 0.0;
  std::size_t opportunistic_cycles = 0;
  double avg_travel_excluding_opportunistic = 0.0;
  std::size_t orders_fulfilled = 0;
  std::size_t picks = 0;
  std::vector<CycleRecord> trace;
};

void write_trace_csv(std::ostream& out, std::span<const CycleRecord> trace);

class Simulator;

class StoragePolicy {
 public:
  virtual ~StoragePolicy() = default;
  virtual Placement choose(const Simulator& sim, const Decision& decision) = 0;
  virtual void on_opportunistic(const Simulator&, const Decision&) {}
  virtual void on_cycle(const CycleRecord&) {}
};

// Event-driven warehouse. Copies are independent snapshots.
class Simulator {
 public:
  Simulator(std::shared_ptr<const Layout> layout, std::shared_ptr<const std::vector<Order>> orders,
            std::size_t shelves, const SimConfig& config, std::uint64_t seed);

  // Advances until a robot needs a decision and returns it, or nullptr once
  // the episode is over. Repeated calls without apply return the same decision.
  const Decision* next_decision();
  CycleRecord apply(const Placement& placement);
  CycleRecord apply_opportunistic();

  // Copy that never reveals further orders. Only the earliest `max_decisions`
  // pending orders per shelf are kept, which is exact as long as the copy
  // takes at most that many decisions.
  Simulator frozen_copy(std::size_t max_decisions) const;

  // Earliest-deadline revealed order whose shelf is stored or carried by
  // `robot`; orders on shelves held by other robots are skipped.
  std::optional<Order> next_retrieval(RobotId robot) const;
  // The next retrieval, if it targets the shelf `robot` is carrying.
  std::optional<Order> check_opportunistic(RobotId robot) const;

  const Layout& layout() const { return *layout_; }
  const SimConfig& config() const { return config_; }
  double clock() const { return clock_; }
  std::size_t shelf_count() const { return shelf_cell_.size(); }
  std::span<const RobotState> robots() const { return robots_; }
  const std::deque<RobotId>& station_queue() const { return station_queue_; }
  int zone_free(ZoneId zone) const { return zone_free_.at(static_cast<std::size_t>(zone)); }
  std::span<const int> zone_free_counts() const { return zone_free_; }
  std::span<const int> inbound_robots() const { return inbound_; }
  bool cell_taken(GridPosition cell) const;  // occupied or reserved
  std::optional<GridPosition> shelf_cell(ShelfId shelf) const;
  RobotId shelf_holder(ShelfId shelf) const { return shelf_holder_.at(static_cast<std::size_t>(shelf)); }
  std::vector<std::uint8_t> feasible_zones() const;
  // Deadline-ordered copy of revealed, unassigned orders.
  std::vector<Order> revealed_orders() const;
  std::size_t decisions_taken() const { return decisions_; }
  bool finished() const { return finished_; }

  EpisodeMetrics metrics() const;
  // Throws std::logic_error describing the first broken invariant.
  void check_invariants() const;

  friend bool operator==(const Simulator&, const Simulator&) = default;

 private:
  enum class EventKind : std::uint8_t { kArrival, kUnloadDone, kLoadDone, kAtStation, kPickDone };
  struct Event {
    double time = 0.0;
    RobotId robot = kNoId;  // arrivals use kNoId and sort first
    std::uint64_t seq = 0;
    EventKind kind = EventKind::kArrival;
    friend bool operator==(const Event&, const Event&) = default;
  };
  struct EventLater {
    bool operator()(const Event& a, const Event& b) const;
  };

  void schedule(double time, RobotId robot, EventKind kind);
  void handle(const Event& event);
  void reveal_arrivals();
  bool dispatch(RobotId robot);
  void start_retrieval_only(RobotState& robot, const Order& order);
  void join_queue(RobotState& robot);
  void start_pick(RobotId robot);
  void wake_waiting_robots();
  void take_order(const Order& order);
  void record(CycleRecord rec);
  struct FrozenTag {};
  Simulator(const Simulator& other, FrozenTag, std::size_t max_decisions);

  std::shared_ptr<const Layout> layout_;
  std::shared_ptr<const std::vector<Order>> orders_;
  SimConfig config_;
  std::size_t next_arrival_ = 0;
  bool arrivals_frozen_ = false;
  double clock_ = 0.0;
  bool finished_ = false;

  std::vector<int> cell_shelf_;     // shelf stored on the cell, or -1
  std::vector<int> cell_reserved_;  // shelf on its way to the cell, or -1
  std::vector<int> shelf_cell_;     // cell index, or -1 while on a robot
  std::vector<int> shelf_holder_;   // robot carrying or claiming the shelf
  std::vector<int> zone_free_;
  std::vector<int> inbound_;
  std::vector<RobotState> robots_;
  std::deque<RobotId> station_queue_;
  RobotId picking_ = kNoId;
  // Revealed unassigned orders per shelf, latest deadline first.
  std::vector<std::vector<Order>> pending_;

  std::vector<Event> events_;  // min-heap under EventLater
  std::uint64_t seq_ = 0;
  std::deque<RobotId> ready_;
  std::optional<Decision> pending_decision_;

  std::size_t decisions_ = 0;
  std::size_t cycles_started_ = 0;
  std::size_t counted_cycles_ = 0;
  std::size_t counted_opportunistic_ = 0;
  double counted_travel_ = 0.0;
  std::size_t orders_fulfilled_ = 0;
  std::size_t picks_ = 0;
  std::vector<CycleRecord> trace_;
};

// Routes every storage decision of one episode through `policy`. Shelves are
// the item types of the order stream (`shelves` of them).
EpisodeMetrics run_episode(std::shared_ptr<const Layout> layout,
                           std::shared_ptr<const std::vector<Order>> orders, std::size_t shelves,
                           StoragePolicy& policy, const SimConfig& config, std::uint64_t seed);

}  // namespace rmfs
