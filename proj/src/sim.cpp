#include "rmfs/sim.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

namespace rmfs {

namespace {

// Latest (deadline, id) first, so the earliest order sits at the back.
bool later_first(const Order& a, const Order& b) {
  return std::tie(a.deadline, a.id) > std::tie(b.deadline, b.id);
}

[[noreturn]] void broken(const std::string& what) {
  throw std::logic_error("sim invariant violated: " + what);
}

}  // namespace

void SimConfig::validate() const {
  if (robots < 1) throw std::invalid_argument("sim: robots must be >= 1");
  if (warmup_cycles < 0) throw std::invalid_argument("sim: warmup_cycles must be >= 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("sim: horizon must be positive");
}

bool Simulator::EventLater::operator()(const Event& a, const Event& b) const {
  return std::tie(a.time, a.robot, a.seq) > std::tie(b.time, b.robot, b.seq);
}

Simulator::Simulator(std::shared_ptr<const Layout> layout,
                     std::shared_ptr<const std::vector<Order>> orders, std::size_t shelves,
                     const SimConfig& config, std::uint64_t seed)
    : layout_(std::move(layout)), orders_(std::move(orders)), config_(config) {
  config_.validate();
  if (!layout_ || !orders_) throw std::invalid_argument("sim: layout and orders are required");
  const auto storage = layout_->storage_cells();
  if (shelves < 1 || shelves >= storage.size()) {
    throw std::invalid_argument("sim: need at least one shelf and one spare storage cell");
  }
  for (std::size_t i = 0; i < orders_->size(); ++i) {
    const Order& o = (*orders_)[i];
    if (o.item < 0 || static_cast<std::size_t>(o.item) >= shelves) {
      throw std::invalid_argument("sim: order item outside the shelf range");
    }
    if (i > 0 && o.arrival < (*orders_)[i - 1].arrival) {
      throw std::invalid_argument("sim: orders must be sorted by arrival");
    }
  }

  const std::size_t cells = layout_->cell_count();
  cell_shelf_.assign(cells, -1);
  cell_reserved_.assign(cells, -1);
  shelf_cell_.assign(shelves, -1);
  shelf_holder_.assign(shelves, kNoId);
  zone_free_.assign(layout_->zone_count(), 0);
  inbound_.assign(layout_->zone_count(), 0);
  pending_.resize(shelves);

  std::vector<GridPosition> slots(storage.begin(), storage.end());
  std::mt19937_64 rng(seed);
  std::shuffle(slots.begin(), slots.end(), rng);
  for (std::size_t s = 0; s < shelves; ++s) {
    const int c = static_cast<int>(layout_->index(slots[s]));
    cell_shelf_[static_cast<std::size_t>(c)] = static_cast<int>(s);
    shelf_cell_[s] = c;
  }
  for (const Zone& z : layout_->zones()) {
    for (const GridPosition& p : z.cells) {
      if (cell_shelf_[layout_->index(p)] < 0) ++zone_free_[static_cast<std::size_t>(z.id)];
    }
  }

  robots_.resize(static_cast<std::size_t>(config_.robots));
  for (int r = 0; r < config_.robots; ++r) {
    robots_[static_cast<std::size_t>(r)].id = r;
    ready_.push_back(r);
  }
  if (!orders_->empty()) schedule(orders_->front().arrival, kNoId, EventKind::kArrival);
}

Simulator::Simulator(const Simulator& other, FrozenTag, std::size_t max_decisions)
    : layout_(other.layout_),
      orders_(other.orders_),
      config_(other.config_),
      next_arrival_(other.orders_->size()),
      arrivals_frozen_(true),
      clock_(other.clock_),
      finished_(other.finished_),
      cell_shelf_(other.cell_shelf_),
      cell_reserved_(other.cell_reserved_),
      shelf_cell_(other.shelf_cell_),
      shelf_holder_(other.shelf_holder_),
      zone_free_(other.zone_free_),
      inbound_(other.inbound_),
      robots_(other.robots_),
      station_queue_(other.station_queue_),
      picking_(other.picking_),
      seq_(other.seq_),
      ready_(other.ready_),
      pending_decision_(other.pending_decision_),
      decisions_(other.decisions_),
      cycles_started_(other.cycles_started_),
      counted_cycles_(other.counted_cycles_),
      counted_opportunistic_(other.counted_opportunistic_),
      counted_travel_(other.counted_travel_),
      orders_fulfilled_(other.orders_fulfilled_),
      picks_(other.picks_) {
  config_.keep_trace = false;
  pending_.resize(other.pending_.size());
  for (std::size_t s = 0; s < other.pending_.size(); ++s) {
    const auto& src = other.pending_[s];
    const std::size_t keep = std::min(src.size(), max_decisions);
    pending_[s].assign(src.end() - static_cast<std::ptrdiff_t>(keep), src.end());
  }
  events_.reserve(other.events_.size());
  for (const Event& e : other.events_) {
    if (e.kind != EventKind::kArrival) events_.push_back(e);
  }
  std::make_heap(events_.begin(), events_.end(), EventLater{});
}

Simulator Simulator::frozen_copy(std::size_t max_decisions) const {
  return Simulator(*this, FrozenTag{}, max_decisions);
}

void Simulator::schedule(double time, RobotId robot, EventKind kind) {
  events_.push_back(Event{time, robot, seq_++, kind});
  std::push_heap(events_.begin(), events_.end(), EventLater{});
}

const Decision* Simulator::next_decision() {
  if (pending_decision_) return &*pending_decision_;
  if (finished_) return nullptr;
  for (;;) {
    while (!ready_.empty()) {
      const RobotId r = ready_.front();
      ready_.pop_front();
      if (dispatch(r)) return &*pending_decision_;
    }
    if (events_.empty() || events_.front().time > config_.horizon) {
      finished_ = true;
      return nullptr;
    }
    std::pop_heap(events_.begin(), events_.end(), EventLater{});
    const Event event = events_.back();
    events_.pop_back();
    clock_ = std::max(clock_, event.time);
    handle(event);
    if (config_.check_invariants) check_invariants();
  }
}

void Simulator::handle(const Event& event) {
  if (event.kind == EventKind::kArrival) {
    reveal_arrivals();
    return;
  }
  RobotState& robot = robots_[static_cast<std::size_t>(event.robot)];
  switch (event.kind) {
    case EventKind::kUnloadDone: {
      const ShelfId shelf = robot.carried_shelf;
      const auto cell = static_cast<std::size_t>(robot.reserved_cell);
      cell_reserved_[cell] = -1;
      cell_shelf_[cell] = shelf;
      shelf_cell_[static_cast<std::size_t>(shelf)] = robot.reserved_cell;
      shelf_holder_[static_cast<std::size_t>(shelf)] = kNoId;
      robot.carried_shelf = kNoId;
      robot.reserved_cell = -1;
      robot.phase = RobotPhase::kInterleaving;
      // Orders on the released shelf are eligible again.
      wake_waiting_robots();
      break;
    }
    case EventKind::kLoadDone: {
      const ShelfId shelf = robot.target_shelf;
      const auto cell = static_cast<std::size_t>(shelf_cell_[static_cast<std::size_t>(shelf)]);
      const ZoneId zone = *layout_->zone_of(layout_->position(cell));
      cell_shelf_[cell] = -1;
      shelf_cell_[static_cast<std::size_t>(shelf)] = -1;
      ++zone_free_[static_cast<std::size_t>(zone)];
      --inbound_[static_cast<std::size_t>(zone)];
      robot.carried_shelf = shelf;
      robot.target_shelf = kNoId;
      robot.phase = RobotPhase::kRetrieving;
      break;
    }
    case EventKind::kAtStation:
      join_queue(robot);
      break;
    case EventKind::kPickDone: {
      picking_ = kNoId;
      ++orders_fulfilled_;
      picks_ += static_cast<std::size_t>(robot.assigned->group_size);
      robot.assigned.reset();
      robot.phase = RobotPhase::kIdleAtStation;
      ready_.push_back(robot.id);
      if (!station_queue_.empty()) start_pick(station_queue_.front());
      break;
    }
    case EventKind::kArrival:
      break;
  }
}

void Simulator::reveal_arrivals() {
  if (arrivals_frozen_) return;
  const auto& orders = *orders_;
  while (next_arrival_ < orders.size() && orders[next_arrival_].arrival <= clock_) {
    const Order& o = orders[next_arrival_++];
    auto& queue = pending_[static_cast<std::size_t>(o.item)];
    queue.insert(std::lower_bound(queue.begin(), queue.end(), o, later_first), o);
  }
  if (next_arrival_ < orders.size()) {
    schedule(orders[next_arrival_].arrival, kNoId, EventKind::kArrival);
  }
  wake_waiting_robots();
}

void Simulator::wake_waiting_robots() {
  for (RobotState& robot : robots_) {
    if (!robot.waiting) continue;
    robot.waiting = false;
    ready_.push_back(robot.id);
  }
}

std::optional<Order> Simulator::next_retrieval(RobotId robot) const {
  const Order* best = nullptr;
  for (std::size_t s = 0; s < pending_.size(); ++s) {
    if (pending_[s].empty()) continue;
    const RobotId holder = shelf_holder_[s];
    if (holder != kNoId && holder != robot) continue;
    const Order& candidate = pending_[s].back();
    if (best == nullptr || later_first(*best, candidate)) best = &candidate;
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

std::optional<Order> Simulator::check_opportunistic(RobotId robot) const {
  auto next = next_retrieval(robot);
  if (next && next->item == robots_.at(static_cast<std::size_t>(robot)).carried_shelf) return next;
  return std::nullopt;
}

bool Simulator::dispatch(RobotId id) {
  RobotState& robot = robots_[static_cast<std::size_t>(id)];
  const auto next = next_retrieval(id);
  if (!next) {
    robot.waiting = true;
    return false;
  }
  robot.waiting = false;
  if (robot.carried_shelf == kNoId) {
    start_retrieval_only(robot, *next);
    return false;
  }
  Decision d;
  d.robot = id;
  d.shelf = robot.carried_shelf;
  d.next = *next;
  d.clock = clock_;
  if (next->item == robot.carried_shelf) {
    d.opportunistic = true;
  } else {
    const int cell = shelf_cell_[static_cast<std::size_t>(next->item)];
    d.retrieval_cell = layout_->position(static_cast<std::size_t>(cell));
    d.retrieval_zone = *layout_->zone_of(d.retrieval_cell);
  }
  pending_decision_ = d;
  return true;
}

void Simulator::take_order(const Order& order) {
  auto& queue = pending_[static_cast<std::size_t>(order.item)];
  auto it = std::find(queue.rbegin(), queue.rend(), order);
  if (it == queue.rend()) throw std::logic_error("sim: assigned order is not pending");
  queue.erase(std::next(it).base());
}

void Simulator::start_retrieval_only(RobotState& robot, const Order& order) {
  const ShelfId shelf = order.item;
  const GridPosition cell = layout_->position(static_cast<std::size_t>(shelf_cell_[static_cast<std::size_t>(shelf)]));
  const ZoneId zone = *layout_->zone_of(cell);
  take_order(order);
  shelf_holder_[static_cast<std::size_t>(shelf)] = robot.id;
  ++inbound_[static_cast<std::size_t>(zone)];
  robot.target_shelf = shelf;
  robot.assigned = order;
  robot.phase = RobotPhase::kInterleaving;

  CycleRecord rec;
  rec.clock = clock_;
  rec.robot = robot.id;
  rec.retrieval_only = true;
  rec.interleave = layout_->travel_time(layout_->unloaded_distance(layout_->station(), cell));
  rec.retrieve = layout_->travel_time(layout_->loaded_distance(cell, layout_->station()));
  rec.travel = rec.interleave + rec.retrieve;
  const double loaded_at = clock_ + rec.interleave + layout_->handle_time();
  robot.busy_until = loaded_at + rec.retrieve;
  schedule(loaded_at, robot.id, EventKind::kLoadDone);
  schedule(robot.busy_until, robot.id, EventKind::kAtStation);
  record(rec);
}

CycleRecord Simulator::apply(const Placement& placement) {
  if (!pending_decision_ || pending_decision_->opportunistic) {
    throw std::logic_error("sim: no storage decision is pending");
  }
  const Decision d = *pending_decision_;
  const Layout& layout = *layout_;
  if (placement.zone < 0 || static_cast<std::size_t>(placement.zone) >= layout.zone_count()) {
    throw std::logic_error("sim: policy returned unknown zone " + std::to_string(placement.zone));
  }
  if (zone_free_[static_cast<std::size_t>(placement.zone)] <= 0) {
    throw std::logic_error("sim: policy returned full zone " + std::to_string(placement.zone));
  }
  GridPosition cell;
  if (placement.cell) {
    cell = *placement.cell;
    if (!layout.in_bounds(cell) || layout.zone_of(cell) != placement.zone || cell_taken(cell)) {
      throw std::logic_error("sim: policy returned a cell that is not free in its zone");
    }
  } else {
    cell = *closest_open_location(layout.zone(placement.zone),
                                  [this](GridPosition p) { return cell_taken(p); });
  }

  RobotState& robot = robots_[static_cast<std::size_t>(d.robot)];
  const ShelfId stored = robot.carried_shelf;
  const ShelfId wanted = d.next.item;
  take_order(d.next);
  const auto ci = layout.index(cell);
  cell_reserved_[ci] = stored;
  --zone_free_[static_cast<std::size_t>(placement.zone)];
  robot.reserved_cell = static_cast<int>(ci);
  shelf_holder_[static_cast<std::size_t>(wanted)] = robot.id;
  ++inbound_[static_cast<std::size_t>(d.retrieval_zone)];
  robot.target_shelf = wanted;
  robot.assigned = d.next;
  robot.phase = RobotPhase::kStoring;

  CycleRecord rec;
  rec.clock = clock_;
  rec.robot = robot.id;
  rec.shelf = stored;
  rec.zone = placement.zone;
  rec.access = layout.travel_time(layout.loaded_distance(layout.station(), cell));
  rec.interleave = layout.travel_time(layout.unloaded_distance(cell, d.retrieval_cell));
  rec.retrieve = layout.travel_time(layout.loaded_distance(d.retrieval_cell, layout.station()));
  rec.travel = rec.access + rec.interleave + rec.retrieve;

  const double unloaded_at = clock_ + rec.access + layout.handle_time();
  const double loaded_at = unloaded_at + rec.interleave + layout.handle_time();
  robot.busy_until = loaded_at + rec.retrieve;
  schedule(unloaded_at, robot.id, EventKind::kUnloadDone);
  schedule(loaded_at, robot.id, EventKind::kLoadDone);
  schedule(robot.busy_until, robot.id, EventKind::kAtStation);

  pending_decision_.reset();
  ++decisions_;
  record(rec);
  if (config_.check_invariants) check_invariants();
  return rec;
}

CycleRecord Simulator::apply_opportunistic() {
  if (!pending_decision_ || !pending_decision_->opportunistic) {
    throw std::logic_error("sim: no opportunistic decision is pending");
  }
  const Decision d = *pending_decision_;
  RobotState& robot = robots_[static_cast<std::size_t>(d.robot)];
  take_order(d.next);
  robot.assigned = d.next;
  pending_decision_.reset();
  ++decisions_;
  join_queue(robot);

  CycleRecord rec;
  rec.clock = clock_;
  rec.robot = robot.id;
  rec.shelf = robot.carried_shelf;
  rec.opportunistic = true;
  record(rec);
  if (config_.check_invariants) check_invariants();
  return rec;
}

void Simulator::join_queue(RobotState& robot) {
  robot.phase = RobotPhase::kQueued;
  station_queue_.push_back(robot.id);
  if (picking_ == kNoId) start_pick(station_queue_.front());
}

void Simulator::start_pick(RobotId id) {
  station_queue_.pop_front();
  RobotState& robot = robots_[static_cast<std::size_t>(id)];
  picking_ = id;
  robot.phase = RobotPhase::kPicking;
  robot.busy_until = clock_ + robot.assigned->group_size * layout_->pick_time();
  schedule(robot.busy_until, id, EventKind::kPickDone);
}

void Simulator::record(CycleRecord rec) {
  ++cycles_started_;
  if (cycles_started_ > static_cast<std::size_t>(config_.warmup_cycles)) {
    ++counted_cycles_;
    counted_travel_ += rec.travel;
    if (rec.opportunistic) ++counted_opportunistic_;
  }
  if (config_.keep_trace) trace_.push_back(rec);
}

bool Simulator::cell_taken(GridPosition cell) const {
  const auto i = layout_->index(cell);
  return cell_shelf_[i] >= 0 || cell_reserved_[i] >= 0;
}

std::optional<GridPosition> Simulator::shelf_cell(ShelfId shelf) const {
  const int c = shelf_cell_.at(static_cast<std::size_t>(shelf));
  if (c < 0) return std::nullopt;
  return layout_->position(static_cast<std::size_t>(c));
}

std::vector<std::uint8_t> Simulator::feasible_zones() const {
  std::vector<std::uint8_t> feasible(zone_free_.size());
  for (std::size_t z = 0; z < zone_free_.size(); ++z) feasible[z] = zone_free_[z] > 0 ? 1 : 0;
  return feasible;
}

std::vector<Order> Simulator::revealed_orders() const {
  std::vector<Order> all;
  for (const auto& queue : pending_) all.insert(all.end(), queue.begin(), queue.end());
  std::sort(all.begin(), all.end(),
            [](const Order& a, const Order& b) { return later_first(b, a); });
  return all;
}

EpisodeMetrics Simulator::metrics() const {
  EpisodeMetrics m;
  m.total_cycles = counted_cycles_;
  m.total_travel = counted_travel_;
  m.opportunistic_cycles = counted_opportunistic_;
  if (counted_cycles_ > 0) m.avg_travel_time = counted_travel_ / static_cast<double>(counted_cycles_);
  if (counted_cycles_ > counted_opportunistic_) {
    m.avg_travel_excluding_opportunistic =
        counted_travel_ / static_cast<double>(counted_cycles_ - counted_opportunistic_);
  }
  m.orders_fulfilled = orders_fulfilled_;
  m.picks = picks_;
  m.trace = trace_;
  return m;
}

void Simulator::check_invariants() const {
  const Layout& layout = *layout_;
  const std::size_t shelves = shelf_cell_.size();

  std::vector<int> carriers(shelves, 0);
  for (const RobotState& r : robots_) {
    if (r.carried_shelf != kNoId) ++carriers[static_cast<std::size_t>(r.carried_shelf)];
    const bool loaded = r.phase == RobotPhase::kStoring || r.phase == RobotPhase::kRetrieving ||
                        r.phase == RobotPhase::kQueued || r.phase == RobotPhase::kPicking;
    if (loaded && r.carried_shelf == kNoId) broken("loaded phase without a shelf");
    if (r.phase == RobotPhase::kInterleaving && r.carried_shelf != kNoId) {
      broken("interleaving robot carries a shelf");
    }
    if (r.target_shelf != kNoId && shelf_cell_[static_cast<std::size_t>(r.target_shelf)] < 0) {
      broken("claimed shelf is not stored");
    }
  }

  std::size_t located = 0;
  for (std::size_t s = 0; s < shelves; ++s) {
    const int c = shelf_cell_[s];
    if (c >= 0) {
      ++located;
      if (carriers[s] != 0) broken("shelf " + std::to_string(s) + " both stored and carried");
      if (cell_shelf_[static_cast<std::size_t>(c)] != static_cast<int>(s)) {
        broken("cell table disagrees with shelf " + std::to_string(s));
      }
    } else if (carriers[s] != 1) {
      broken("shelf " + std::to_string(s) + " is neither stored nor carried by one robot");
    }
    int expected_holder = kNoId;
    for (const RobotState& r : robots_) {
      if (r.carried_shelf == static_cast<int>(s) || r.target_shelf == static_cast<int>(s)) {
        expected_holder = r.id;
      }
    }
    if (shelf_holder_[s] != expected_holder) broken("holder of shelf " + std::to_string(s));
  }

  std::size_t reserved = 0;
  std::vector<int> free(layout.zone_count(), 0);
  for (std::size_t c = 0; c < cell_shelf_.size(); ++c) {
    if (cell_shelf_[c] >= 0 && shelf_cell_[static_cast<std::size_t>(cell_shelf_[c])] != static_cast<int>(c)) {
      broken("stale cell entry");
    }
    if (cell_reserved_[c] >= 0) {
      ++reserved;
      if (cell_shelf_[c] >= 0) broken("reserved cell is occupied");
      const bool owned = std::any_of(robots_.begin(), robots_.end(), [&](const RobotState& r) {
        return r.reserved_cell == static_cast<int>(c) && r.carried_shelf == cell_reserved_[c];
      });
      if (!owned) broken("reservation without a storing robot");
    }
    const auto zone = layout.zone_of(layout.position(c));
    if (zone && cell_shelf_[c] < 0 && cell_reserved_[c] < 0) ++free[static_cast<std::size_t>(*zone)];
  }
  if (free != zone_free_) broken("zone free counts drifted");
  const std::size_t total_free = std::accumulate(free.begin(), free.end(), std::size_t{0});
  if (total_free + located + reserved != layout.storage_cells().size()) {
    broken("free + stored + reserved != storage cells");
  }

  std::vector<int> inbound(layout.zone_count(), 0);
  for (const RobotState& r : robots_) {
    if (r.target_shelf == kNoId) continue;
    const auto cell = layout.position(static_cast<std::size_t>(shelf_cell_[static_cast<std::size_t>(r.target_shelf)]));
    ++inbound[static_cast<std::size_t>(*layout.zone_of(cell))];
  }
  if (inbound != inbound_) broken("inbound robot counts drifted");

  for (const RobotId id : station_queue_) {
    if (robots_[static_cast<std::size_t>(id)].phase != RobotPhase::kQueued) broken("queue phase");
  }
  if (picking_ != kNoId && robots_[static_cast<std::size_t>(picking_)].phase != RobotPhase::kPicking) {
    broken("picking phase");
  }
  for (const Event& e : events_) {
    if (e.time < clock_) broken("event scheduled in the past");
  }
}

EpisodeMetrics run_episode(std::shared_ptr<const Layout> layout,
                           std::shared_ptr<const std::vector<Order>> orders, std::size_t shelves,
                           StoragePolicy& policy, const SimConfig& config, std::uint64_t seed) {
  Simulator sim(std::move(layout), std::move(orders), shelves, config, seed);
  while (const Decision* d = sim.next_decision()) {
    const Decision decision = *d;
    CycleRecord rec;
    if (decision.opportunistic) {
      policy.on_opportunistic(sim, decision);
      rec = sim.apply_opportunistic();
    } else {
      rec = sim.apply(policy.choose(sim, decision));
    }
    policy.on_cycle(rec);
  }
  return sim.metrics();
}

void write_trace_csv(std::ostream& out, std::span<const CycleRecord> trace) {
  out << "clock,robot,shelf,zone,travel_seconds,opportunistic\n";
  out << std::setprecision(10);
  for (const CycleRecord& r : trace) {
    out << r.clock << ',' << r.robot << ',' << r.shelf << ',' << r.zone << ',' << r.travel << ','
        << (r.opportunistic ? 1 : 0) << '\n';
  }
}

}  // namespace rmfs
