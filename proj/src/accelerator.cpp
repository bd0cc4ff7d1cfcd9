// accelerator.cpp — DMA command construction and the pass pipeline controller
#include "commsim/accelerator.hpp"

#include <algorithm>

namespace commsim {

namespace {

enum : uint32_t {
  TAG_LOAD_IFM = 0,
  TAG_LOAD_W = 1,
  TAG_STORE = 2,
  TAG_COMPUTE_DONE = 3,
};

}  // namespace

const char* dmac_name(uint8_t dmac) {
  switch (dmac) {
    case DMAC_IFM: return "IFM";
    case DMAC_W: return "W";
    default: return "OFM";
  }
}

uint64_t DmaCommand::total_beats() const {
  uint64_t n = 0;
  for (const BurstRequest& b : bursts) n += b.beats;
  return n;
}

// ============================================================================
// Command building
// ============================================================================

std::vector<BurstRequest> pass_load_bursts(DataKind kind,
                                           const LayerShape& layer,
                                           const MemLayout& map,
                                           const PassPlan& plan, uint64_t pass,
                                           const BusConfig& bus,
                                           const DramConfig& dram) {
  const TileOrigin o = plan.origin_of(pass);
  std::vector<BurstRequest> out;
  for (const ContiguousDataset& ds :
       contiguous_datasets(kind, layer, map, plan, o)) {
    auto bursts = split_into_bursts(ds, bus.max_burst_beats, dram.page_elements);
    out.insert(out.end(), bursts.begin(), bursts.end());
  }
  return out;
}

std::vector<BurstRequest> group_store_bursts(const LayerShape& layer,
                                             const MemLayout& map,
                                             const PassPlan& plan,
                                             uint64_t group,
                                             const BusConfig& bus,
                                             const DramConfig& dram) {
  const uint64_t closing = group * plan.csteps + plan.csteps - 1;
  const TileOrigin o = plan.origin_of(closing);
  std::vector<BurstRequest> out;
  for (const ContiguousDataset& ds :
       contiguous_datasets(DataKind::Ofm, layer, map, plan, o)) {
    auto bursts = split_into_bursts(ds, bus.max_burst_beats, dram.page_elements);
    out.insert(out.end(), bursts.begin(), bursts.end());
  }
  return out;
}

std::array<std::optional<DmaCommand>, NUM_DMACS> build_pass_commands(
    const LayerShape& layer, const TileConfig& tile, uint64_t pass_index,
    const BusConfig& bus, const DramConfig& dram) {
  const PassPlan plan = plan_passes(layer, tile);
  if (pass_index >= plan.pass_count)
    throw ConfigError("build_pass_commands: pass_index out of range");
  const MemLayout map = MemLayout::build(layer, dram);

  std::array<std::optional<DmaCommand>, NUM_DMACS> out;
  out[DMAC_IFM] = DmaCommand{
      DMAC_IFM, pass_index,
      pass_load_bursts(DataKind::Ifm, layer, map, plan, pass_index, bus, dram)};
  out[DMAC_W] = DmaCommand{
      DMAC_W, pass_index,
      pass_load_bursts(DataKind::Weight, layer, map, plan, pass_index, bus,
                       dram)};
  if (plan.closes_store_group(pass_index)) {
    out[DMAC_OFM] = DmaCommand{
        DMAC_OFM, pass_index,
        group_store_bursts(layer, map, plan, plan.store_group_of(pass_index),
                           bus, dram)};
  }
  return out;
}

// ============================================================================
// Bandwidth
// ============================================================================

BandwidthReport measure_bandwidth(const PassTimeline& t) {
  BandwidthReport r;
  uint64_t beats = 0;
  cycle_t span = 0;
  for (const DmaInterval& iv : t.intervals) {
    if (iv.end <= iv.start) continue;  // zero-length: dropped
    uint64_t n = 0;
    for (uint64_t b : iv.beats) n += b;
    r.per_interval.push_back(double(n) / double(iv.end - iv.start));
    beats += n;
    span += iv.end - iv.start;
  }
  r.aggregate = span ? double(beats) / double(span) : 0.0;
  return r;
}

// ============================================================================
// Pass controller
// ============================================================================

PassController::PassController(EventQueue& q, const LayerShape& layer,
                               const PassPlan& plan, const MemLayout& map,
                               const AccelConfig& accel,
                               const BusConfig& bus_cfg,
                               const DramConfig& dram_cfg, BusModel& bus,
                               uint64_t pass_detail_limit)
    : q_(q),
      layer_(layer),
      plan_(plan),
      map_(map),
      accel_(accel),
      bus_cfg_(bus_cfg),
      dram_cfg_(dram_cfg),
      bus_(bus),
      detail_limit_(pass_detail_limit) {
  store_drained_.assign(plan_.store_group_count(), 0);
  timelines_.resize(std::min<uint64_t>(plan_.pass_count, detail_limit_));
  for (uint64_t p = 0; p < timelines_.size(); ++p)
    timelines_[p].pass_index = p;
}

PassTimeline* PassController::row(uint64_t pass) {
  return pass < timelines_.size() ? &timelines_[pass] : nullptr;
}

std::array<uint64_t, NUM_DMACS> PassController::beats_by_dmac() const {
  std::array<uint64_t, NUM_DMACS> out{};
  for (uint8_t d = 0; d < NUM_DMACS; ++d) out[d] = bus_.beats_delivered(d);
  return out;
}

DmacState PassController::dmac_state(uint8_t dmac) const {
  DmacState s;
  s.in_flight = bus_.in_flight(dmac);
  s.completed_beats = bus_.beats_delivered(dmac);
  if (!bus_.dmac_idle(dmac))
    s.status = DmacState::Running;
  else
    s.status = cmds_started_[dmac] > 0 ? DmacState::Done : DmacState::Idle;
  return s;
}

void PassController::start() {
  window_ = 0;
  open_window(0);
}

void PassController::open_window(cycle_t t) {
  window_start_ = t;
  load_ifm_done_ = load_w_done_ = false;
  ifm_done_at_ = w_done_at_ = 0;
  q_.schedule_at(t + accel_.setup_cycles, PRIO_CTRL, this, TAG_LOAD_IFM,
                 window_);
  q_.schedule_at(t + 2 * cycle_t(accel_.setup_cycles), PRIO_CTRL, this,
                 TAG_LOAD_W, window_);
  if (window_ >= 1) {
    compute_done_ = false;
    start_compute(t);
  } else {
    compute_done_ = true;
  }
}

void PassController::start_compute(cycle_t t) {
  const uint64_t cp = window_ - 1;  // pass whose buffers just switched in
  const uint64_t group = plan_.store_group_of(cp);
  if (cp % plan_.csteps == 0 && group >= 2 && !store_drained_[group - 2]) {
    compute_waiting_ = true;  // output buffer of group-2 still draining
    return;
  }
  compute_waiting_ = false;
  if (last_loaded_pass_ + 1 < int64_t(window_))
    violations_++;  // buffer not loaded yet
  compute_running_ = true;
  compute_started_at_ = t;
  if (PassTimeline* r = row(cp)) r->compute_start = t;
  const cycle_t dur = plan_.compute_cycles_at(plan_.origin_of(cp));
  q_.schedule_at(t + dur, PRIO_CTRL, this, TAG_COMPUTE_DONE, cp);
}

void PassController::launch(uint8_t dmac, uint64_t key,
                            std::vector<BurstRequest> bursts, cycle_t t) {
  const uint64_t cookie = commands_.size();
  commands_.push_back(Command{dmac, key, bursts.size(), 0});
  cmds_started_[dmac]++;
  if (bursts.empty()) {  // degenerate command: complete immediately
    burst_complete(dmac, cookie, t);
    return;
  }
  mark_interval_edge(t);
  active_mask_ |= uint8_t(1u << dmac);
  for (const BurstRequest& b : bursts) bus_.push_burst(dmac, b, cookie);
}

void PassController::mark_interval_edge(cycle_t t) {
  PassTimeline* r =
      row(std::min<uint64_t>(window_, plan_.pass_count - 1));
  if (r && t > interval_start_) {
    DmaInterval iv;
    iv.start = interval_start_;
    iv.end = t;
    iv.active_mask = active_mask_;
    for (uint8_t d = 0; d < NUM_DMACS; ++d)
      iv.beats[d] = bus_.beats_delivered(d) - beat_mark_[d];
    cur_intervals_.push_back(iv);
  }
  interval_start_ = t;
  for (uint8_t d = 0; d < NUM_DMACS; ++d) beat_mark_[d] = bus_.beats_delivered(d);
}

void PassController::close_pass_row(uint64_t pass, cycle_t window_end) {
  mark_interval_edge(window_end);
  if (PassTimeline* r = row(pass)) {
    r->comm_start = window_start_;
    r->comm_end = std::max(ifm_done_at_, w_done_at_);
    r->intervals.insert(r->intervals.end(), cur_intervals_.begin(),
                        cur_intervals_.end());
  }
  cur_intervals_.clear();
}

void PassController::burst_complete(uint8_t dmac, uint64_t cookie,
                                    cycle_t cycle) {
  Command& c = commands_[cookie];
  if (c.remaining == 0) {
    violations_++;
    return;
  }
  if (--c.remaining > 0) return;
  c.done_at = cycle;

  if (dmac == DMAC_IFM && c.key == window_) {
    load_ifm_done_ = true;
    ifm_done_at_ = cycle;
    if (load_w_done_) last_loaded_pass_ = int64_t(window_);
  } else if (dmac == DMAC_W && c.key == window_) {
    load_w_done_ = true;
    w_done_at_ = cycle;
    if (load_ifm_done_) last_loaded_pass_ = int64_t(window_);
  } else if (dmac == DMAC_OFM) {
    store_drained_[c.key] = 1;
    stores_outstanding_--;
  }

  if (bus_.dmac_idle(dmac)) {
    mark_interval_edge(cycle);
    active_mask_ &= uint8_t(~(1u << dmac));
  }
  if (dmac == DMAC_OFM && compute_waiting_) start_compute(cycle);
  try_switch(cycle);
  finish_if_drained(cycle);
}

void PassController::on_event(uint32_t tag, uint64_t arg) {
  const cycle_t t = q_.now();
  switch (tag) {
    case TAG_LOAD_IFM:
      launch(DMAC_IFM, arg,
             pass_load_bursts(DataKind::Ifm, layer_, map_, plan_, arg,
                              bus_cfg_, dram_cfg_),
             t);
      break;
    case TAG_LOAD_W:
      launch(DMAC_W, arg,
             pass_load_bursts(DataKind::Weight, layer_, map_, plan_, arg,
                              bus_cfg_, dram_cfg_),
             t);
      break;
    case TAG_STORE:
      stores_outstanding_++;
      stores_launched_++;
      launch(DMAC_OFM, arg,
             group_store_bursts(layer_, map_, plan_, arg, bus_cfg_, dram_cfg_),
             t);
      break;
    case TAG_COMPUTE_DONE: {
      compute_running_ = false;
      compute_done_ = true;
      if (PassTimeline* r = row(arg)) r->compute_end = t;
      if (plan_.closes_store_group(arg))
        q_.schedule_at(t + accel_.setup_cycles, PRIO_CTRL, this, TAG_STORE,
                       plan_.store_group_of(arg));
      try_switch(t);
      finish_if_drained(t);
      break;
    }
    default:
      break;
  }
}

void PassController::try_switch(cycle_t t) {
  if (window_ >= plan_.pass_count) return;  // final compute/drain phase
  if (!(load_ifm_done_ && load_w_done_ && compute_done_)) return;
  close_pass_row(window_, t);
  window_++;
  if (window_ < plan_.pass_count) {
    open_window(t);
  } else {
    // no more loads; run the last pass's compute, then drain stores
    window_start_ = t;
    compute_done_ = false;
    start_compute(t);
  }
}

void PassController::finish_if_drained(cycle_t t) {
  if (finished_) return;
  if (window_ < plan_.pass_count) return;
  if (compute_running_ || compute_waiting_ || !compute_done_) return;
  if (stores_launched_ < plan_.store_group_count()) return;
  if (stores_outstanding_ > 0) return;
  if (!bus_.all_idle()) return;
  mark_interval_edge(t);
  if (PassTimeline* r = row(plan_.pass_count - 1)) {
    r->intervals.insert(r->intervals.end(), cur_intervals_.begin(),
                        cur_intervals_.end());
  }
  cur_intervals_.clear();
  finished_ = true;
  end_cycle_ = t;
}

}  // namespace commsim
