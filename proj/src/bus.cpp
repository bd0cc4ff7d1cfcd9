// bus.cpp — grant arbitration, chunked data-channel scheduling, B handshakes
#include "commsim/bus.hpp"

#include <algorithm>

namespace commsim {

namespace {

enum : uint32_t {
  TAG_ARB = 0,
  TAG_DATA = 1,
  TAG_ARRIVE = 2,   ///< request reaches the DRAM queue
  TAG_CHUNK = 3,    ///< last beat of a scheduled chunk crossed
  TAG_BACK = 4,     ///< write B acknowledgment
  TAG_WPROG = 5,    ///< cumulative write beats visible at the DRAM controller
};

constexpr cycle_t kNever = ~cycle_t(0);

// args for TAG_CHUNK / TAG_WPROG: txn id | final flag | 16-bit beat value
uint64_t pack(uint64_t txn, bool final_chunk, uint32_t value) {
  return (txn << 17) | (uint64_t(final_chunk) << 16) | value;
}

}  // namespace

const char* to_string(ProtocolPhase p) {
  switch (p) {
    case ProtocolPhase::BegReq: return "BEG_REQ";
    case ProtocolPhase::EndReq: return "END_REQ";
    case ProtocolPhase::BegDat: return "BEG_DAT";
    case ProtocolPhase::EndDat: return "END_DAT";
    case ProtocolPhase::BegRsp: return "BEG_RSP";
    default: return "END_RSP";
  }
}

BusModel::BusModel(EventQueue& q, const BusConfig& bus_cfg,
                   const DramConfig& dram_cfg, DramModel& dram,
                   uint32_t num_dmacs, BusListener* listener,
                   bool collect_trace)
    : q_(q),
      bus_(bus_cfg),
      dram_cfg_(dram_cfg),
      dram_(dram),
      listener_(listener),
      collect_trace_(collect_trace) {
  bus_.validate();
  lanes_.resize(num_dmacs);
}

void BusModel::record(cycle_t cycle, uint64_t txn, ProtocolPhase phase,
                      uint32_t beat) {
  if (collect_trace_) trace_.push_back(PhaseRecord{cycle, txn, phase, beat});
}

bool BusModel::dmac_idle(uint8_t dmac) const {
  const Lane& L = lanes_[dmac];
  return L.pending.empty() && L.in_flight == 0;
}

bool BusModel::all_idle() const {
  for (uint8_t d = 0; d < lanes_.size(); ++d)
    if (!dmac_idle(d)) return false;
  return true;
}

// ============================================================================
// Address channel
// ============================================================================

void BusModel::push_burst(uint8_t dmac, const BurstRequest& req,
                          uint64_t cookie) {
  if (dmac >= lanes_.size()) throw ConfigError("push_burst: unknown DMAC");
  lanes_[dmac].pending.emplace_back(req, cookie);
  arm_arb(std::max(q_.now(), addr_free_));
}

uint64_t BusModel::issue(const BurstRequest& req, uint64_t cookie) {
  if (req.dmac >= lanes_.size()) throw ConfigError("issue: unknown DMAC");
  Lane& L = lanes_[req.dmac];
  if (L.in_flight >= bus_.max_outstanding)
    throw IssueRejected("outstanding window full");
  if (!dram_.try_reserve(req)) throw IssueRejected("bank queue saturated");
  return grant_burst(req.dmac, req, cookie, std::max(q_.now(), addr_free_));
}

uint64_t BusModel::grant_burst(uint8_t dmac, const BurstRequest& req,
                               uint64_t cookie, cycle_t t) {
  Lane& L = lanes_[dmac];
  if (L.in_flight >= bus_.max_outstanding) violations_++;
  const uint64_t id = next_txn_++;

  Txn x;
  x.id = id;
  x.cookie = cookie;
  x.dmac = dmac;
  x.is_write = req.direction == Dir::Write;
  x.beats = req.beats;
  x.req = req;
  record(t, id, ProtocolPhase::BegReq, 0);
  record(t + 1, id, ProtocolPhase::EndReq, 0);

  L.in_flight++;
  L.grants++;
  L.gap_ok = t + 1 + bus_.inter_request_gap;
  L.order.push_back(id);
  addr_free_ = t + 1;

  x.live_events++;
  q_.schedule_at(t + 1 + bus_.request_latency, PRIO_BUS, this, TAG_ARRIVE, id);
  if (x.is_write) {
    // the whole payload is on-chip already; beats may follow END_REQ directly
    x.segs.push_back(Segment{0, req.beats, t + 2, 0});
  }
  txns_.emplace(id, std::move(x));
  if (txns_.at(id).is_write)
    arm_data(std::max({q_.now(), chan_free_, t + 2}));
  return id;
}

void BusModel::arm_arb(cycle_t t) {
  if (t >= arb_at_) return;
  arb_at_ = t;
  q_.schedule_at(t, PRIO_BUS, this, TAG_ARB);
}

void BusModel::arb_kick() {
  const cycle_t t = q_.now();
  if (t < addr_free_) {
    arm_arb(addr_free_);
    return;
  }
  int pick = -1;
  cycle_t wait = kNever;
  const uint32_t n = uint32_t(lanes_.size());
  for (uint32_t off = 0; off < n; ++off) {
    const uint32_t d = (arb_rr_ + off) % n;
    Lane& L = lanes_[d];
    if (L.pending.empty()) continue;
    if (L.in_flight >= bus_.max_outstanding) continue;  // wakes on completion
    if (t < L.gap_ok) {
      wait = std::min(wait, L.gap_ok);
      continue;
    }
    if (!dram_.try_reserve(L.pending.front().first))
      continue;  // wakes on unit_dequeued
    pick = int(d);
    break;
  }
  if (pick >= 0) {
    Lane& L = lanes_[pick];
    auto [req, cookie] = L.pending.front();
    L.pending.pop_front();
    grant_burst(uint8_t(pick), req, cookie, t);
    arb_rr_ = (uint32_t(pick) + 1) % n;
    for (const Lane& l : lanes_)
      if (!l.pending.empty()) {
        arm_arb(t + 1);
        break;
      }
  } else if (wait != kNever) {
    arm_arb(wait);
  }
}

// ============================================================================
// Data channel
// ============================================================================

void BusModel::arm_data(cycle_t t) {
  if (t >= data_at_) return;
  data_at_ = t;
  q_.schedule_at(t, PRIO_BUS, this, TAG_DATA);
}

BusModel::Txn* BusModel::head_txn(Lane& lane) {
  if (lane.order.empty()) return nullptr;
  return &txns_.at(lane.order.front());
}

void BusModel::data_kick() {
  const cycle_t t = q_.now();
  if (t < chan_free_) {
    arm_data(chan_free_);
    return;
  }
  int pick = -1;
  cycle_t wait = kNever;
  const uint32_t n = uint32_t(lanes_.size());
  for (uint32_t off = 0; off < n; ++off) {
    const uint32_t d = (data_rr_ + off) % n;
    Txn* x = head_txn(lanes_[d]);
    if (!x || x->segs.empty()) continue;
    const cycle_t base = x->segs.front().base;
    if (base <= t) {
      pick = int(d);
      break;
    }
    wait = std::min(wait, base);
  }
  if (pick < 0) {
    if (wait != kNever) arm_data(wait);
    return;
  }

  Lane& L = lanes_[pick];
  Txn& x = *head_txn(L);
  const Segment sg = x.segs.front();
  x.segs.pop_front();

  // beat j crosses at max(s + j, avail(j)); both curves are nondecreasing so
  // the last beat lands at max(s + n - 1, avail(n - 1))
  const cycle_t s = t;
  auto avail = [&](uint32_t j) -> cycle_t {
    if (sg.curve_n == 0) return sg.base;
    return sg.base +
           (cycle_t(j) * dram_cfg_.t_burst + sg.curve_n - 1) / sg.curve_n;
  };
  const cycle_t last = std::max<cycle_t>(s + sg.n - 1, avail(sg.n - 1));
  chan_free_ = last + 1;

  if (collect_trace_) {
    for (uint32_t j = 0; j < sg.n; ++j) {
      const cycle_t c = std::max<cycle_t>(s + j, avail(j));
      record(c, x.id, x.is_write ? ProtocolPhase::BegDat : ProtocolPhase::BegRsp,
             sg.beat_lo + j);
      record(c, x.id, x.is_write ? ProtocolPhase::EndDat : ProtocolPhase::EndRsp,
             sg.beat_lo + j);
    }
  }

  x.delivered += sg.n;
  const bool final_chunk = x.delivered == x.beats;
  if (final_chunk) L.order.pop_front();

  if (x.is_write) {
    // expose payload progress at DRAM-column granularity so write column
    // commands become eligible as their beats land
    const uint32_t cum0 = x.delivered - sg.n;
    uint32_t k = dram_cfg_.dram_burst_beats - cum0 % dram_cfg_.dram_burst_beats;
    for (; k < sg.n; k += dram_cfg_.dram_burst_beats) {
      x.live_events++;
      q_.schedule_at(s + k - 1 + bus_.request_latency, PRIO_BUS, this,
                     TAG_WPROG, pack(x.id, false, cum0 + k));
    }
    x.live_events++;
    q_.schedule_at(last + bus_.request_latency, PRIO_BUS, this, TAG_WPROG,
                   pack(x.id, false, x.delivered));
  }

  x.live_events++;
  q_.schedule_at(last, PRIO_BUS, this, TAG_CHUNK,
                 pack(x.id, final_chunk, sg.n));

  data_rr_ = (uint32_t(pick) + 1) % n;
  for (uint32_t d = 0; d < n; ++d) {
    Txn* h = head_txn(lanes_[d]);
    if (h && !h->segs.empty()) {
      arm_data(chan_free_);
      break;
    }
  }
}

// ============================================================================
// DRAM callbacks
// ============================================================================

void BusModel::read_col_issued(uint64_t req_id, uint32_t beat_offset,
                               uint32_t beats, cycle_t col_cycle) {
  auto it = req_to_txn_.find(req_id);
  if (it == req_to_txn_.end()) {
    violations_++;
    return;
  }
  Txn& x = txns_.at(it->second);
  x.segs.push_back(
      Segment{beat_offset, beats, col_cycle + dram_cfg_.t_cl, beats});
  arm_data(std::max({q_.now(), chan_free_, col_cycle + dram_cfg_.t_cl}));
}

void BusModel::request_done(uint64_t, cycle_t) {}

void BusModel::unit_dequeued() {
  arm_arb(std::max(q_.now(), addr_free_));
}

// ============================================================================
// Event dispatch
// ============================================================================

void BusModel::on_event(uint32_t tag, uint64_t arg) {
  switch (tag) {
    case TAG_ARB:
      if (q_.now() >= arb_at_) arb_at_ = kNever;
      arb_kick();
      break;
    case TAG_DATA:
      if (q_.now() >= data_at_) data_at_ = kNever;
      data_kick();
      break;
    case TAG_ARRIVE: {
      Txn& x = txns_.at(arg);
      // map first: enqueue can issue a row-hit column (and call back) inline
      x.dram_req = dram_.next_request_id();
      req_to_txn_[x.dram_req] = x.id;
      if (dram_.enqueue(x.req, /*write_data_ready=*/false) != x.dram_req)
        violations_++;
      x.live_events--;
      break;
    }
    case TAG_CHUNK: {
      const uint64_t id = arg >> 17;
      const bool final_chunk = (arg >> 16) & 1;
      const uint32_t beats = arg & 0xFFFF;
      Txn& x = txns_.at(id);
      x.live_events--;
      lanes_[x.dmac].beats += beats;
      if (final_chunk) {
        if (x.is_write) {
          x.live_events++;
          q_.schedule_at(q_.now() + 1, PRIO_BUS, this, TAG_BACK, id);
        } else {
          finish(x, q_.now());
        }
      } else {
        maybe_erase(id);
      }
      break;
    }
    case TAG_BACK: {
      Txn& x = txns_.at(arg);
      x.live_events--;
      record(q_.now(), x.id, ProtocolPhase::BegRsp, 0);  // B acknowledgment
      record(q_.now(), x.id, ProtocolPhase::EndRsp, 0);
      finish(x, q_.now());
      break;
    }
    case TAG_WPROG: {
      const uint64_t id = arg >> 17;
      const uint32_t cum = arg & 0xFFFF;
      Txn& x = txns_.at(id);
      x.live_events--;
      if (x.dram_req != kNoReq) dram_.write_data_progress(x.dram_req, cum);
      maybe_erase(id);
      break;
    }
    default:
      break;
  }
}

void BusModel::finish(Txn& x, cycle_t cycle) {
  Lane& L = lanes_[x.dmac];
  if (L.in_flight == 0)
    violations_++;
  else
    L.in_flight--;
  x.finished = true;
  if (listener_) listener_->burst_complete(x.dmac, x.cookie, cycle);
  arm_arb(std::max(cycle, addr_free_));
  maybe_erase(x.id);
}

void BusModel::maybe_erase(uint64_t id) {
  auto it = txns_.find(id);
  if (it == txns_.end()) return;
  if (!it->second.finished || it->second.live_events != 0) return;
  if (it->second.dram_req != kNoReq) req_to_txn_.erase(it->second.dram_req);
  txns_.erase(it);
}

}  // namespace commsim
