// bus.hpp — burst protocol layer: grants, outstanding windows, shared data path
#pragma once

#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include "commsim/dram.hpp"
#include "commsim/events.hpp"
#include "commsim/memmap.hpp"
#include "commsim/params.hpp"
#include "commsim/types.hpp"

namespace commsim {

enum class ProtocolPhase : uint8_t {
  BegReq,
  EndReq,
  BegDat,
  EndDat,
  BegRsp,
  EndRsp,
};

const char* to_string(ProtocolPhase p);

struct PhaseRecord {
  cycle_t cycle;
  uint64_t txn;
  ProtocolPhase phase;
  uint32_t beat;
};

/// Completion callbacks toward the DMAC layer.
struct BusListener {
  virtual ~BusListener() = default;
  /// Read: last data beat delivered.  Write: B acknowledgment (last beat + 1).
  virtual void burst_complete(uint8_t dmac, uint64_t cookie, cycle_t cycle) = 0;
};

/// Protocol model.  The address channel grants one burst per cycle,
/// round-robin over DMACs that are under their outstanding window and whose
/// head burst fits the target bank queue.  The data channel carries at most
/// one beat per cycle, shared by read responses and write data; beats of one
/// DMAC's transactions never interleave (delivery follows grant order).
///
/// Beats are scheduled a chunk (one DRAM column's worth, or one write burst)
/// at a time with closed-form per-beat cycles, so the event count scales with
/// column commands rather than beats.
class BusModel : public EventSink, public DramListener {
 public:
  BusModel(EventQueue& q, const BusConfig& bus_cfg, const DramConfig& dram_cfg,
           DramModel& dram, uint32_t num_dmacs, BusListener* listener,
           bool collect_trace);

  void set_listener(BusListener* listener) { listener_ = listener; }

  /// Queue a burst for arbitration.  `cookie` comes back on burst_complete.
  void push_burst(uint8_t dmac, const BurstRequest& req, uint64_t cookie);

  /// Immediate issue path (no arbitration queue): grants at now if the
  /// address channel is free this cycle, later otherwise.  Throws
  /// IssueRejected when the DMAC's outstanding window is full or the target
  /// bank queue cannot take the burst.
  uint64_t issue(const BurstRequest& req, uint64_t cookie = 0);

  bool dmac_idle(uint8_t dmac) const;
  bool all_idle() const;

  uint32_t in_flight(uint8_t dmac) const { return lanes_[dmac].in_flight; }
  uint64_t grant_count(uint8_t dmac) const { return lanes_[dmac].grants; }
  uint64_t beats_delivered(uint8_t dmac) const { return lanes_[dmac].beats; }
  uint64_t violations() const { return violations_; }
  const std::vector<PhaseRecord>& trace() const { return trace_; }

  // DramListener
  void read_col_issued(uint64_t req_id, uint32_t beat_offset, uint32_t beats,
                       cycle_t col_cycle) override;
  void request_done(uint64_t req_id, cycle_t completion) override;
  void unit_dequeued() override;

  void on_event(uint32_t tag, uint64_t arg) override;

 private:
  /// One deliverable chunk of data beats.  Read chunks follow the DRAM column
  /// availability curve avail(j) = base + ceil(j*tBURST/curve_n); write
  /// chunks are flat (curve_n == 0): every beat ready at base.
  struct Segment {
    uint32_t beat_lo;
    uint32_t n;
    cycle_t base;
    uint32_t curve_n;
  };
  struct Txn {
    uint64_t id;
    uint64_t cookie;
    uint8_t dmac;
    bool is_write;
    uint32_t beats;
    uint32_t delivered = 0;          ///< beats scheduled across the channel
    uint64_t dram_req = kNoReq;      ///< set once the request reaches DRAM
    uint32_t live_events = 0;        ///< scheduled events still holding this id
    bool finished = false;
    BurstRequest req;
    std::deque<Segment> segs;
  };
  struct Lane {
    std::deque<std::pair<BurstRequest, uint64_t>> pending;  ///< burst, cookie
    std::deque<uint64_t> order;      ///< granted txns, delivery order
    uint32_t in_flight = 0;
    cycle_t gap_ok = 0;              ///< inter_request_gap earliest next grant
    uint64_t grants = 0;
    uint64_t beats = 0;
  };

  static constexpr uint64_t kNoReq = ~uint64_t(0);

  uint64_t grant_burst(uint8_t dmac, const BurstRequest& req, uint64_t cookie,
                       cycle_t t);
  void arb_kick();
  void data_kick();
  void arm_arb(cycle_t t);
  void arm_data(cycle_t t);
  void record(cycle_t cycle, uint64_t txn, ProtocolPhase phase, uint32_t beat);
  Txn* head_txn(Lane& lane);
  void finish(Txn& x, cycle_t cycle);
  void maybe_erase(uint64_t id);

  EventQueue& q_;
  BusConfig bus_;
  DramConfig dram_cfg_;
  DramModel& dram_;
  BusListener* listener_;
  bool collect_trace_;

  std::vector<Lane> lanes_;
  std::unordered_map<uint64_t, Txn> txns_;
  std::unordered_map<uint64_t, uint64_t> req_to_txn_;

  cycle_t addr_free_ = 0;   ///< next cycle the address channel can grant
  cycle_t chan_free_ = 0;   ///< next cycle the data channel can carry a beat
  uint32_t arb_rr_ = 0;
  uint32_t data_rr_ = 0;
  cycle_t arb_at_ = ~cycle_t(0);   ///< earliest armed arbitration kick
  cycle_t data_at_ = ~cycle_t(0);  ///< earliest armed data kick
  uint64_t next_txn_ = 1;

  std::vector<PhaseRecord> trace_;
  uint64_t violations_ = 0;
};

}  // namespace commsim
