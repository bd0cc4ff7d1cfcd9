// dram.hpp — bank-level DRAM timing model: FR-FCFS, open page, 4-time close
#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "commsim/events.hpp"
#include "commsim/memmap.hpp"
#include "commsim/params.hpp"
#include "commsim/types.hpp"

namespace commsim {

// ============================================================================
// Commands and bank state
// ============================================================================

struct DramCommand {
  enum Kind : uint8_t { ACT, RD, WR, PRE, REF };
  Kind kind;
  uint8_t bank;
  uint64_t row;
  uint32_t col;       ///< page-local element offset
  cycle_t cycle;
  uint8_t source_dmac;  ///< 255 for policy/refresh commands with no owner
};

const char* to_string(DramCommand::Kind k);

struct BankState {
  bool active = false;
  uint64_t row = 0;
  uint32_t cols_since_act = 0;
  cycle_t act_cycle = 0;      ///< last ACT issue (tRCD, tRC)
  cycle_t ready_at = 0;       ///< earliest next ACT (tRP / tRC)
  cycle_t col_end = 0;        ///< last column issue + tBURST (PRE legality)
};

/// Receives data-timing callbacks from the model.
struct DramListener {
  virtual ~DramListener() = default;
  /// A read column command issued at `col_cycle` covering request beats
  /// [beat_offset, beat_offset + beats).  First read data appears tCL later,
  /// the last beat tCL + tBURST after issue.
  virtual void read_col_issued(uint64_t req_id, uint32_t beat_offset,
                               uint32_t beats, cycle_t col_cycle) = 0;
  /// DRAM-side completion: last read beat returned / last write beat written.
  virtual void request_done(uint64_t req_id, cycle_t completion) = 0;
  /// A column unit left a bank queue (room freed; retry try_reserve).
  virtual void unit_dequeued() {}
};

// ============================================================================
// Model
// ============================================================================

class DramModel : public EventSink {
 public:
  DramModel(EventQueue& q, const DramConfig& cfg, DramListener* listener,
            bool collect_trace);

  void set_listener(DramListener* listener) { listener_ = listener; }

  /// Backpressure interface: reserve bank-queue room for a burst before
  /// launching it toward the controller.  False = caller must retry after
  /// a dequeue (subscribe via listener callbacks / re-kick).
  bool try_reserve(const BurstRequest& req);

  /// Burst arrives at the controller (queue.now()); splits into column units.
  /// `write_data_ready` marks write units eligible without bus feedback
  /// (standalone trace mode).
  uint64_t enqueue(const BurstRequest& req, bool write_data_ready = false);

  /// Id the next enqueue will return.  Callers that need the id inside
  /// enqueue-triggered callbacks (a row hit can issue a column command the
  /// same cycle) register it first.
  uint64_t next_request_id() const { return next_req_id_; }

  /// Bus reports cumulative write beats that have crossed the data channel.
  void write_data_progress(uint64_t req_id, uint32_t beats_delivered);

  /// Close any still-open pages (end-of-run closure so every ACT pairs with
  /// a PRE in the trace).
  void flush_open_pages();

  bool idle() const { return pending_units_ == 0; }

  const std::vector<DramCommand>& trace() const { return trace_; }
  DramCommandCount command_counts() const { return counts_; }
  uint64_t data_beats_returned() const { return beats_returned_; }
  uint64_t violations() const { return violations_; }

  /// FR-FCFS choice at `cycle` given current queues/bank state: the column
  /// unit that would issue next, preferring row hits then oldest arrival.
  /// Returns the owning request id; nothing when no unit is timing-ready.
  std::optional<uint64_t> fr_fcfs_pick(cycle_t cycle) const;

  void on_event(uint32_t tag, uint64_t arg) override;

 private:
  struct ColUnit {
    uint64_t req_id;
    addr_t addr;
    uint32_t beats;
    uint32_t beat_offset;   ///< first beat index within the request
    bool is_write;
    bool last_of_request;
    uint64_t arrival_seq;
    uint8_t dmac;
    uint32_t write_beats_needed;  ///< eligibility threshold for writes
  };
  struct Request {
    uint32_t write_beats_seen = 0;
  };

  void kick();                 ///< run the scheduler at now()
  void apply_refreshes(cycle_t t);  ///< lazy catch-up of overdue refreshes
  bool issue_one(cycle_t t);   ///< one command if legal at t
  cycle_t next_action_after(cycle_t t) const;
  void emit(DramCommand::Kind kind, uint32_t bank, uint64_t row, uint32_t col,
            cycle_t cycle, uint8_t dmac);
  void precharge(uint32_t bank, cycle_t t, uint8_t dmac);
  cycle_t col_bus_ready(Dir dir, cycle_t t) const;
  bool unit_eligible(const ColUnit& u) const;

  EventQueue& q_;
  DramConfig cfg_;
  DramListener* listener_;
  bool collect_trace_;

  std::vector<BankState> banks_;
  std::vector<std::vector<ColUnit>> queues_;  ///< per-bank, arrival order
  std::vector<uint32_t> reserved_;            ///< per-bank reserved units
  std::unordered_map<uint64_t, Request> requests_;

  cycle_t data_bus_free_ = 0;
  Dir last_dir_ = Dir::Read;
  bool dir_known_ = false;

  cycle_t refresh_until_ = 0;
  cycle_t next_refresh_ = 0;
  uint8_t last_col_dmac_ = 255;

  uint64_t next_req_id_ = 0;
  uint64_t arrival_seq_ = 0;
  uint64_t pending_units_ = 0;
  cycle_t next_try_ = ~cycle_t(0);

  std::vector<DramCommand> trace_;
  DramCommandCount counts_;
  uint64_t beats_returned_ = 0;
  uint64_t violations_ = 0;
};

// ============================================================================
// Standalone service harness
// ============================================================================

struct ServiceResult {
  std::vector<cycle_t> completion;  ///< per input request
  std::vector<DramCommand> trace;
  DramCommandCount counts;
};

/// Runs the model alone on a fixed arrival schedule (no bus feedback; write
/// data assumed present).  Read completion = last data beat returned
/// (tCL + tBURST after the request's last column command).
ServiceResult service_trace(
    const std::vector<std::pair<BurstRequest, cycle_t>>& requests,
    const DramConfig& cfg);

}  // namespace commsim
