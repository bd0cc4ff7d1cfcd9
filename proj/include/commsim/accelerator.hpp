// accelerator.hpp — DMACs, double-buffered pass pipeline, DMA intervals
#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "commsim/bus.hpp"
#include "commsim/events.hpp"
#include "commsim/memmap.hpp"
#include "commsim/params.hpp"
#include "commsim/types.hpp"
#include "commsim/workload.hpp"

namespace commsim {

// DMAC indices double as bus lane ids.
enum : uint8_t { DMAC_IFM = 0, DMAC_W = 1, DMAC_OFM = 2, NUM_DMACS = 3 };

const char* dmac_name(uint8_t dmac);

// ============================================================================
// DMA commands
// ============================================================================

/// One processor-core command to one DMAC: the burst list covering that
/// DMAC's datasets for a pass (loads) or a finished tile (stores).
struct DmaCommand {
  uint8_t dmac = DMAC_IFM;
  uint64_t pass_index = 0;  ///< load pass, or the pass whose compute produced
                            ///< the stored tile
  std::vector<BurstRequest> bursts;

  uint64_t total_beats() const;
};

/// Software-visible DMAC status snapshot.
struct DmacState {
  enum Status : uint8_t { Idle, Running, Done };
  Status status = Idle;
  uint32_t in_flight = 0;
  uint64_t completed_beats = 0;
};

/// Load commands for one pass plus, when this pass closes an output tile,
/// the store command for that tile (drained over the following passes by the
/// shared arbiter rather than by a per-pass quota).
std::array<std::optional<DmaCommand>, NUM_DMACS> build_pass_commands(
    const LayerShape& layer, const TileConfig& tile, uint64_t pass_index,
    const BusConfig& bus, const DramConfig& dram);

// Lower-level builders used by both build_pass_commands and the controller.
std::vector<BurstRequest> pass_load_bursts(DataKind kind,
                                           const LayerShape& layer,
                                           const MemLayout& map,
                                           const PassPlan& plan, uint64_t pass,
                                           const BusConfig& bus,
                                           const DramConfig& dram);
std::vector<BurstRequest> group_store_bursts(const LayerShape& layer,
                                             const MemLayout& map,
                                             const PassPlan& plan,
                                             uint64_t group,
                                             const BusConfig& bus,
                                             const DramConfig& dram);

// ============================================================================
// Pass timelines
// ============================================================================

/// A stretch of a pass window during which the set of running DMACs is
/// constant.  Boundaries fall on DMAC start/stop events.
struct DmaInterval {
  cycle_t start = 0;
  cycle_t end = 0;
  uint8_t active_mask = 0;  ///< bit d set = DMAC d running
  std::array<uint64_t, NUM_DMACS> beats{};  ///< delivered inside the interval
};

struct PassTimeline {
  uint64_t pass_index = 0;
  cycle_t comm_start = 0;     ///< window open (processor core takes over)
  cycle_t comm_end = 0;       ///< this pass's IFM and W commands all complete
  cycle_t compute_start = 0;  ///< MAC array on this pass's data (next window)
  cycle_t compute_end = 0;
  std::vector<DmaInterval> intervals;  ///< partition of the pass window
};

struct BandwidthReport {
  std::vector<double> per_interval;  ///< elements/cycle, zero-length dropped
  double aggregate = 0.0;            ///< whole-window elements/cycle
};

BandwidthReport measure_bandwidth(const PassTimeline& t);

// ============================================================================
// Pass controller
// ============================================================================

/// Sequences the double-buffered pass pipeline: window k loads pass k while
/// the MAC array computes pass k-1; the buffers switch when both finish.
/// Stores enter the arbiter as soon as their tile's compute retires (plus the
/// command-setup overhead) and drain at equal priority alongside the loads.
class PassController : public EventSink, public BusListener {
 public:
  PassController(EventQueue& q, const LayerShape& layer, const PassPlan& plan,
                 const MemLayout& map, const AccelConfig& accel,
                 const BusConfig& bus_cfg, const DramConfig& dram_cfg,
                 BusModel& bus, uint64_t pass_detail_limit);

  void start();

  bool finished() const { return finished_; }
  cycle_t end_cycle() const { return end_cycle_; }
  const std::vector<PassTimeline>& timelines() const { return timelines_; }
  uint64_t violations() const { return violations_; }
  std::array<uint64_t, NUM_DMACS> beats_by_dmac() const;
  DmacState dmac_state(uint8_t dmac) const;

  // BusListener
  void burst_complete(uint8_t dmac, uint64_t cookie, cycle_t cycle) override;
  void on_event(uint32_t tag, uint64_t arg) override;

 private:
  struct Command {
    uint8_t dmac;
    uint64_t key;  ///< pass (loads) or store group (stores)
    uint64_t remaining;
    cycle_t done_at = 0;
  };

  PassTimeline* row(uint64_t pass);
  void open_window(cycle_t t);
  void try_switch(cycle_t t);
  void start_compute(cycle_t t);
  void launch(uint8_t dmac, uint64_t key, std::vector<BurstRequest> bursts,
              cycle_t t);
  void mark_interval_edge(cycle_t t);
  void close_pass_row(uint64_t pass, cycle_t window_end);
  void finish_if_drained(cycle_t t);

  EventQueue& q_;
  const LayerShape& layer_;
  const PassPlan& plan_;
  const MemLayout& map_;
  AccelConfig accel_;
  BusConfig bus_cfg_;
  DramConfig dram_cfg_;
  BusModel& bus_;
  uint64_t detail_limit_;

  // pipeline state
  uint64_t window_ = 0;          ///< pass being loaded
  cycle_t window_start_ = 0;
  bool load_ifm_done_ = false;
  bool load_w_done_ = false;
  cycle_t ifm_done_at_ = 0;
  cycle_t w_done_at_ = 0;
  int64_t last_loaded_pass_ = -1;
  bool compute_done_ = true;     ///< compute of window_-1 retired
  bool compute_running_ = false;
  bool compute_waiting_ = false; ///< gated on an output buffer still draining
  cycle_t compute_started_at_ = 0;

  std::vector<Command> commands_;
  std::vector<uint8_t> store_drained_;   ///< per store group
  uint64_t stores_outstanding_ = 0;
  uint64_t stores_launched_ = 0;
  std::array<uint64_t, NUM_DMACS> cmds_started_{};
  bool finished_ = false;
  cycle_t end_cycle_ = 0;

  // interval tracking
  uint8_t active_mask_ = 0;
  cycle_t interval_start_ = 0;
  std::array<uint64_t, NUM_DMACS> beat_mark_{};
  std::vector<DmaInterval> cur_intervals_;

  std::vector<PassTimeline> timelines_;
  uint64_t violations_ = 0;
};

}  // namespace commsim
