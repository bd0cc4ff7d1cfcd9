// sim_engine.hpp — top-level simulation orchestration and trace export
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "commsim/accelerator.hpp"
#include "commsim/bus.hpp"
#include "commsim/dram.hpp"
#include "commsim/params.hpp"
#include "commsim/types.hpp"
#include "commsim/workload.hpp"

namespace commsim {

/// One row of the per-interval bandwidth table.
struct IntervalBandwidthRow {
  uint64_t pass = 0;
  uint32_t interval = 0;
  cycle_t start = 0;
  cycle_t end = 0;
  uint8_t active_mask = 0;
  double bandwidth = 0.0;  ///< elements/cycle across the shared channel
  std::array<uint64_t, NUM_DMACS> beats{};
};

struct SimReport {
  cycle_t total_cycles = 0;
  double performance = 0.0;  ///< MAC ops/cycle (2 ops per MAC)
  uint64_t pass_count = 0;
  std::vector<PassTimeline> per_pass;  ///< first pass_detail_limit passes
  std::vector<IntervalBandwidthRow> per_interval_bandwidth;
  std::array<uint64_t, NUM_DMACS> beats{};
  DramCommandCount dram_commands;
  uint64_t violations = 0;

  bool traces_enabled = false;
  std::vector<DramCommand> dram_trace;
  std::vector<PhaseRecord> bus_trace;
};

/// Runs the full pass pipeline for one layer/tile pair.  Deterministic:
/// identical inputs produce identical reports.
SimReport simulate(const LayerShape& layer, const TileConfig& tile,
                   const BusConfig& bus, const DramConfig& dram,
                   const AccelConfig& accel, bool collect_traces = false,
                   uint64_t pass_detail_limit = 64);

enum class TraceKind : uint8_t { Dram, Bus, Passes };

/// Writes one trace stream (dram/bus: CSV, passes: JSON).  Throws
/// TraceUnavailable when the report was produced without traces.
void emit_trace(const SimReport& report, TraceKind kind,
                const std::string& path);

}  // namespace commsim
