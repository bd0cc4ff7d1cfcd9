// memmap.hpp — DRAM data layout, contiguous datasets, burst splitting, and
// static DRAM command-count expansion
#pragma once

#include <cstdint>
#include <vector>

#include "commsim/params.hpp"
#include "commsim/types.hpp"
#include "commsim/workload.hpp"

namespace commsim {

// ============================================================================
// Data kinds and region layout
// ============================================================================

enum class DataKind : uint8_t { Ifm = 0, Weight = 1, Ofm = 2 };

inline const char* to_string(DataKind k) {
  switch (k) {
    case DataKind::Ifm: return "IFM";
    case DataKind::Weight: return "W";
    default: return "OFM";
  }
}

/// Element-granular region bases.  Each data type lives in its own
/// page-aligned region; pages interleave across banks by address bits.
struct MemLayout {
  addr_t ifm_base = 0;
  addr_t w_base = 0;
  addr_t ofm_base = 0;
  addr_t total_elements = 0;

  static MemLayout build(const LayerShape& layer, const DramConfig& dram);
};

// Row-major element addresses (throw AddressError when out of range).
addr_t ifm_address(const MemLayout& map, const LayerShape& layer, uint32_t b,
                   uint32_t c, uint32_t h, uint32_t w);
addr_t w_address(const MemLayout& map, const LayerShape& layer, uint32_t m,
                 uint32_t c, uint32_t r, uint32_t s);
addr_t ofm_address(const MemLayout& map, const LayerShape& layer, uint32_t b,
                   uint32_t m, uint32_t e, uint32_t f);

// ============================================================================
// Contiguous datasets
// ============================================================================

/// A maximal run of consecutive DRAM addresses inside one DMA stream segment.
struct ContiguousDataset {
  uint32_t dataset_id = 0;
  addr_t start_addr = 0;
  uint64_t length = 0;  ///< elements
  DataKind kind = DataKind::Ifm;
};

/// Datasets one pass touches for one data type, in DMA stream order.
///
/// The stream is segmented the way the DMACs are programmed — IFM: one 2D
/// window per (batch, channel); weights: one filter per output channel;
/// OFM: one tile plane per (batch, output channel) — and maximal address
/// runs are merged within each segment.
std::vector<ContiguousDataset> contiguous_datasets(DataKind kind,
                                                   const LayerShape& layer,
                                                   const MemLayout& map,
                                                   const PassPlan& plan,
                                                   const TileOrigin& origin);

// ============================================================================
// Burst splitting
// ============================================================================

enum class Dir : uint8_t { Read = 0, Write = 1 };

struct BurstRequest {
  uint32_t dataset_id = 0;
  addr_t start_addr = 0;
  uint32_t beats = 0;  ///< 1..max_burst_beats, one element per beat
  Dir direction = Dir::Read;
  uint8_t dmac = 0;  ///< issuing DMAC index (see accelerator.hpp)
};

/// Greedy split: full bursts of max_burst_beats then the remainder,
/// additionally split wherever the run crosses a DRAM page boundary.
std::vector<BurstRequest> split_into_bursts(const ContiguousDataset& ds,
                                            uint32_t max_burst_beats,
                                            uint32_t page_elements);

// ============================================================================
// Static DRAM command-count expansion
// ============================================================================

struct DramCommandCount {
  uint64_t activates = 0;
  uint64_t column_cmds = 0;
  uint64_t precharges = 0;
  uint64_t total() const { return activates + column_cmds + precharges; }
};

/// Episode flags for one column command, produced by the page walk below.
struct ColStep {
  addr_t page = 0;
  uint32_t beats = 0;       ///< elements this column command moves
  bool needs_act = false;   ///< page opened for this command
  bool needs_pre = false;   ///< a (different) page had to close first
  Dir direction = Dir::Read;
  uint32_t burst_index = 0; ///< position of the owning burst in the input list
};

/// Walks a burst stream through the open-page policy (ACT on first touch or
/// row change, PRE after `close_after_cols` column commands or on row
/// conflict) and reports per-column episode flags.  Pages left open at the
/// end are closed (their PREs are counted against the stream).
/// This is the same policy the timing model enforces, minus time.
std::vector<ColStep> page_episode_walk(const std::vector<BurstRequest>& bursts,
                                       const DramConfig& dram);

/// Command counts for a burst stream in issue order.  Counts are independent
/// of `outstanding_group` under open-page + close-policy rules (the grouping
/// affects timing, not command identity); the parameter is kept so callers
/// can assert the pairing they simulated with.
DramCommandCount expand_to_dram_commands(const std::vector<BurstRequest>& bursts,
                                         const DramConfig& dram,
                                         uint32_t outstanding_group = 2);

/// Per-dataset command-count rows: (dataset_id, activates, column_cmds,
/// precharges), one CSV line each, with a header.
std::string command_count_csv(const std::vector<ContiguousDataset>& datasets,
                              const DramConfig& dram, uint32_t max_burst_beats);

}  // namespace commsim
