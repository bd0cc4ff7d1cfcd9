// params.hpp — hardware parameter blocks shared by the timing models
#pragma once

#include <cstdint>

#include "commsim/types.hpp"

namespace commsim {

// ============================================================================
// Bus / DMA engine parameters
// ============================================================================

struct BusConfig {
  uint32_t max_outstanding = 2;   ///< in-flight bursts per DMAC
  uint32_t request_latency = 5;   ///< cycles from END_REQ to DRAM queue arrival
  uint32_t inter_request_gap = 0; ///< min cycles between a DMAC's issues
  uint32_t max_burst_beats = 16;  ///< bus burst cap (one element per beat)

  void validate() const {
    if (max_outstanding == 0) throw ConfigError("bus.max_outstanding must be >= 1");
    if (max_burst_beats == 0) throw ConfigError("bus.max_burst_beats must be >= 1");
  }
};

// ============================================================================
// DRAM geometry + timing
// ============================================================================
// Element-granular addressing: a page holds `page_elements` consecutive
// elements, pages interleave across banks by low-order page-index bits, and
// one column command moves up to `dram_burst_beats` elements.

struct DramConfig {
  // geometry
  uint32_t num_banks = 8;
  uint32_t page_elements = 1024;
  uint32_t dram_burst_beats = 8;  ///< elements per column command
  uint32_t queue_depth = 64;      ///< column-unit capacity per bank queue

  // timing (cycles)
  uint32_t t_rcd = 10;   ///< ACT -> first column command
  uint32_t t_cl = 10;    ///< column command -> first read data
  uint32_t t_rp = 10;    ///< PRE -> next ACT
  uint32_t t_burst = 4;  ///< data-bus occupancy per column command
  uint32_t t_rc = 24;    ///< min ACT -> ACT, same bank
  uint32_t turnaround = 4;  ///< extra bubble on read<->write direction change

  // close policy + refresh
  uint32_t close_after_cols = 4;    ///< 4-time close: PRE after this many cols
  uint32_t refresh_period = 3120;   ///< 0 disables refresh
  uint32_t refresh_duration = 52;

  uint32_t bank_of(addr_t addr) const {
    return static_cast<uint32_t>((addr / page_elements) % num_banks);
  }
  uint64_t row_of(addr_t addr) const { return (addr / page_elements) / num_banks; }
  uint64_t page_of(addr_t addr) const { return addr / page_elements; }

  void validate() const {
    if (num_banks == 0 || page_elements == 0 || dram_burst_beats == 0)
      throw ConfigError("dram geometry fields must be >= 1");
    if (queue_depth == 0) throw ConfigError("dram.queue_depth must be >= 1");
    if (close_after_cols == 0) throw ConfigError("dram.close_after_cols must be >= 1");
    if (t_rc < t_rcd + t_rp)
      throw ConfigError("dram.t_rc must be >= t_rcd + t_rp");
  }
};

// ============================================================================
// Accelerator control parameters
// ============================================================================

struct AccelConfig {
  uint32_t setup_cycles = 20;   ///< per-DMA-command processor setup cost
  uint32_t pipeline_fill = 8;   ///< MAC array fill cycles added per pass
  bool strict_sram = false;     ///< error (vs warn) when footprint exceeds budget
  uint64_t sram_budget = 0;     ///< on-chip buffer budget in elements; 0 = unchecked
};

}  // namespace commsim
