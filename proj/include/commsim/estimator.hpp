// estimator.hpp — closed-form performance estimation: burst profiles, dataset
// durations, shared-bandwidth split, interval iteration, and baseline models
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "commsim/memmap.hpp"
#include "commsim/params.hpp"
#include "commsim/types.hpp"
#include "commsim/workload.hpp"

namespace commsim {

// ============================================================================
// Step 1 — burst structure of a contiguous dataset, per data type
// ============================================================================

/// Burst shape of one data type's stream within a single pass (per store
/// group for OFM).  `dataset_elems`/`bursts_per_dataset` describe the
/// representative (largest) contiguous dataset; totals cover the whole pass.
struct TypeBurstProfile {
  DataKind kind = DataKind::Ifm;
  ContiguousDataset rep;             ///< representative (largest) dataset
  uint64_t dataset_elems = 0;        ///< C: elements per contiguous dataset
  uint32_t bursts_per_dataset = 0;   ///< Bc
  std::vector<uint32_t> burst_beats; ///< lengths of the representative dataset
  uint32_t dataset_count = 0;
  uint64_t total_elems = 0;
  // Command counts over the whole stream (open-page walk).
  uint64_t acts = 0, cols = 0, pres = 0;
};

/// Burst profiles for pass `origin`: [0]=IFM, [1]=W, [2]=OFM store of the
/// pass's group.
std::array<TypeBurstProfile, 3> step1_burst_lengths(const LayerShape& layer,
                                                    const TileConfig& tile,
                                                    const BusConfig& bus,
                                                    const DramConfig& dram,
                                                    const TileOrigin& origin);

// ============================================================================
// Step 2 — duration of one contiguous dataset
// ============================================================================

enum class Regime : uint8_t { DramLimited, BusLimited };

inline const char* to_string(Regime r) {
  return r == Regime::DramLimited ? "dram_limited" : "bus_limited";
}

struct DatasetDuration {
  Regime regime = Regime::DramLimited;
  double cycles = 0.0;  ///< one dataset, stream alone on the bus
};

/// Time for one contiguous dataset serviced alone.  Bursts are taken in
/// outstanding-window groups; each group costs its DRAM execution time
/// (ACTs*tRCD + cols*tBURST + PREs*tRP), plus the request round-trip gap
/// whenever the previous group is too short to hide it.
DatasetDuration step2_dataset_duration(const TypeBurstProfile& profile,
                                       const BusConfig& bus,
                                       const DramConfig& dram,
                                       Dir direction);

// ============================================================================
// Step 3 — bandwidth under sharing
// ============================================================================

/// Per-DMAC bandwidth (elements/cycle) when the `d` streams run together.
/// The service is burst-granular round-robin, so each round charges every
/// active stream's own per-burst time: U_i = (C_i/Bc_i) / sum_j(T_j/Bc_j),
/// clipped to <= 1.  Vectors hold one entry per active DMAC.
std::vector<double> step3_bandwidth(const std::vector<double>& t_dataset,
                                    const std::vector<double>& c,
                                    const std::vector<uint32_t>& bc);

// ============================================================================
// Step 4 — one DMA interval
// ============================================================================

struct IntervalEstimate {
  std::vector<double> U;    ///< bandwidth per active DMAC (elements/cycle)
  std::vector<double> P;    ///< remaining amount per active DMAC (elements)
  std::vector<double> C;    ///< contiguous dataset size per active DMAC
  std::vector<uint32_t> Bc; ///< bursts per dataset
  uint32_t D = 0;           ///< active DMAC count
  double duration = 0.0;
};

/// One interval: the remaining amounts in bursts are R_i = (P_i/C_i)*Bc_i,
/// every stream advances m = min_i R_i bursts (A_i = (m/Bc_i)*C_i elements),
/// the interval lasts max_i(A_i/U_i), and P is decremented in place.
double step4_interval_duration(IntervalEstimate& iv);

// ============================================================================
// Reports + full estimation
// ============================================================================

struct EstimateReport {
  uint64_t total_cycles = 0;
  double performance = 0.0;       ///< MAC ops per cycle (1 MAC = 2 ops)
  double per_pass_comm = 0.0;     ///< mean communication window, cycles
  double per_pass_compute = 0.0;  ///< mean compute per pass, cycles
  uint64_t pass_count = 0;
  /// Regime of the duration-setting stream, per steady-state interval.
  std::vector<Regime> limiting_regime_per_interval;
};

/// Proposed model: per pass, iterate intervals (IFM joins after one command
/// setup, W after two; the group store is spread over its group's passes)
/// until the load amounts are exhausted, then compose passes with compute
/// double-buffered against the next pass's loads.
EstimateReport estimate(const LayerShape& layer, const TileConfig& tile,
                        const BusConfig& bus, const DramConfig& dram,
                        const AccelConfig& accel);

/// Fixed cycles-per-element baseline: comm = scale[type] * amount summed over
/// types, pass duration = max(comm, compute).  scale = {1,1,1} is the
/// conventional one-element-per-cycle model.
EstimateReport estimate_conventional(const LayerShape& layer,
                                     const TileConfig& tile,
                                     const AccelConfig& accel,
                                     const std::array<double, 3>& scale);

}  // namespace commsim
