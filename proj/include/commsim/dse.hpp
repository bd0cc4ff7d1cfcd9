// dse.hpp — tile-space enumeration and SRAM-constrained optimization
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "commsim/params.hpp"
#include "commsim/types.hpp"
#include "commsim/workload.hpp"

namespace commsim {

// ============================================================================
// Space
// ============================================================================

/// Cartesian tile space.  Points violating the MAC budget (tc*tm <= budget)
/// are dropped; `divisible_only` additionally requires every tile size to
/// divide its loop dimension evenly.
struct DesignSpace {
  std::vector<uint32_t> tb_set, tc_set, tm_set, te_set, tf_set;
  uint64_t mac_budget = 0;  ///< 0 = unlimited
  bool divisible_only = false;
};

enum class BoundKind : uint8_t { CommLimited, CompLimited };

inline const char* to_string(BoundKind b) {
  return b == BoundKind::CommLimited ? "comm_limited" : "comp_limited";
}

struct DsePoint {
  TileConfig tile;
  uint64_t footprint = 0;        ///< elements, double-buffered
  double perf_estimate = 0.0;    ///< MAC ops / cycle
  std::optional<double> perf_simulated;
  BoundKind regime = BoundKind::CommLimited;

  /// Simulated performance when present, estimate otherwise.
  double perf() const {
    return perf_simulated ? *perf_simulated : perf_estimate;
  }
};

/// Constrained-mode points (um = tm, uc = tc) in deterministic lexicographic
/// set order.  Throws EmptySpace when nothing survives the filters.
std::vector<TileConfig> enumerate(const DesignSpace& space,
                                  const LayerShape& layer);

// ============================================================================
// Optimization
// ============================================================================

enum class Evaluator : uint8_t { Simulate, Estimate, Conventional };

struct DseResult {
  DsePoint best;
  std::vector<DsePoint> points;  ///< all feasible points, enumeration order
  /// (budget, best feasible performance) over the sweep grid.
  std::vector<std::pair<uint64_t, double>> budget_curve;
  uint64_t evaluated = 0;   ///< points run through the chosen evaluator
  uint64_t simulated = 0;   ///< of those, full simulations
};

/// Logarithmic budget grid from the smallest feasible footprint to `max_budget`.
std::vector<uint64_t> budget_grid(uint64_t lo, uint64_t hi, uint32_t steps);

/// Evaluates every point with footprint <= sram_budget and returns the argmax
/// (ties: smaller footprint, then earlier enumeration order) plus the
/// max-performance-vs-budget curve over `grid` (defaults to an 8-step
/// logarithmic sweep).  Throws Infeasible when no point fits.
DseResult optimize(const LayerShape& layer, const DesignSpace& space,
                   uint64_t sram_budget, Evaluator ev, const BusConfig& bus,
                   const DramConfig& dram, const AccelConfig& accel,
                   const std::vector<uint64_t>& grid = {},
                   uint32_t workers = 0);

/// Rank all feasible points with `rank_by` (estimator model), then simulate
/// only the top ceil(top_fraction * n) and return the simulated argmax.
DseResult hybrid_optimize(const LayerShape& layer, const DesignSpace& space,
                          uint64_t sram_budget, double top_fraction,
                          const BusConfig& bus, const DramConfig& dram,
                          const AccelConfig& accel,
                          Evaluator rank_by = Evaluator::Estimate,
                          uint32_t workers = 0);

// ============================================================================
// Multi-layer tiling with shared unroll factors
// ============================================================================

enum class TilingMode : uint8_t { Constrained, Unconstrained };

struct MultiLayerResult {
  uint32_t um = 1, uc = 1;            ///< shared MAC-array unroll
  std::vector<TileConfig> tiles;      ///< one per layer
  std::vector<double> layer_cycles;   ///< estimated cycles per layer
  double aggregate_perf = 0.0;        ///< total MAC ops / total cycles
};

/// Searches shared (um, uc) x per-layer tiles.  Constrained mode forces
/// tm = um and tc = uc; unconstrained lets tiles vary freely over the space.
/// Estimator-driven.  Throws Infeasible when some layer has no feasible tile.
MultiLayerResult optimize_multilayer(const std::vector<LayerShape>& layers,
                                     const std::vector<uint32_t>& um_set,
                                     const std::vector<uint32_t>& uc_set,
                                     const DesignSpace& space,
                                     uint64_t sram_budget, TilingMode mode,
                                     const BusConfig& bus,
                                     const DramConfig& dram,
                                     const AccelConfig& accel);

}  // namespace commsim
