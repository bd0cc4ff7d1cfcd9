// workload.hpp — convolution layer geometry, loop tiling, and pass planning
#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "commsim/types.hpp"

namespace commsim {

// ============================================================================
// Layer geometry
// ============================================================================

/// One convolutional layer, element-granular (a pixel or weight = 1 element).
struct LayerShape {
  std::string name;
  uint32_t batch = 1;    ///< input images per run
  uint32_t in_ch = 1;    ///< input feature map channels
  uint32_t out_ch = 1;   ///< output feature map channels (filter count)
  uint32_t in_h = 1;     ///< input rows
  uint32_t in_w = 1;     ///< input columns
  uint32_t k_h = 1;      ///< filter rows
  uint32_t k_w = 1;      ///< filter columns
  uint32_t stride = 1;
  uint32_t pad = 0;      ///< symmetric zero padding; boundary tiles load less

  void validate() const;

  uint64_t total_macs() const;  ///< batch * in_ch * out_ch * out_h * out_w * k_h * k_w
};

/// Output feature map dims (out_h, out_w).  Errors unless the strided window
/// tiling covers the (padded) input exactly.
std::pair<uint32_t, uint32_t> derive_output_dims(const LayerShape& layer);

// ============================================================================
// Loop tiling
// ============================================================================

/// Tile sizes for the inter-pass loops plus the MAC-array unroll factors.
/// Constrained designs set um == tm and uc == tc.
struct TileConfig {
  uint32_t tb = 1;  ///< batch tile
  uint32_t tc = 1;  ///< input-channel tile
  uint32_t tm = 1;  ///< output-channel tile
  uint32_t te = 1;  ///< output-row tile
  uint32_t tf = 1;  ///< output-column tile
  uint32_t um = 1;  ///< output-channel unroll (MAC array dim)
  uint32_t uc = 1;  ///< input-channel unroll (MAC array dim)

  void validate(const LayerShape& layer) const;

  /// MAC array size implied by the unroll factors.
  uint64_t mac_count() const { return uint64_t(um) * uc; }
};

/// Position of one pass's tile in the loop nest (origins in each tiled dim).
struct TileOrigin {
  uint32_t b0 = 0, c0 = 0, m0 = 0, e0 = 0, f0 = 0;
};

/// Actual (edge-clamped) extents of one pass's tile.
struct TileExtent {
  uint32_t tb = 0, tc = 0, tm = 0, te = 0, tf = 0;
};

/// Input-rows/cols covered by an output tile, clamped to the real image when
/// the layer is padded (boundary tiles then load fewer pixels).
struct HaloExtent {
  uint32_t rows = 0, cols = 0;
};

// ============================================================================
// Pass plan
// ============================================================================
// Inter-pass loop order, outermost to innermost: b, e, f, m, c.  The c loop
// is innermost so one output tile accumulates over ceil(in_ch/tc) consecutive
// passes and is stored once per that group.

struct PassPlan {
  LayerShape layer;
  TileConfig tile;

  uint32_t bsteps = 1, esteps = 1, fsteps = 1, msteps = 1, csteps = 1;
  uint64_t pass_count = 1;

  // Nominal (full interior tile) per-pass amounts, in elements.
  uint64_t ifm_pixels_per_pass = 0;
  uint64_t w_weights_per_pass = 0;
  uint64_t ofm_pixels_per_store = 0;
  uint32_t ofm_store_period = 1;  ///< csteps: passes per output-tile store
  uint64_t compute_cycles_per_pass = 0;

  uint32_t pipeline_fill = 8;

  TileOrigin origin_of(uint64_t pass_index) const;
  TileExtent extent_at(const TileOrigin& o) const;
  HaloExtent halo_at(const TileOrigin& o, const TileExtent& x) const;

  /// True when this pass finishes an output tile (last c-step of its group).
  bool closes_store_group(uint64_t pass_index) const;
  uint64_t store_group_of(uint64_t pass_index) const { return pass_index / csteps; }
  uint64_t store_group_count() const { return pass_count / csteps; }

  // Clamped per-pass amounts.
  uint64_t ifm_pixels_at(const TileOrigin& o) const;
  uint64_t w_weights_at(const TileOrigin& o) const;
  uint64_t ofm_pixels_at(const TileOrigin& o) const;   ///< store amount of o's group
  uint64_t compute_cycles_at(const TileOrigin& o) const;
};

/// Build the pass plan.  Validates layer and tile.
PassPlan plan_passes(const LayerShape& layer, const TileConfig& tile,
                     uint32_t pipeline_fill = 8);

/// Double-buffered on-chip footprint in elements:
/// 2 * (ifm tile + weight tile + ofm tile), nominal full-size tiles.
uint64_t buffer_footprint(const LayerShape& layer, const TileConfig& tile);

}  // namespace commsim
