// workload.cpp — layer/tile validation and pass-plan arithmetic
#include "commsim/workload.hpp"

#include <algorithm>

namespace commsim {

namespace {

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

}  // namespace

// ============================================================================
// LayerShape
// ============================================================================

void LayerShape::validate() const {
  if (batch == 0 || in_ch == 0 || out_ch == 0 || in_h == 0 || in_w == 0 ||
      k_h == 0 || k_w == 0 || stride == 0)
    throw DimensionError("layer '" + name + "': all dims and stride must be >= 1");
  if (k_h > in_h + 2 * pad || k_w > in_w + 2 * pad)
    throw DimensionError("layer '" + name + "': filter exceeds padded input");
}

std::pair<uint32_t, uint32_t> derive_output_dims(const LayerShape& layer) {
  layer.validate();
  const uint32_t span_h = layer.in_h + 2 * layer.pad - layer.k_h;
  const uint32_t span_w = layer.in_w + 2 * layer.pad - layer.k_w;
  if (span_h % layer.stride != 0 || span_w % layer.stride != 0)
    throw DimensionError("layer '" + layer.name +
                         "': stride does not tile the padded input exactly");
  return {span_h / layer.stride + 1, span_w / layer.stride + 1};
}

uint64_t LayerShape::total_macs() const {
  auto [oh, ow] = derive_output_dims(*this);
  return uint64_t(batch) * in_ch * out_ch * oh * ow * k_h * k_w;
}

// ============================================================================
// TileConfig
// ============================================================================

void TileConfig::validate(const LayerShape& layer) const {
  auto [oh, ow] = derive_output_dims(layer);
  auto check = [](uint32_t t, uint32_t dim, const char* what) {
    if (t == 0 || t > dim)
      throw DimensionError(std::string("tile ") + what + " out of range [1, dim]");
  };
  check(tb, layer.batch, "tb");
  check(tc, layer.in_ch, "tc");
  check(tm, layer.out_ch, "tm");
  check(te, oh, "te");
  check(tf, ow, "tf");
  if (um == 0 || uc == 0 || tm % um != 0 || tc % uc != 0)
    throw DimensionError("unroll factors must divide their tile dims");
}

// ============================================================================
// PassPlan
// ============================================================================

PassPlan plan_passes(const LayerShape& layer, const TileConfig& tile,
                     uint32_t pipeline_fill) {
  tile.validate(layer);
  auto [oh, ow] = derive_output_dims(layer);

  PassPlan p;
  p.layer = layer;
  p.tile = tile;
  p.pipeline_fill = pipeline_fill;
  p.bsteps = uint32_t(ceil_div(layer.batch, tile.tb));
  p.esteps = uint32_t(ceil_div(oh, tile.te));
  p.fsteps = uint32_t(ceil_div(ow, tile.tf));
  p.msteps = uint32_t(ceil_div(layer.out_ch, tile.tm));
  p.csteps = uint32_t(ceil_div(layer.in_ch, tile.tc));
  p.pass_count =
      uint64_t(p.bsteps) * p.esteps * p.fsteps * p.msteps * p.csteps;

  const uint64_t ih = uint64_t(tile.te - 1) * layer.stride + layer.k_h;
  const uint64_t iw = uint64_t(tile.tf - 1) * layer.stride + layer.k_w;
  p.ifm_pixels_per_pass = uint64_t(tile.tb) * tile.tc * ih * iw;
  p.w_weights_per_pass = uint64_t(tile.tc) * tile.tm * layer.k_h * layer.k_w;
  p.ofm_pixels_per_store = uint64_t(tile.tb) * tile.tm * tile.te * tile.tf;
  p.ofm_store_period = p.csteps;
  p.compute_cycles_per_pass =
      uint64_t(layer.k_h) * layer.k_w * tile.tb * tile.te * tile.tf *
          (tile.tc / tile.uc) * (tile.tm / tile.um) +
      pipeline_fill;
  return p;
}

TileOrigin PassPlan::origin_of(uint64_t pass_index) const {
  // b, e, f, m, c from outermost to innermost.
  TileOrigin o;
  o.c0 = uint32_t(pass_index % csteps) * tile.tc;
  pass_index /= csteps;
  o.m0 = uint32_t(pass_index % msteps) * tile.tm;
  pass_index /= msteps;
  o.f0 = uint32_t(pass_index % fsteps) * tile.tf;
  pass_index /= fsteps;
  o.e0 = uint32_t(pass_index % esteps) * tile.te;
  pass_index /= esteps;
  o.b0 = uint32_t(pass_index) * tile.tb;
  return o;
}

TileExtent PassPlan::extent_at(const TileOrigin& o) const {
  auto [oh, ow] = derive_output_dims(layer);
  TileExtent x;
  x.tb = std::min(tile.tb, layer.batch - o.b0);
  x.tc = std::min(tile.tc, layer.in_ch - o.c0);
  x.tm = std::min(tile.tm, layer.out_ch - o.m0);
  x.te = std::min(tile.te, oh - o.e0);
  x.tf = std::min(tile.tf, ow - o.f0);
  return x;
}

HaloExtent PassPlan::halo_at(const TileOrigin& o, const TileExtent& x) const {
  // Input window of the output tile, clamped to the unpadded image.
  const int64_t pad = layer.pad;
  const int64_t r0 = int64_t(o.e0) * layer.stride - pad;
  const int64_t r1 = int64_t(o.e0 + x.te - 1) * layer.stride - pad + layer.k_h;
  const int64_t c0 = int64_t(o.f0) * layer.stride - pad;
  const int64_t c1 = int64_t(o.f0 + x.tf - 1) * layer.stride - pad + layer.k_w;
  HaloExtent h;
  h.rows = uint32_t(std::min<int64_t>(r1, layer.in_h) - std::max<int64_t>(r0, 0));
  h.cols = uint32_t(std::min<int64_t>(c1, layer.in_w) - std::max<int64_t>(c0, 0));
  return h;
}

bool PassPlan::closes_store_group(uint64_t pass_index) const {
  return pass_index % csteps == csteps - 1;
}

uint64_t PassPlan::ifm_pixels_at(const TileOrigin& o) const {
  const TileExtent x = extent_at(o);
  const HaloExtent h = halo_at(o, x);
  return uint64_t(x.tb) * x.tc * h.rows * h.cols;
}

uint64_t PassPlan::w_weights_at(const TileOrigin& o) const {
  const TileExtent x = extent_at(o);
  return uint64_t(x.tc) * x.tm * layer.k_h * layer.k_w;
}

uint64_t PassPlan::ofm_pixels_at(const TileOrigin& o) const {
  const TileExtent x = extent_at(o);
  return uint64_t(x.tb) * x.tm * x.te * x.tf;
}

uint64_t PassPlan::compute_cycles_at(const TileOrigin& o) const {
  const TileExtent x = extent_at(o);
  return uint64_t(layer.k_h) * layer.k_w * x.tb * x.te * x.tf *
             ceil_div(x.tc, tile.uc) * ceil_div(x.tm, tile.um) +
         pipeline_fill;
}

// ============================================================================
// Footprint
// ============================================================================

uint64_t buffer_footprint(const LayerShape& layer, const TileConfig& tile) {
  tile.validate(layer);
  const uint64_t ih = uint64_t(tile.te - 1) * layer.stride + layer.k_h;
  const uint64_t iw = uint64_t(tile.tf - 1) * layer.stride + layer.k_w;
  const uint64_t ifm = uint64_t(tile.tb) * tile.tc * ih * iw;
  const uint64_t wgt = uint64_t(tile.tc) * tile.tm * layer.k_h * layer.k_w;
  const uint64_t ofm = uint64_t(tile.tb) * tile.tm * tile.te * tile.tf;
  return 2 * (ifm + wgt + ofm);
}

}  // namespace commsim
