// memmap.cpp — address layout, run merging, burst splitting, page-episode walk
#include "commsim/memmap.hpp"

#include <algorithm>
#include <sstream>

namespace commsim {

namespace {

addr_t align_up(addr_t v, addr_t a) { return (v + a - 1) / a * a; }

}  // namespace

// ============================================================================
// Region layout and element addresses
// ============================================================================

MemLayout MemLayout::build(const LayerShape& layer, const DramConfig& dram) {
  auto [oh, ow] = derive_output_dims(layer);
  const addr_t ifm_size =
      addr_t(layer.batch) * layer.in_ch * layer.in_h * layer.in_w;
  const addr_t w_size = addr_t(layer.out_ch) * layer.in_ch * layer.k_h * layer.k_w;
  const addr_t ofm_size = addr_t(layer.batch) * layer.out_ch * oh * ow;

  MemLayout m;
  m.ifm_base = 0;
  m.w_base = align_up(ifm_size, dram.page_elements);
  m.ofm_base = align_up(m.w_base + w_size, dram.page_elements);
  m.total_elements = align_up(m.ofm_base + ofm_size, dram.page_elements);
  return m;
}

addr_t ifm_address(const MemLayout& map, const LayerShape& layer, uint32_t b,
                   uint32_t c, uint32_t h, uint32_t w) {
  if (b >= layer.batch || c >= layer.in_ch || h >= layer.in_h || w >= layer.in_w)
    throw AddressError("ifm index out of range");
  return map.ifm_base +
         ((addr_t(b) * layer.in_ch + c) * layer.in_h + h) * layer.in_w + w;
}

addr_t w_address(const MemLayout& map, const LayerShape& layer, uint32_t m,
                 uint32_t c, uint32_t r, uint32_t s) {
  if (m >= layer.out_ch || c >= layer.in_ch || r >= layer.k_h || s >= layer.k_w)
    throw AddressError("weight index out of range");
  return map.w_base +
         ((addr_t(m) * layer.in_ch + c) * layer.k_h + r) * layer.k_w + s;
}

addr_t ofm_address(const MemLayout& map, const LayerShape& layer, uint32_t b,
                   uint32_t m, uint32_t e, uint32_t f) {
  auto [oh, ow] = derive_output_dims(layer);
  if (b >= layer.batch || m >= layer.out_ch || e >= oh || f >= ow)
    throw AddressError("ofm index out of range");
  return map.ofm_base + ((addr_t(b) * layer.out_ch + m) * oh + e) * ow + f;
}

// ============================================================================
// Contiguous datasets
// ============================================================================

namespace {

/// Run accumulator: feeds (addr, len) pieces in stream order, merges adjacent
/// ones, cuts at segment boundaries.
struct RunMerger {
  std::vector<ContiguousDataset> out;
  DataKind kind;
  bool open = false;
  addr_t start = 0;
  uint64_t len = 0;

  explicit RunMerger(DataKind k) : kind(k) {}

  void feed(addr_t addr, uint64_t n) {
    if (open && addr == start + len) {
      len += n;
      return;
    }
    flush();
    open = true;
    start = addr;
    len = n;
  }

  void cut() { flush(); }

  void flush() {
    if (!open) return;
    ContiguousDataset ds;
    ds.dataset_id = uint32_t(out.size());
    ds.start_addr = start;
    ds.length = len;
    ds.kind = kind;
    out.push_back(ds);
    open = false;
  }
};

}  // namespace

std::vector<ContiguousDataset> contiguous_datasets(DataKind kind,
                                                   const LayerShape& layer,
                                                   const MemLayout& map,
                                                   const PassPlan& plan,
                                                   const TileOrigin& o) {
  const TileExtent x = plan.extent_at(o);
  RunMerger rm(kind);

  switch (kind) {
    case DataKind::Ifm: {
      // Input window of the output tile, clamped to the image.
      const int64_t pad = layer.pad;
      const int64_t r0 = std::max<int64_t>(int64_t(o.e0) * layer.stride - pad, 0);
      const int64_t r1 = std::min<int64_t>(
          int64_t(o.e0 + x.te - 1) * layer.stride - pad + layer.k_h, layer.in_h);
      const int64_t c0 = std::max<int64_t>(int64_t(o.f0) * layer.stride - pad, 0);
      const int64_t c1 = std::min<int64_t>(
          int64_t(o.f0 + x.tf - 1) * layer.stride - pad + layer.k_w, layer.in_w);
      const uint64_t width = uint64_t(c1 - c0);
      for (uint32_t b = o.b0; b < o.b0 + x.tb; ++b)
        for (uint32_t c = o.c0; c < o.c0 + x.tc; ++c) {
          for (int64_t h = r0; h < r1; ++h)
            rm.feed(ifm_address(map, layer, b, c, uint32_t(h), uint32_t(c0)),
                    width);
          rm.cut();  // one DMA segment per (image, channel) window
        }
      break;
    }
    case DataKind::Weight: {
      for (uint32_t m = o.m0; m < o.m0 + x.tm; ++m) {
        for (uint32_t c = o.c0; c < o.c0 + x.tc; ++c)
          rm.feed(w_address(map, layer, m, c, 0, 0),
                  uint64_t(layer.k_h) * layer.k_w);
        rm.cut();  // one DMA segment per filter
      }
      break;
    }
    case DataKind::Ofm: {
      auto [oh, ow] = derive_output_dims(layer);
      (void)oh;
      (void)ow;
      for (uint32_t b = o.b0; b < o.b0 + x.tb; ++b)
        for (uint32_t m = o.m0; m < o.m0 + x.tm; ++m) {
          for (uint32_t e = o.e0; e < o.e0 + x.te; ++e)
            rm.feed(ofm_address(map, layer, b, m, e, o.f0), x.tf);
          rm.cut();  // one DMA segment per (image, out-channel) tile plane
        }
      break;
    }
  }
  return std::move(rm.out);
}

// ============================================================================
// Burst splitting
// ============================================================================

std::vector<BurstRequest> split_into_bursts(const ContiguousDataset& ds,
                                            uint32_t max_burst_beats,
                                            uint32_t page_elements) {
  std::vector<BurstRequest> out;
  addr_t a = ds.start_addr;
  uint64_t left = ds.length;
  while (left > 0) {
    const addr_t page_end = (a / page_elements + 1) * addr_t(page_elements);
    const uint64_t n = std::min<uint64_t>(
        {left, max_burst_beats, page_end - a});
    BurstRequest b;
    b.dataset_id = ds.dataset_id;
    b.start_addr = a;
    b.beats = uint32_t(n);
    b.direction = ds.kind == DataKind::Ofm ? Dir::Write : Dir::Read;
    b.dmac = uint8_t(ds.kind);
    out.push_back(b);
    a += n;
    left -= n;
  }
  return out;
}

// ============================================================================
// Page-episode walk (static command expansion)
// ============================================================================

namespace {

struct WalkBank {
  bool open = false;
  uint64_t row = 0;
  uint32_t cols = 0;
};

}  // namespace

std::vector<ColStep> page_episode_walk(const std::vector<BurstRequest>& bursts,
                                       const DramConfig& dram) {
  std::vector<ColStep> steps;
  std::vector<WalkBank> banks(dram.num_banks);

  for (uint32_t bi = 0; bi < bursts.size(); ++bi) {
    const BurstRequest& b = bursts[bi];
    uint32_t left = b.beats;
    addr_t a = b.start_addr;
    while (left > 0) {
      const uint32_t n = std::min<uint32_t>(left, dram.dram_burst_beats);
      ColStep st;
      st.page = dram.page_of(a);
      st.beats = n;
      st.direction = b.direction;
      st.burst_index = bi;

      WalkBank& bank = banks[dram.bank_of(a)];
      const uint64_t row = dram.row_of(a);
      if (bank.open && bank.row == row) {
        // row hit, episode continues
      } else {
        st.needs_pre = bank.open;  // lazy close of a stale row
        st.needs_act = true;
        bank.open = true;
        bank.row = row;
        bank.cols = 0;
      }
      bank.cols++;
      if (bank.cols >= dram.close_after_cols) bank.open = false;  // auto PRE

      steps.push_back(st);
      a += n;
      left -= n;
    }
  }
  return steps;
}

DramCommandCount expand_to_dram_commands(const std::vector<BurstRequest>& bursts,
                                         const DramConfig& dram,
                                         uint32_t outstanding_group) {
  (void)outstanding_group;  // affects timing, never command identity
  DramCommandCount n;
  for (const ColStep& st : page_episode_walk(bursts, dram)) {
    n.column_cmds++;
    if (st.needs_act) n.activates++;
  }
  // Every opened page closes exactly once: by the close policy, by a later
  // row conflict, or by the end-of-stream flush.
  n.precharges = n.activates;
  return n;
}

std::string command_count_csv(const std::vector<ContiguousDataset>& datasets,
                              const DramConfig& dram, uint32_t max_burst_beats) {
  std::ostringstream os;
  os << "dataset_id,activates,column_cmds,precharges\n";
  for (const ContiguousDataset& ds : datasets) {
    const auto bursts = split_into_bursts(ds, max_burst_beats, dram.page_elements);
    const DramCommandCount n = expand_to_dram_commands(bursts, dram);
    os << ds.dataset_id << ',' << n.activates << ',' << n.column_cmds << ','
       << n.precharges << '\n';
  }
  return os.str();
}

}  // namespace commsim
