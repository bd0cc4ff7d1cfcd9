// estimator.cpp — closed-form performance model
//
// The model works at burst granularity.  Step 2 reconstructs the open-page
// episode structure of one contiguous dataset and charges each
// outstanding-window group its DRAM execution time, inserting a request
// round-trip gap whenever the previous group is too short to hide it.
// Step 3 converts solo dataset durations into shared bandwidths: bank work
// of different streams overlaps, so each stream keeps its solo rate until
// the shared data channel (one element per cycle) saturates, after which
// rates scale proportionally.  Step 4 is a direct transcription of the
// interval recurrence.

#include "commsim/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <tuple>

namespace commsim {

namespace {

// Column commands of one burst (bursts never cross a page boundary).
uint32_t cols_of_burst(uint32_t beats, const DramConfig& dram) {
  return (beats + dram.dram_burst_beats - 1) / dram.dram_burst_beats;
}

struct GroupCost {
  double t_exec = 0.0;       // ACTs*tRCD + cols*tBURST + PREs*tRP
  double first_burst = 0.0;  // tRCD share + the first burst's column time
};

// Per outstanding-window group: episode command counts of the rep dataset.
std::vector<GroupCost> group_costs(const std::vector<BurstRequest>& bursts,
                                   const BusConfig& bus,
                                   const DramConfig& dram) {
  const uint32_t w = std::max(1u, bus.max_outstanding);
  std::vector<GroupCost> out((bursts.size() + w - 1) / w);
  addr_t open_page = 0;
  bool open = false;
  uint32_t since_act = 0;
  for (size_t i = 0; i < bursts.size(); ++i) {
    GroupCost& g = out[i / w];
    const addr_t page = dram.page_of(bursts[i].start_addr);
    const uint32_t cols = cols_of_burst(bursts[i].beats, dram);
    for (uint32_t c = 0; c < cols; ++c) {
      if (!open || open_page != page) {
        if (open) g.t_exec += dram.t_rp;  // conflicting page closes first
        g.t_exec += dram.t_rcd;
        if (i % w == 0 && c == 0) g.first_burst += dram.t_rcd;
        open = true;
        open_page = page;
        since_act = 0;
      }
      g.t_exec += dram.t_burst;
      if (i % w == 0) g.first_burst += dram.t_burst;
      if (++since_act == dram.close_after_cols) {
        g.t_exec += dram.t_rp;  // close policy
        open = false;
      }
    }
  }
  if (open && !out.empty()) out.back().t_exec += dram.t_rp;
  return out;
}

double interval_step(IntervalEstimate& iv, Regime* limiting,
                     const std::vector<Regime>* regimes);

// ----------------------------------------------------------------------------
// Solo stream replay
// ----------------------------------------------------------------------------
// Closed-form per-burst recurrence reproducing the transaction pipeline for
// one DMAC running alone: grant (outstanding-window feedback), request
// flight, bank episode cadence, and chunked data-channel delivery.  This is
// the refined duration basis behind Step 3 (the group-sum form in Step 2
// misses the window feedback on short datasets); the simulator is the
// calibration oracle for it.
struct SoloReplay {
  double cycles = 0.0;  ///< grant of first burst -> last delivery
};

SoloReplay replay_stream(const std::vector<BurstRequest>& bursts,
                         const BusConfig& bus, const DramConfig& dram,
                         Dir direction) {
  SoloReplay out;
  if (bursts.empty()) return out;
  const uint32_t w = std::max(1u, bus.max_outstanding);
  const double rl = bus.request_latency;
  struct Bank {
    double ready = 0.0;     // earliest next ACT (tRP honored)
    double act = -1e18;     // last ACT (tRC spacing)
    addr_t page = 0;
    bool open = false;
    uint32_t since = 0;
    double col_end = 0.0;
  };
  std::vector<Bank> banks(dram.num_banks);
  std::vector<double> delivery(bursts.size(), 0.0);
  double chan_free = 0.0, dram_bus = 0.0, grant = 0.0;
  for (size_t i = 0; i < bursts.size(); ++i) {
    if (i > 0)
      grant = std::max(grant + 1.0 + bus.inter_request_gap,
                       i >= w ? delivery[i - w] : 0.0);
    const double arrive = grant + 1.0 + rl;
    Bank& b = banks[dram.bank_of(bursts[i].start_addr)];
    const addr_t page = dram.page_of(bursts[i].start_addr);
    uint32_t left = bursts[i].beats, off = 0;
    double last_beat = 0.0, wr_sent = grant + 2.0;
    while (left > 0) {
      const uint32_t n = std::min(left, dram.dram_burst_beats);
      if (!b.open || b.page != page) {
        // pages close lazily: a revisit with a different page pays its PRE
        // at request arrival, not when the page went cold
        if (b.open)
          b.ready = std::max(b.ready,
                             std::max(arrive, b.col_end) + dram.t_rp);
        const double act = std::max({arrive, b.ready, b.act + double(dram.t_rc)});
        b.act = act;
        b.page = page;
        b.open = true;
        b.since = 0;
        b.col_end = act + dram.t_rcd;  // first column not before this
      }
      double col = std::max({arrive, b.col_end, dram_bus});
      if (b.since == 0) col = std::max(col, b.act + double(dram.t_rcd));
      if (direction == Dir::Write) {
        // column becomes eligible once its payload beats have landed
        wr_sent = std::max(wr_sent, chan_free) + n;
        chan_free = wr_sent;
        col = std::max(col, wr_sent - 1.0 + rl);
        last_beat = wr_sent - 1.0;
      }
      const double end = col + dram.t_burst;
      dram_bus = end;
      b.col_end = end;
      if (++b.since == dram.close_after_cols) {
        b.ready = std::max(b.ready, end + dram.t_rp);
        b.open = false;
      }
      if (direction == Dir::Read) {
        const double s = std::max(chan_free, col + dram.t_cl);
        const uint32_t tail = ((n - 1) * dram.t_burst + n - 1) / n;
        last_beat = std::max(s + n - 1.0, col + dram.t_cl + tail);
        chan_free = last_beat + 1.0;
      }
      left -= n;
      off += n;
    }
    delivery[i] = last_beat + (direction == Dir::Write ? 1.0 : 0.0);
  }
  out.cycles = delivery.back();
  return out;
}

// Streams of one pass, per type, in DMA order.
std::array<std::vector<BurstRequest>, 3> pass_streams(
    const LayerShape& layer, const MemLayout& map, const PassPlan& plan,
    const TileOrigin& origin, const BusConfig& bus, const DramConfig& dram) {
  std::array<std::vector<BurstRequest>, 3> out;
  const DataKind kinds[3] = {DataKind::Ifm, DataKind::Weight, DataKind::Ofm};
  const Dir dirs[3] = {Dir::Read, Dir::Read, Dir::Write};
  for (int k = 0; k < 3; ++k) {
    for (const auto& ds : contiguous_datasets(kinds[k], layer, map, plan,
                                              origin)) {
      auto b = split_into_bursts(ds, bus.max_burst_beats, dram.page_elements);
      for (auto& r : b) r.direction = dirs[k];
      out[k].insert(out[k].end(), b.begin(), b.end());
    }
  }
  return out;
}

}  // namespace

// ============================================================================
// Step 1
// ============================================================================

std::array<TypeBurstProfile, 3> step1_burst_lengths(const LayerShape& layer,
                                                    const TileConfig& tile,
                                                    const BusConfig& bus,
                                                    const DramConfig& dram,
                                                    const TileOrigin& origin) {
  const PassPlan plan = plan_passes(layer, tile);
  const MemLayout map = MemLayout::build(layer, dram);
  std::array<TypeBurstProfile, 3> out;
  const DataKind kinds[3] = {DataKind::Ifm, DataKind::Weight, DataKind::Ofm};
  for (int k = 0; k < 3; ++k) {
    TypeBurstProfile& p = out[k];
    p.kind = kinds[k];
    auto sets = contiguous_datasets(kinds[k], layer, map, plan, origin);
    if (sets.empty()) continue;
    p.dataset_count = static_cast<uint32_t>(sets.size());
    const ContiguousDataset* rep = &sets.front();
    std::vector<BurstRequest> stream;
    for (const auto& ds : sets) {
      p.total_elems += ds.length;
      if (ds.length > rep->length) rep = &ds;
      auto b = split_into_bursts(ds, bus.max_burst_beats, dram.page_elements);
      stream.insert(stream.end(), b.begin(), b.end());
    }
    p.rep = *rep;
    p.dataset_elems = rep->length;
    auto rep_bursts =
        split_into_bursts(*rep, bus.max_burst_beats, dram.page_elements);
    p.bursts_per_dataset = static_cast<uint32_t>(rep_bursts.size());
    for (const auto& b : rep_bursts) p.burst_beats.push_back(b.beats);
    DramCommandCount cc = expand_to_dram_commands(stream, dram,
                                                  bus.max_outstanding);
    p.acts = cc.activates;
    p.cols = cc.column_cmds;
    p.pres = cc.precharges;
  }
  return out;
}

// ============================================================================
// Step 2
// ============================================================================

DatasetDuration step2_dataset_duration(const TypeBurstProfile& profile,
                                       const BusConfig& bus,
                                       const DramConfig& dram,
                                       Dir direction) {
  DatasetDuration d;
  if (profile.dataset_elems == 0) return d;
  ContiguousDataset rep = profile.rep;
  auto bursts = split_into_bursts(rep, bus.max_burst_beats, dram.page_elements);
  for (auto& b : bursts) b.direction = direction;
  const auto groups = group_costs(bursts, bus, dram);
  if (groups.empty()) return d;

  // Cycles from "window slot freed" to "next group's first column could
  // issue", beyond what the DRAM spends anyway: the response/ack hop, grant
  // turnaround, and the request flight.  Writes push their data through the
  // shared channel before the column is eligible, which the t_cl term proxies.
  const double turnaround = bus.request_latency + dram.t_cl + 2.0;

  double total = 0.0;
  uint64_t gapped = 0;
  const size_t n = groups.size();
  for (size_t g = 0; g < n; ++g) {
    const GroupCost& prev = groups[(g + n - 1) % n];  // steady-state wrap
    // While the previous group finishes its tail (everything after its first
    // burst) and precharges, this group's request is already in flight.
    const double hidden = (prev.t_exec - prev.first_burst) + dram.t_rp;
    const double gap = std::max(0.0, turnaround - hidden);
    if (gap > 0) ++gapped;
    total += groups[g].t_exec + gap;
  }
  d.cycles = total;
  d.regime = gapped * 2 > n ? Regime::BusLimited : Regime::DramLimited;
  return d;
}

// ============================================================================
// Step 3
// ============================================================================

std::vector<double> step3_bandwidth(const std::vector<double>& t_dataset,
                                    const std::vector<double>& c,
                                    const std::vector<uint32_t>& bc) {
  // Equal-priority round robin grants one burst per DMAC per round, so a
  // stream's channel share is proportional to its mean burst length.  Bank
  // work of distinct streams overlaps, so a stream slower than that share
  // keeps its solo rate and the slack refills the others.  Chunk arbitration
  // and episode boundaries leave a few percent of the channel unused.
  constexpr double kChannelEff = 0.96;
  const size_t n = t_dataset.size();
  std::vector<double> solo(n, 0.0), w(n, 1.0);
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    solo[i] = t_dataset[i] > 0 ? std::min(1.0, c[i] / t_dataset[i]) : 1.0;
    w[i] = i < bc.size() && bc[i] > 0 ? c[i] / double(bc[i]) : c[i];
    sum += solo[i];
  }
  if (n <= 1 || sum <= kChannelEff) return solo;
  // Burst-weighted water-fill: streams below their share keep solo rate and
  // donate the difference; the rest split the remaining channel by weight.
  std::vector<double> u(n, 0.0);
  std::vector<size_t> open(n);
  for (size_t i = 0; i < n; ++i) open[i] = i;
  double budget = kChannelEff;
  while (!open.empty()) {
    double wsum = 0.0;
    for (size_t i : open) wsum += w[i];
    std::vector<size_t> next;
    for (size_t i : open) {
      if (solo[i] <= budget * w[i] / wsum) {
        u[i] = solo[i];
        budget -= solo[i];
      } else {
        next.push_back(i);
      }
    }
    if (next.size() == open.size()) {
      for (size_t i : next) u[i] = budget * w[i] / wsum;
      break;
    }
    open = std::move(next);
  }
  return u;
}

// ============================================================================
// Step 4
// ============================================================================

double step4_interval_duration(IntervalEstimate& iv) {
  return interval_step(iv, nullptr, nullptr);
}

namespace {

// One interval of the joint-progress recurrence; optionally reports the
// regime of the stream that set the duration.
double interval_step(IntervalEstimate& iv, Regime* limiting,
                     const std::vector<Regime>* regimes) {
  const uint32_t d = iv.D;
  double m = 0.0;
  for (uint32_t i = 0; i < d; ++i) {
    const double r = iv.P[i] / iv.C[i] * iv.Bc[i];  // remaining, in bursts
    if (i == 0 || r < m) m = r;
  }
  double dur = 0.0;
  uint32_t argmax = 0;
  std::vector<double> a(d);
  for (uint32_t i = 0; i < d; ++i) {
    a[i] = m / iv.Bc[i] * iv.C[i];  // actual amount this interval
    const double t = iv.U[i] > 0 ? a[i] / iv.U[i] : 0.0;
    if (t > dur) {
      dur = t;
      argmax = i;
    }
  }
  for (uint32_t i = 0; i < d; ++i) iv.P[i] = std::max(0.0, iv.P[i] - a[i]);
  iv.duration = dur;
  if (limiting && regimes) *limiting = (*regimes)[argmax];
  return dur;
}

// ----------------------------------------------------------------------------
// Per-pass communication window: interval iteration
// ----------------------------------------------------------------------------

struct StreamState {
  double start = 0.0;  // command issue time within the window
  double p = 0.0;      // elements to move this pass
  double c = 1.0;
  uint32_t bc = 1;
  double t_dataset = 1.0;
  Regime regime = Regime::DramLimited;
};

struct PassCost {
  double comm = 0.0;          // window until both loads are done
  double compute = 0.0;
  double store_alone = 0.0;   // one group store, solo (tail cost)
  std::vector<Regime> interval_regimes;
};

PassCost pass_cost(const LayerShape& layer, const TileConfig& tile,
                   const BusConfig& bus, const DramConfig& dram,
                   const AccelConfig& accel, const PassPlan& plan,
                   const TileOrigin& origin) {
  PassCost out;
  const MemLayout map = MemLayout::build(layer, dram);
  const auto profiles = step1_burst_lengths(layer, tile, bus, dram, origin);
  const auto streams = pass_streams(layer, map, plan, origin, bus, dram);
  StreamState s[3];
  const Dir dirs[3] = {Dir::Read, Dir::Read, Dir::Write};
  for (int i = 0; i < 3; ++i) {
    const auto& p = profiles[i];
    if (p.total_elems == 0) continue;
    const auto dd = step2_dataset_duration(p, bus, dram, dirs[i]);
    // Solo duration of the whole per-pass stream (window feedback included);
    // scaled to one dataset for the Step 3/4 inputs.
    const double t_stream =
        replay_stream(streams[i], bus, dram, dirs[i]).cycles;
    s[i].p = static_cast<double>(p.total_elems);
    s[i].c = static_cast<double>(p.dataset_elems);
    s[i].bc = std::max(1u, p.bursts_per_dataset);
    s[i].t_dataset = t_stream * s[i].c / s[i].p;
    s[i].regime = dd.regime;
  }
  out.store_alone = s[2].t_dataset * (s[2].c > 0 ? s[2].p / s[2].c : 0.0);
  out.compute = static_cast<double>(plan.compute_cycles_at(origin));
  // Loads are staggered one command-setup apart.  The group store is spread
  // over its group's passes, but it only enters the channel once the previous
  // pass's compute ends — that is when its data exists to be written back.
  s[0].start = accel.setup_cycles;
  s[1].start = 2.0 * accel.setup_cycles;
  s[2].start = out.compute;
  s[2].p /= static_cast<double>(plan.csteps);

  double t = 0.0;
  for (int guard = 0; guard < 64; ++guard) {
    if (s[0].p <= 0 && s[1].p <= 0) break;
    // Active set; the next pending command bounds this interval.
    std::vector<int> act;
    double next_start = -1.0;
    for (int i = 0; i < 3; ++i) {
      if (s[i].p <= 0) continue;
      if (s[i].start <= t)
        act.push_back(i);
      else if (next_start < 0 || s[i].start < next_start)
        next_start = s[i].start;
    }
    if (act.empty()) {
      t = next_start;
      continue;
    }
    IntervalEstimate iv;
    iv.D = static_cast<uint32_t>(act.size());
    std::vector<Regime> regs;
    for (int i : act) {
      iv.P.push_back(s[i].p);
      iv.C.push_back(s[i].c);
      iv.Bc.push_back(s[i].bc);
      iv.U.push_back(0.0);
      regs.push_back(s[i].regime);
    }
    std::vector<double> td, cc;
    for (int i : act) {
      td.push_back(s[i].t_dataset);
      cc.push_back(s[i].c);
    }
    iv.U = step3_bandwidth(td, cc, iv.Bc);
    Regime limiting = Regime::DramLimited;
    const double dur = interval_step(iv, &limiting, &regs);
    if (next_start > 0 && t + dur > next_start) {
      // A new command lands mid-interval: consume at rate until it starts.
      const double dt = next_start - t;
      for (size_t k = 0; k < act.size(); ++k)
        s[act[k]].p = std::max(0.0, s[act[k]].p - iv.U[k] * dt);
      t = next_start;
      continue;
    }
    for (size_t k = 0; k < act.size(); ++k) s[act[k]].p = iv.P[k];
    t += dur;
    out.interval_regimes.push_back(limiting);
  }
  out.comm = t;
  return out;
}

struct ClassKey {
  uint32_t tb, tc, tm, te, tf, rows, cols;
  bool operator<(const ClassKey& o) const {
    return std::tie(tb, tc, tm, te, tf, rows, cols) <
           std::tie(o.tb, o.tc, o.tm, o.te, o.tf, o.rows, o.cols);
  }
};

EstimateReport compose(const LayerShape& layer, const PassPlan& plan,
                       const AccelConfig& accel,
                       const std::function<PassCost(const TileOrigin&)>& cost) {
  std::map<ClassKey, PassCost> cache;
  auto cost_of = [&](uint64_t w) -> const PassCost& {
    const TileOrigin o = plan.origin_of(w);
    const TileExtent x = plan.extent_at(o);
    const HaloExtent h = plan.halo_at(o, x);
    const ClassKey key{x.tb, x.tc, x.tm, x.te, x.tf, h.rows, h.cols};
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, cost(o)).first;
    return it->second;
  };

  EstimateReport rep;
  rep.pass_count = plan.pass_count;
  const uint64_t n = plan.pass_count;
  double total = 0.0, comm_sum = 0.0, compute_sum = 0.0;
  double prev_compute = 0.0;
  for (uint64_t w = 0; w < n; ++w) {
    const PassCost& pc = cost_of(w);
    total += std::max(pc.comm, prev_compute);
    comm_sum += pc.comm;
    compute_sum += pc.compute;
    prev_compute = pc.compute;
  }
  const PassCost& last = cost_of(n - 1);
  total += prev_compute + accel.setup_cycles + last.store_alone;
  rep.total_cycles = static_cast<uint64_t>(std::llround(total));
  rep.per_pass_comm = comm_sum / static_cast<double>(n);
  rep.per_pass_compute = compute_sum / static_cast<double>(n);
  rep.performance =
      2.0 * static_cast<double>(layer.total_macs()) / total;
  // Steady-state interval regimes: first interior pass (middle of the nest).
  rep.limiting_regime_per_interval = cost_of(n / 2).interval_regimes;
  return rep;
}

}  // namespace

// ============================================================================
// Full estimation
// ============================================================================

EstimateReport estimate(const LayerShape& layer, const TileConfig& tile,
                        const BusConfig& bus, const DramConfig& dram,
                        const AccelConfig& accel) {
  layer.validate();
  tile.validate(layer);
  bus.validate();
  dram.validate();
  const PassPlan plan = plan_passes(layer, tile, accel.pipeline_fill);
  return compose(layer, plan, accel, [&](const TileOrigin& o) {
    return pass_cost(layer, tile, bus, dram, accel, plan, o);
  });
}

EstimateReport estimate_conventional(const LayerShape& layer,
                                     const TileConfig& tile,
                                     const AccelConfig& accel,
                                     const std::array<double, 3>& scale) {
  layer.validate();
  tile.validate(layer);
  const PassPlan plan = plan_passes(layer, tile, accel.pipeline_fill);
  return compose(layer, plan, accel, [&](const TileOrigin& o) {
    PassCost pc;
    pc.compute = static_cast<double>(plan.compute_cycles_at(o));
    const double store = static_cast<double>(plan.ofm_pixels_at(o));
    pc.comm = scale[0] * static_cast<double>(plan.ifm_pixels_at(o)) +
              scale[1] * static_cast<double>(plan.w_weights_at(o)) +
              scale[2] * store / static_cast<double>(plan.csteps);
    pc.store_alone = scale[2] * store;
    return pc;
  });
}

}  // namespace commsim
