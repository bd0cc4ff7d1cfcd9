// dse.cpp — tile-space enumeration, SRAM-constrained search, multi-layer tiling
#include "commsim/dse.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "commsim/estimator.hpp"
#include "commsim/sim_engine.hpp"

namespace commsim {
namespace {

std::vector<uint32_t> sorted_unique(std::vector<uint32_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// MAC-budget filter.  "Constrained to the maximum number of MAC units" means
// a kept (tc, tm) pair packs the array as full as the sets allow: neither
// coordinate can be raised within its set without exceeding the budget.
// budget == 0 disables the filter.
std::vector<std::pair<uint32_t, uint32_t>> packed_pairs(
    const std::vector<uint32_t>& tcs, const std::vector<uint32_t>& tms,
    uint64_t budget) {
  std::vector<std::pair<uint32_t, uint32_t>> out;
  for (uint32_t tc : tcs) {
    for (uint32_t tm : tms) {
      if (budget == 0) {
        out.emplace_back(tc, tm);
        continue;
      }
      if (uint64_t(tc) * tm > budget) continue;
      bool maximal = true;
      for (uint32_t tm2 : tms)
        if (tm2 > tm && uint64_t(tc) * tm2 <= budget) maximal = false;
      for (uint32_t tc2 : tcs)
        if (tc2 > tc && uint64_t(tc2) * tm <= budget) maximal = false;
      if (maximal) out.emplace_back(tc, tm);
    }
  }
  return out;
}

bool fits(const LayerShape& layer, const TileConfig& t) {
  try {
    t.validate(layer);
  } catch (const DimensionError&) {
    return false;
  }
  return true;
}

bool divides_dims(const LayerShape& layer, const TileConfig& t) {
  auto [oh, ow] = derive_output_dims(layer);
  return layer.batch % t.tb == 0 && layer.in_ch % t.tc == 0 &&
         layer.out_ch % t.tm == 0 && oh % t.te == 0 && ow % t.tf == 0;
}

// Index-parallel map with deterministic output slots.  Worker count never
// affects results; exceptions from workers are rethrown on the caller.
template <typename Fn>
void parallel_for(size_t n, uint32_t workers, Fn&& fn) {
  uint32_t w = workers ? workers : std::thread::hardware_concurrency();
  if (w == 0) w = 1;
  w = uint32_t(std::min<size_t>(w, n));
  if (w <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto drain = [&] {
    for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(w - 1);
  for (uint32_t t = 1; t < w; ++t) pool.emplace_back(drain);
  drain();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// Evaluates one feasible point.  perf_estimate always carries the model named
// by `ev` (conventional evaluators rank by their own numbers); simulation
// additionally fills perf_simulated.
void evaluate_point(DsePoint& pt, const LayerShape& layer, Evaluator ev,
                    const BusConfig& bus, const DramConfig& dram,
                    const AccelConfig& accel) {
  EstimateReport rep =
      ev == Evaluator::Conventional
          ? estimate_conventional(layer, pt.tile, accel, {1.0, 1.0, 1.0})
          : estimate(layer, pt.tile, bus, dram, accel);
  pt.perf_estimate = rep.performance;
  pt.regime = rep.per_pass_comm > rep.per_pass_compute
                  ? BoundKind::CommLimited
                  : BoundKind::CompLimited;
  if (ev == Evaluator::Simulate)
    pt.perf_simulated = simulate(layer, pt.tile, bus, dram, accel).performance;
}

// argmax with the documented tie-break: higher perf, then smaller footprint,
// then earlier enumeration (= lexicographic tile) order.
size_t best_index(const std::vector<DsePoint>& pts) {
  size_t best = 0;
  for (size_t i = 1; i < pts.size(); ++i) {
    const DsePoint& a = pts[i];
    const DsePoint& b = pts[best];
    if (a.perf() > b.perf() ||
        (a.perf() == b.perf() && a.footprint < b.footprint))
      best = i;
  }
  return best;
}

std::vector<DsePoint> feasible_points(const LayerShape& layer,
                                      const DesignSpace& space,
                                      uint64_t sram_budget) {
  std::vector<DsePoint> pts;
  for (const TileConfig& t : enumerate(space, layer)) {
    DsePoint p;
    p.tile = t;
    p.footprint = buffer_footprint(layer, t);
    if (p.footprint <= sram_budget) pts.push_back(p);
  }
  if (pts.empty())
    throw Infeasible("no enumerated point fits the SRAM budget");
  return pts;
}

std::vector<std::pair<uint64_t, double>> curve_from_points(
    const std::vector<DsePoint>& pts, const std::vector<uint64_t>& grid) {
  std::vector<std::pair<uint64_t, double>> curve;
  for (uint64_t g : grid) {
    double best = 0.0;
    bool any = false;
    for (const DsePoint& p : pts)
      if (p.footprint <= g && (!any || p.perf() > best)) {
        best = p.perf();
        any = true;
      }
    if (any) curve.emplace_back(g, best);
  }
  return curve;
}

}  // namespace

// ============================================================================
// Enumeration
// ============================================================================

std::vector<TileConfig> enumerate(const DesignSpace& space,
                                  const LayerShape& layer) {
  const auto tbs = sorted_unique(space.tb_set);
  const auto tcs = sorted_unique(space.tc_set);
  const auto tms = sorted_unique(space.tm_set);
  const auto tes = sorted_unique(space.te_set);
  const auto tfs = sorted_unique(space.tf_set);
  if (tbs.empty() || tcs.empty() || tms.empty() || tes.empty() || tfs.empty())
    throw EmptySpace("design space has an empty value set");

  const auto pairs = packed_pairs(tcs, tms, space.mac_budget);

  std::vector<TileConfig> out;
  for (uint32_t tb : tbs)
    for (const auto& [tc, tm] : pairs)
      for (uint32_t te : tes)
        for (uint32_t tf : tfs) {
          TileConfig t;
          t.tb = tb;
          t.tc = tc;
          t.tm = tm;
          t.te = te;
          t.tf = tf;
          t.um = tm;
          t.uc = tc;
          if (!fits(layer, t)) continue;
          if (space.divisible_only && !divides_dims(layer, t)) continue;
          out.push_back(t);
        }
  if (out.empty()) throw EmptySpace("all candidate tiles were filtered out");
  return out;
}

// ============================================================================
// Optimization
// ============================================================================

std::vector<uint64_t> budget_grid(uint64_t lo, uint64_t hi, uint32_t steps) {
  if (lo == 0) lo = 1;
  if (hi < lo) hi = lo;
  if (steps < 2 || lo == hi) return {hi};
  std::vector<uint64_t> grid;
  const double ratio = double(hi) / double(lo);
  for (uint32_t i = 0; i < steps; ++i) {
    const double f = double(i) / double(steps - 1);
    grid.push_back(uint64_t(std::llround(double(lo) * std::pow(ratio, f))));
  }
  grid.front() = lo;
  grid.back() = hi;
  grid = [](std::vector<uint64_t> g) {
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
  }(std::move(grid));
  return grid;
}

DseResult optimize(const LayerShape& layer, const DesignSpace& space,
                   uint64_t sram_budget, Evaluator ev, const BusConfig& bus,
                   const DramConfig& dram, const AccelConfig& accel,
                   const std::vector<uint64_t>& grid, uint32_t workers) {
  if (sram_budget == 0) throw ConfigError("sram_budget must be positive");

  DseResult res;
  res.points = feasible_points(layer, space, sram_budget);
  parallel_for(res.points.size(), workers, [&](size_t i) {
    evaluate_point(res.points[i], layer, ev, bus, dram, accel);
  });
  res.evaluated = res.points.size();
  res.simulated = ev == Evaluator::Simulate ? res.points.size() : 0;
  res.best = res.points[best_index(res.points)];

  std::vector<uint64_t> g = grid;
  if (g.empty()) {
    uint64_t lo = res.points.front().footprint;
    for (const DsePoint& p : res.points) lo = std::min(lo, p.footprint);
    g = budget_grid(lo, sram_budget, 8);
  }
  res.budget_curve = curve_from_points(res.points, g);
  return res;
}

DseResult hybrid_optimize(const LayerShape& layer, const DesignSpace& space,
                          uint64_t sram_budget, double top_fraction,
                          const BusConfig& bus, const DramConfig& dram,
                          const AccelConfig& accel, Evaluator rank_by,
                          uint32_t workers) {
  if (!(top_fraction > 0.0) || top_fraction > 1.0)
    throw ConfigError("top_fraction must be in (0, 1]");
  if (rank_by == Evaluator::Simulate)
    throw ConfigError("hybrid ranking needs an analytic evaluator");

  DseResult res;
  res.points = feasible_points(layer, space, sram_budget);
  parallel_for(res.points.size(), workers, [&](size_t i) {
    evaluate_point(res.points[i], layer, rank_by, bus, dram, accel);
  });
  res.evaluated = res.points.size();

  // Rank descending by the analytic model, deterministic tie-break.
  std::vector<size_t> order(res.points.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const DsePoint& pa = res.points[a];
    const DsePoint& pb = res.points[b];
    if (pa.perf_estimate != pb.perf_estimate)
      return pa.perf_estimate > pb.perf_estimate;
    return pa.footprint < pb.footprint;
  });

  const size_t k = std::min<size_t>(
      res.points.size(),
      size_t(std::ceil(top_fraction * double(res.points.size()))));
  parallel_for(k, workers, [&](size_t i) {
    DsePoint& p = res.points[order[i]];
    p.perf_simulated = simulate(layer, p.tile, bus, dram, accel).performance;
  });
  res.simulated = k;

  size_t best = order[0];
  for (size_t i = 1; i < k; ++i) {
    const DsePoint& a = res.points[order[i]];
    const DsePoint& b = res.points[best];
    if (*a.perf_simulated > *b.perf_simulated ||
        (*a.perf_simulated == *b.perf_simulated && a.footprint < b.footprint))
      best = order[i];
  }
  res.best = res.points[best];

  std::vector<DsePoint> simulated;
  for (size_t i = 0; i < k; ++i) simulated.push_back(res.points[order[i]]);
  uint64_t lo = simulated.front().footprint;
  for (const DsePoint& p : simulated) lo = std::min(lo, p.footprint);
  res.budget_curve = curve_from_points(simulated, budget_grid(lo, sram_budget, 8));
  return res;
}

// ============================================================================
// Multi-layer tiling
// ============================================================================

MultiLayerResult optimize_multilayer(const std::vector<LayerShape>& layers,
                                     const std::vector<uint32_t>& um_set,
                                     const std::vector<uint32_t>& uc_set,
                                     const DesignSpace& space,
                                     uint64_t sram_budget, TilingMode mode,
                                     const BusConfig& bus,
                                     const DramConfig& dram,
                                     const AccelConfig& accel) {
  if (layers.empty()) throw ConfigError("no layers given");
  if (sram_budget == 0) throw ConfigError("sram_budget must be positive");
  const auto ums = sorted_unique(um_set);
  const auto ucs = sorted_unique(uc_set);
  if (ums.empty() || ucs.empty())
    throw EmptySpace("empty unroll set");
  const auto unrolls = packed_pairs(ucs, ums, space.mac_budget);
  if (unrolls.empty()) throw EmptySpace("no unroll pair fits the MAC budget");

  const auto tbs = sorted_unique(space.tb_set);
  const auto tcs = sorted_unique(space.tc_set);
  const auto tms = sorted_unique(space.tm_set);
  const auto tes = sorted_unique(space.te_set);
  const auto tfs = sorted_unique(space.tf_set);
  if (tbs.empty() || tcs.empty() || tms.empty() || tes.empty() || tfs.empty())
    throw EmptySpace("design space has an empty value set");

  double total_macs = 0.0;
  for (const LayerShape& l : layers) total_macs += double(l.total_macs());

  MultiLayerResult best;
  bool found = false;

  for (const auto& [uc, um] : unrolls) {
    MultiLayerResult cand;
    cand.um = um;
    cand.uc = uc;
    double total_cycles = 0.0;
    bool pair_ok = true;

    for (const LayerShape& layer : layers) {
      // Candidate (tc, tm) per mode: tied to the unroll, or any multiple of it.
      std::vector<std::pair<uint32_t, uint32_t>> ctms;
      if (mode == TilingMode::Constrained) {
        ctms.emplace_back(uc, um);
      } else {
        for (uint32_t tc : tcs)
          for (uint32_t tm : tms)
            if (tc % uc == 0 && tm % um == 0) ctms.emplace_back(tc, tm);
      }

      std::vector<TileConfig> cands;
      for (uint32_t tb : tbs)
        for (const auto& [tc, tm] : ctms)
          for (uint32_t te : tes)
            for (uint32_t tf : tfs) {
              TileConfig t;
              t.tb = tb;
              t.tc = tc;
              t.tm = tm;
              t.te = te;
              t.tf = tf;
              t.um = um;
              t.uc = uc;
              if (!fits(layer, t)) continue;
              if (space.divisible_only && !divides_dims(layer, t)) continue;
              if (buffer_footprint(layer, t) > sram_budget) continue;
              cands.push_back(t);
            }
      if (cands.empty()) {
        pair_ok = false;
        break;
      }

      std::vector<double> cycles(cands.size());
      parallel_for(cands.size(), 0, [&](size_t i) {
        cycles[i] =
            double(estimate(layer, cands[i], bus, dram, accel).total_cycles);
      });
      size_t pick = 0;
      for (size_t i = 1; i < cands.size(); ++i)
        if (cycles[i] < cycles[pick]) pick = i;
      cand.tiles.push_back(cands[pick]);
      cand.layer_cycles.push_back(cycles[pick]);
      total_cycles += cycles[pick];
    }

    if (!pair_ok) continue;
    cand.aggregate_perf = 2.0 * total_macs / total_cycles;
    if (!found || cand.aggregate_perf > best.aggregate_perf) {
      best = cand;
      found = true;
    }
  }

  if (!found)
    throw Infeasible("no shared unroll admits a feasible tile for every layer");
  return best;
}

}  // namespace commsim
