// acceptance_main.cpp — one line per shipped acceptance criterion.
//
// Every check prints exactly one [PASS]/[FAIL] line; the exit code is the
// number of failed criteria.  The heavy criteria (5-8) share one simulated
// sweep of the shipped conv3 space, so the whole binary runs in minutes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "commsim/config.hpp"
#include "commsim/dram.hpp"
#include "commsim/memmap.hpp"

using namespace commsim;

namespace {

int g_failed = 0;

void line(int n, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", n, name,
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failed;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

LayerShape make_layer(uint32_t b, uint32_t c, uint32_t m, uint32_t hw,
                      uint32_t k, uint32_t stride) {
  LayerShape l;
  l.batch = b;
  l.in_ch = c;
  l.out_ch = m;
  l.in_h = hw;
  l.in_w = hw;
  l.k_h = k;
  l.k_w = k;
  l.stride = stride;
  return l;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// --------------------------------------------------------------------------
// 1. 120-element dataset -> 8 bursts, 23 DRAM commands, statically and timed.
void criterion1() {
  const DramConfig dram;
  ContiguousDataset ds{0, 0, 120, DataKind::Ifm};
  const auto bursts = split_into_bursts(ds, 16, dram.page_elements);
  const DramCommandCount n = expand_to_dram_commands(bursts, dram);

  DramConfig no_refresh = dram;
  no_refresh.refresh_period = 0;
  std::vector<std::pair<BurstRequest, cycle_t>> reqs;
  for (const auto& b : bursts) reqs.emplace_back(b, 0);
  const ServiceResult sr = service_trace(reqs, no_refresh);

  const bool ok = bursts.size() == 8 && n.total() == 23 &&
                  sr.counts.total() == 23 &&
                  sr.counts.activates == n.activates &&
                  sr.counts.column_cmds == n.column_cmds &&
                  sr.counts.precharges == n.precharges;
  line(1, "command-mapping", ok,
       fmt("120 elements -> %zu bursts, %llu static / %llu timed commands",
           bursts.size(), (unsigned long long)n.total(),
           (unsigned long long)sr.counts.total()));
}

// --------------------------------------------------------------------------
// 2. Episode shapes of the two short burst pairs.
void criterion2() {
  const DramConfig dram;
  auto pair = [](uint32_t a, uint32_t b) {
    return std::vector<BurstRequest>{BurstRequest{0, 0, a, Dir::Read, 0},
                                     BurstRequest{1, a, b, Dir::Read, 0}};
  };
  const DramCommandCount a = expand_to_dram_commands(pair(16, 16), dram);
  const DramCommandCount b = expand_to_dram_commands(pair(16, 2), dram);
  const bool ok = a.total() == 6 && a.column_cmds == 4 && b.total() == 5 &&
                  b.column_cmds == 3;
  line(2, "episode-shapes", ok,
       fmt("(16,16) -> %llu cmds / %llu reads, (16,2) -> %llu / %llu",
           (unsigned long long)a.total(), (unsigned long long)a.column_cmds,
           (unsigned long long)b.total(), (unsigned long long)b.column_cmds));
}

// --------------------------------------------------------------------------
// 3. Pass structure of the 12x12x12 example: 48 passes, stores every 4th.
void criterion3() {
  const LayerShape layer = make_layer(1, 12, 12, 12, 3, 1);
  TileConfig tile{1, 3, 4, 5, 5, 4, 3};
  const PassPlan plan = plan_passes(layer, tile, AccelConfig{}.pipeline_fill);
  bool stores_ok = plan.ofm_store_period == 4;
  for (uint64_t p = 0; p < plan.pass_count; ++p)
    stores_ok = stores_ok && plan.closes_store_group(p) == (p % 4 == 3);
  const bool ok = plan.pass_count == 48 && stores_ok;
  line(3, "pass-structure", ok,
       fmt("%llu passes, store period %u",
           (unsigned long long)plan.pass_count, plan.ofm_store_period));
}

// --------------------------------------------------------------------------
// 4. Weight dataset sizes: full-depth tiles give 2 datasets of 54; shallower
//    channel tiles give strictly more, strictly smaller ones.
void criterion4() {
  const LayerShape layer = make_layer(1, 6, 2, 5, 3, 1);
  const DramConfig dram;
  const MemLayout map = MemLayout::build(layer, dram);

  auto weight_sets = [&](uint32_t tc) {
    TileConfig tile{1, tc, 2, 3, 3, 2, tc};
    const PassPlan plan = plan_passes(layer, tile, 8);
    uint64_t count = 0, max_len = 0;
    for (uint64_t p = 0; p < plan.pass_count; ++p) {
      const auto sets = contiguous_datasets(DataKind::Weight, layer, map, plan,
                                            plan.origin_of(p));
      count += sets.size();
      for (const auto& s : sets) max_len = std::max(max_len, s.length);
    }
    return std::pair<uint64_t, uint64_t>{count, max_len};
  };

  const auto full = weight_sets(6);
  bool ok = full.first == 2 && full.second == 54;
  for (uint32_t tc = 1; tc < 6; ++tc) {
    const auto part = weight_sets(tc);
    ok = ok && part.first > full.first && part.second < full.second;
  }
  line(4, "weight-datasets", ok,
       fmt("TC=6 -> %llu datasets of %llu; every TC<6 splits them further",
           (unsigned long long)full.first, (unsigned long long)full.second));
}

// --------------------------------------------------------------------------
// 5-7. One simulated sweep of the shipped conv3 space feeds the estimator
//      fidelity, budget-curve, and hybrid-filtering criteria.
void criteria5to7() {
  const LayerShape conv3 = layer_preset("alexnet-conv3");
  const DesignSpace space = default_space();
  const BusConfig bus;
  const DramConfig dram;
  const AccelConfig accel;
  const uint64_t budget = 150000;  // admits the whole shipped space

  const auto grid = budget_grid(4432, budget, 12);
  const auto t0 = std::chrono::steady_clock::now();
  const DseResult sweep =
      optimize(conv3, space, budget, Evaluator::Simulate, bus, dram, accel,
               grid);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  // 5. Mean |cycle error| vs the simulator, proposed and conventional.
  //    |est_cycles - sim_cycles| / sim_cycles == |ps - pe| / pe on perf.
  double prop_sum = 0.0, conv_sum = 0.0;
  for (const DsePoint& p : sweep.points) {
    const double ps = *p.perf_simulated;
    const double pe = p.perf_estimate;
    const double pc =
        estimate_conventional(conv3, p.tile, accel, kScaleConventional)
            .performance;
    prop_sum += std::fabs(ps - pe) / pe;
    conv_sum += std::fabs(ps - pc) / pc;
  }
  const double n = double(sweep.points.size());
  const double prop_mean = 100.0 * prop_sum / n;
  const double conv_mean = 100.0 * conv_sum / n;
  const bool ok5 = sweep.points.size() >= 200 && prop_mean <= 10.0 &&
                   prop_mean < conv_mean && conv_mean >= 20.0;
  line(5, "estimator-fidelity", ok5,
       fmt("%zu points: mean error proposed %.2f%%, conventional %.2f%% "
           "(%.0fs sweep)",
           sweep.points.size(), prop_mean, conv_mean, wall));

  // 6. Best-performance-vs-budget curve is non-decreasing over >= 8 budgets.
  bool ok6 = sweep.budget_curve.size() >= 8;
  for (size_t i = 1; i < sweep.budget_curve.size(); ++i)
    ok6 = ok6 && sweep.budget_curve[i].second >=
                     sweep.budget_curve[i - 1].second &&
          sweep.budget_curve[i].first > sweep.budget_curve[i - 1].first;
  line(6, "budget-monotonicity", ok6,
       fmt("%zu budget points, %.3f -> %.3f ops/cycle",
           sweep.budget_curve.size(), sweep.budget_curve.front().second,
           sweep.budget_curve.back().second));

  // 7. Hybrid filtering at 1% must recover >= 95% of the simulated best;
  //    the conventional ranking may not beat the proposed one.
  const double best = sweep.best.perf();
  const DseResult hp = hybrid_optimize(conv3, space, budget, 0.01, bus, dram,
                                       accel, Evaluator::Estimate);
  const DseResult hc = hybrid_optimize(conv3, space, budget, 0.01, bus, dram,
                                       accel, Evaluator::Conventional);
  const double rec_p = *hp.best.perf_simulated / best;
  const double rec_c = *hc.best.perf_simulated / best;
  const bool ok7 = rec_p >= 0.95 && rec_c <= rec_p + 1e-12;
  line(7, "hybrid-filtering", ok7,
       fmt("top 1%% recovery: proposed %.1f%%, conventional %.1f%%",
           100.0 * rec_p, 100.0 * rec_c));
}

// --------------------------------------------------------------------------
// 8. Unconstrained tiling for two layers with a shared array shape: never
//    worse than constrained, strictly better on at least one budget.
void criterion8() {
  const std::vector<LayerShape> layers{layer_preset("alexnet-conv1"),
                                       layer_preset("alexnet-conv3")};
  const DesignSpace space = default_space();
  const BusConfig bus;
  const DramConfig dram;
  const AccelConfig accel;

  bool never_worse = true, strictly_better = false;
  std::string gains;
  for (uint64_t budget : {uint64_t(65536), uint64_t(131072),
                          uint64_t(262144)}) {
    const auto con = optimize_multilayer(layers, default_unroll_m(),
                                         default_unroll_c(), space, budget,
                                         TilingMode::Constrained, bus, dram,
                                         accel);
    const auto un = optimize_multilayer(layers, default_unroll_m(),
                                        default_unroll_c(), space, budget,
                                        TilingMode::Unconstrained, bus, dram,
                                        accel);
    never_worse =
        never_worse && un.aggregate_perf >= con.aggregate_perf - 1e-9;
    const double gain =
        100.0 * (un.aggregate_perf - con.aggregate_perf) / con.aggregate_perf;
    strictly_better = strictly_better || gain > 0.01;
    gains += fmt("%s%llu: %+.1f%%", gains.empty() ? "" : ", ",
                 (unsigned long long)budget, gain);
  }
  line(8, "unconstrained-gain", never_worse && strictly_better, gains);
}

// --------------------------------------------------------------------------
// 9. 100 randomized small configs: zero protocol/bank violations and exact
//    beat conservation against the pass plan.
void criterion9() {
  std::mt19937 rng(12345);
  auto pick = [&](std::vector<uint32_t> v) {
    return v[rng() % v.size()];
  };
  auto range = [&](uint32_t lo, uint32_t hi) {
    return lo + rng() % (hi - lo + 1);
  };

  uint64_t violations = 0, mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    const uint32_t k = pick({1, 3});
    const uint32_t hw = range(std::max(5u, k), 10);
    const LayerShape layer =
        make_layer(range(1, 2), range(2, 8), range(2, 8), hw, k, 1);
    const auto [oh, ow] = derive_output_dims(layer);
    TileConfig tile;
    tile.tb = range(1, layer.batch);
    tile.tc = range(1, layer.in_ch);
    tile.tm = range(1, layer.out_ch);
    tile.te = range(1, oh);
    tile.tf = range(1, ow);
    tile.um = tile.tm;
    tile.uc = tile.tc;

    BusConfig bus;
    bus.max_outstanding = pick({1, 2, 3, 4});
    bus.request_latency = pick({2, 5, 9, 14});
    bus.inter_request_gap = pick({0, 1, 3});
    bus.max_burst_beats = pick({8, 16});

    DramConfig dram;
    dram.num_banks = pick({4, 8});
    dram.t_rcd = range(4, 12);
    dram.t_cl = range(4, 12);
    dram.t_rp = range(4, 12);
    dram.t_rc = dram.t_rcd + dram.t_rp + range(0, 6);
    dram.t_burst = pick({2, 4});
    dram.turnaround = pick({2, 4, 6});
    dram.close_after_cols = pick({2, 4, 8});
    dram.refresh_period = pick({0, 700});

    const SimReport r =
        simulate(layer, tile, bus, dram, AccelConfig{});
    violations += r.violations;

    const PassPlan plan = plan_passes(layer, tile, AccelConfig{}.pipeline_fill);
    uint64_t ifm = 0, w = 0;
    for (uint64_t p = 0; p < plan.pass_count; ++p) {
      ifm += plan.ifm_pixels_at(plan.origin_of(p));
      w += plan.w_weights_at(plan.origin_of(p));
    }
    const uint64_t ofm = uint64_t(layer.batch) * layer.out_ch * oh * ow;
    if (r.beats[0] != ifm || r.beats[1] != w || r.beats[2] != ofm)
      ++mismatches;
  }
  line(9, "protocol-invariants", violations == 0 && mismatches == 0,
       fmt("100 random configs: %llu violations, %llu beat mismatches",
           (unsigned long long)violations, (unsigned long long)mismatches));
}

// --------------------------------------------------------------------------
// 10. Determinism: identical runs give byte-identical reports and traces.
void criterion10() {
  const LayerShape layer = make_layer(1, 8, 8, 6, 3, 1);
  TileConfig tile{1, 4, 4, 4, 4, 4, 4};
  const SimReport a = simulate(layer, tile, BusConfig{}, DramConfig{},
                               AccelConfig{}, true);
  const SimReport b = simulate(layer, tile, BusConfig{}, DramConfig{},
                               AccelConfig{}, true);
  bool ok = report_to_json(a) == report_to_json(b);
  const std::pair<TraceKind, const char*> kinds[] = {
      {TraceKind::Dram, "/tmp/commsim_acc_dram"},
      {TraceKind::Bus, "/tmp/commsim_acc_bus"},
      {TraceKind::Passes, "/tmp/commsim_acc_passes"},
  };
  for (const auto& [kind, base] : kinds) {
    const std::string p1 = std::string(base) + "_a";
    const std::string p2 = std::string(base) + "_b";
    emit_trace(a, kind, p1);
    emit_trace(b, kind, p2);
    const std::string s1 = slurp(p1), s2 = slurp(p2);
    ok = ok && !s1.empty() && s1 == s2;
    std::remove(p1.c_str());
    std::remove(p2.c_str());
  }
  line(10, "determinism", ok, "reports and all three traces byte-identical");
}

// --------------------------------------------------------------------------
// 11. The interval step matches the worked two-stream example by hand.
void criterion11() {
  IntervalEstimate iv;
  iv.D = 2;
  iv.U = {1.0, 1.0};
  iv.P = {1200.0, 180.0};
  iv.C = {120.0, 18.0};
  iv.Bc = {8, 2};
  const double dur = step4_interval_duration(iv);
  // By hand: R=(80,20) bursts, m=20, A=(300,180) -> 300 cycles, P=(900,0).
  const bool ok = std::fabs(dur - 300.0) < 1e-9 &&
                  std::fabs(iv.P[0] - 900.0) < 1e-9 &&
                  std::fabs(iv.P[1]) < 1e-9;
  line(11, "interval-oracle", ok,
       fmt("duration %.0f, remaining (%.0f, %.0f)", dur, iv.P[0], iv.P[1]));
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criteria5to7();
  criterion8();
  criterion9();
  criterion10();
  criterion11();
  std::printf("%d/11 criteria passed\n", 11 - g_failed);
  return g_failed == 0 ? 0 : 1;
}
