#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "commsim/sim_engine.hpp"

using namespace commsim;

namespace {

LayerShape tiny_layer() {
  LayerShape l;
  l.name = "tiny";
  l.batch = 1;
  l.in_ch = 8;
  l.out_ch = 8;
  l.in_h = 6;
  l.in_w = 6;
  l.k_h = 3;
  l.k_w = 3;
  l.stride = 1;
  return l;
}

TileConfig tiny_tile() { return TileConfig{1, 4, 4, 4, 4, 4, 4}; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string s((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  return s;
}

}  // namespace

TEST_SUITE("sim_engine") {

TEST_CASE("the tiny layer runs to its frozen cycle count") {
  const SimReport r = simulate(tiny_layer(), tiny_tile(), BusConfig{},
                               DramConfig{}, AccelConfig{});
  CHECK(r.total_cycles == 1643);
  CHECK(r.pass_count == 4);
  CHECK(r.violations == 0);
  CHECK(r.beats[0] == 576);
  CHECK(r.beats[1] == 576);
  CHECK(r.beats[2] == 128);
  const double macs = double(tiny_layer().total_macs());
  CHECK(r.performance == doctest::Approx(2.0 * macs / double(r.total_cycles)));
}

TEST_CASE("interval rows tile each pass window and conserve beats") {
  const SimReport r = simulate(tiny_layer(), tiny_tile(), BusConfig{},
                               DramConfig{}, AccelConfig{});
  uint64_t sums[NUM_DMACS] = {0, 0, 0};
  uint64_t prev_pass = ~0ull;
  cycle_t prev_end = 0;
  for (const auto& row : r.per_interval_bandwidth) {
    if (row.pass != prev_pass) {
      prev_pass = row.pass;
    } else {
      CHECK(row.start == prev_end);  // contiguous partition
    }
    prev_end = row.end;
    CHECK(row.end >= row.start);
    CHECK(row.active_mask < 8);
    uint64_t moved = 0;
    for (int d = 0; d < NUM_DMACS; ++d) {
      sums[d] += row.beats[d];
      moved += row.beats[d];
    }
    if (row.active_mask == 0) CHECK(moved == 0);  // idle gap rows carry nothing
  }
  CHECK(sums[0] == r.beats[0]);
  CHECK(sums[1] == r.beats[1]);
  CHECK(sums[2] == r.beats[2]);
}

TEST_CASE("refresh can only lengthen a run") {
  DramConfig hot;
  hot.refresh_period = 500;  // several refreshes inside the tiny run
  DramConfig off;
  off.refresh_period = 0;
  const SimReport with = simulate(tiny_layer(), tiny_tile(), BusConfig{}, hot,
                                  AccelConfig{}, true);
  const SimReport without = simulate(tiny_layer(), tiny_tile(), BusConfig{},
                                     off, AccelConfig{});
  CHECK(with.total_cycles >= without.total_cycles);
  size_t refs = 0;
  for (const auto& c : with.dram_trace) refs += c.kind == DramCommand::REF;
  CHECK(refs > 0);
  CHECK(with.violations == 0);
}

TEST_CASE("traces export only when collected") {
  const SimReport bare = simulate(tiny_layer(), tiny_tile(), BusConfig{},
                                  DramConfig{}, AccelConfig{});
  CHECK_THROWS_AS(emit_trace(bare, TraceKind::Dram, "/tmp/commsim_t0.csv"),
                  TraceUnavailable);

  const SimReport full = simulate(tiny_layer(), tiny_tile(), BusConfig{},
                                  DramConfig{}, AccelConfig{}, true);
  emit_trace(full, TraceKind::Dram, "/tmp/commsim_t1.csv");
  emit_trace(full, TraceKind::Bus, "/tmp/commsim_t2.csv");
  emit_trace(full, TraceKind::Passes, "/tmp/commsim_t3.json");
  CHECK(slurp("/tmp/commsim_t1.csv").size() > 100);
  CHECK(slurp("/tmp/commsim_t2.csv").size() > 100);
  CHECK(slurp("/tmp/commsim_t3.json").size() > 100);
  std::remove("/tmp/commsim_t1.csv");
  std::remove("/tmp/commsim_t2.csv");
  std::remove("/tmp/commsim_t3.json");
}

TEST_CASE("identical runs produce identical traces") {
  const SimReport a = simulate(tiny_layer(), tiny_tile(), BusConfig{},
                               DramConfig{}, AccelConfig{}, true);
  const SimReport b = simulate(tiny_layer(), tiny_tile(), BusConfig{},
                               DramConfig{}, AccelConfig{}, true);
  CHECK(a.total_cycles == b.total_cycles);
  REQUIRE(a.dram_trace.size() == b.dram_trace.size());
  REQUIRE(a.bus_trace.size() == b.bus_trace.size());
  for (size_t i = 0; i < a.dram_trace.size(); ++i) {
    CHECK(a.dram_trace[i].cycle == b.dram_trace[i].cycle);
    CHECK(a.dram_trace[i].kind == b.dram_trace[i].kind);
    CHECK(a.dram_trace[i].bank == b.dram_trace[i].bank);
  }
}

}  // TEST_SUITE
