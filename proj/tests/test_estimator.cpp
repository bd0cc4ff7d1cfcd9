#include "doctest.h"

#include "commsim/estimator.hpp"

using namespace commsim;

namespace {

LayerShape make_layer(uint32_t b, uint32_t c, uint32_t m, uint32_t h,
                      uint32_t w, uint32_t k, uint32_t stride) {
  LayerShape l;
  l.batch = b;
  l.in_ch = c;
  l.out_ch = m;
  l.in_h = h;
  l.in_w = w;
  l.k_h = k;
  l.k_w = k;
  l.stride = stride;
  return l;
}

TypeBurstProfile two_bursts(uint32_t first, uint32_t second) {
  TypeBurstProfile p;
  p.kind = DataKind::Ifm;
  p.rep = ContiguousDataset{0, 0, first + second, DataKind::Ifm};
  p.dataset_elems = first + second;
  p.bursts_per_dataset = 2;
  p.burst_beats = {first, second};
  p.dataset_count = 1;
  p.total_elems = first + second;
  return p;
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("a full-width window folds into one contiguous dataset") {
  const LayerShape layer = make_layer(1, 1, 2, 24, 24, 1, 1);
  TileConfig tile{1, 1, 2, 5, 24, 2, 1};
  const PassPlan plan = plan_passes(layer, tile, 8);
  const auto profiles = step1_burst_lengths(layer, tile, BusConfig{},
                                            DramConfig{}, plan.origin_of(0));
  const TypeBurstProfile& ifm = profiles[0];
  CHECK(ifm.dataset_count == 1);
  CHECK(ifm.dataset_elems == 120);
  CHECK(ifm.bursts_per_dataset == 8);
  REQUIRE(ifm.burst_beats.size() == 8);
  CHECK(ifm.burst_beats.front() == 16);
  CHECK(ifm.burst_beats.back() == 8);
  CHECK(ifm.total_elems == 120);
}

TEST_CASE("weights stream as one dataset per pass") {
  const LayerShape layer = make_layer(1, 2, 1, 5, 5, 3, 1);
  TileConfig tile{1, 2, 1, 3, 3, 1, 2};
  const PassPlan plan = plan_passes(layer, tile, 8);
  const auto profiles = step1_burst_lengths(layer, tile, BusConfig{},
                                            DramConfig{}, plan.origin_of(0));
  const TypeBurstProfile& w = profiles[1];
  CHECK(w.dataset_elems == 18);
  CHECK(w.bursts_per_dataset == 2);
  REQUIRE(w.burst_beats.size() == 2);
  CHECK(w.burst_beats[0] == 16);
  CHECK(w.burst_beats[1] == 2);
}

TEST_CASE("dataset duration hides the round trip behind long bursts") {
  // Two max-length bursts: the outstanding window keeps the banks busy, so
  // the request latency is absorbed until it outgrows the execution time.
  TypeBurstProfile p = two_bursts(16, 16);
  DramConfig dram;
  BusConfig bus;
  bus.request_latency = 5;
  const DatasetDuration d5 = step2_dataset_duration(p, bus, dram, Dir::Read);
  CHECK(d5.cycles == doctest::Approx(36.0));
  CHECK(d5.regime == Regime::DramLimited);
  bus.request_latency = 15;
  const DatasetDuration d15 = step2_dataset_duration(p, bus, dram, Dir::Read);
  CHECK(d15.cycles == doctest::Approx(36.0));
  CHECK(d15.regime == Regime::DramLimited);
}

TEST_CASE("single-burst datasets expose the round trip") {
  TypeBurstProfile p;
  p.kind = DataKind::Ifm;
  p.rep = ContiguousDataset{0, 0, 16, DataKind::Ifm};
  p.dataset_elems = 16;
  p.bursts_per_dataset = 1;
  p.burst_beats = {16};
  p.dataset_count = 1;
  p.total_elems = 16;
  DramConfig dram;
  BusConfig bus;
  bus.request_latency = 20;
  const DatasetDuration a = step2_dataset_duration(p, bus, dram, Dir::Read);
  bus.request_latency = 30;
  const DatasetDuration b = step2_dataset_duration(p, bus, dram, Dir::Read);
  CHECK(a.cycles == doctest::Approx(40.0));
  CHECK(b.cycles == doctest::Approx(50.0));
  CHECK(b.cycles - a.cycles == doctest::Approx(10.0));  // slope 1 in latency
  CHECK(a.regime == Regime::BusLimited);
  CHECK(b.regime == Regime::BusLimited);
}

TEST_CASE("shared bandwidth splits the channel and honours solo caps") {
  // Alone: capped by the stream's own service rate.
  const auto solo = step3_bandwidth({240.0}, {120.0}, {8});
  REQUIRE(solo.size() == 1);
  CHECK(solo[0] == doctest::Approx(0.5));
  const auto solo_fast = step3_bandwidth({100.0}, {120.0}, {8});
  CHECK(solo_fast[0] == doctest::Approx(1.0));

  // Two saturating equals split the effective channel evenly.
  const auto pair = step3_bandwidth({100.0, 100.0}, {100.0, 100.0}, {1, 1});
  REQUIRE(pair.size() == 2);
  CHECK(pair[0] == doctest::Approx(0.48));
  CHECK(pair[1] == doctest::Approx(0.48));
  CHECK(pair[0] + pair[1] == doctest::Approx(0.96));

  // A slow stream keeps its solo rate and donates the rest of its share.
  const auto skew = step3_bandwidth({1000.0, 100.0}, {100.0, 100.0}, {1, 1});
  CHECK(skew[0] == doctest::Approx(0.1));
  CHECK(skew[1] == doctest::Approx(0.86));
}

TEST_CASE("an interval advances every stream by the same burst count") {
  IntervalEstimate iv;
  iv.D = 2;
  iv.U = {1.0, 1.0};
  iv.P = {1200.0, 180.0};
  iv.C = {120.0, 18.0};
  iv.Bc = {8, 2};
  const double dur = step4_interval_duration(iv);
  // R = (80, 20) bursts, m = 20 -> A = (300, 180), slowest takes 300.
  CHECK(dur == doctest::Approx(300.0));
  CHECK(iv.P[0] == doctest::Approx(900.0));
  CHECK(iv.P[1] == doctest::Approx(0.0));
}

TEST_CASE("full estimate respects compute and channel lower bounds") {
  const LayerShape layer = make_layer(1, 8, 8, 6, 6, 3, 1);
  TileConfig tile{1, 4, 4, 4, 4, 4, 4};
  const PassPlan plan = plan_passes(layer, tile, 8);
  const EstimateReport r =
      estimate(layer, tile, BusConfig{}, DramConfig{}, AccelConfig{});
  CHECK(r.pass_count == plan.pass_count);

  uint64_t compute = 0, moved = 0;
  for (uint64_t p = 0; p < plan.pass_count; ++p) {
    const TileOrigin o = plan.origin_of(p);
    compute += plan.compute_cycles_at(o);
    moved += plan.ifm_pixels_at(o) + plan.w_weights_at(o);
  }
  const auto [oh, ow] = derive_output_dims(layer);
  moved += uint64_t(layer.batch) * layer.out_ch * oh * ow;
  CHECK(r.total_cycles >= compute);        // the array is never idle-free
  CHECK(r.total_cycles >= moved);          // one element per cycle, at best
  CHECK(r.performance > 0.0);
  CHECK(r.per_pass_comm > 0.0);
  CHECK(r.per_pass_compute > 0.0);
}

TEST_CASE("tile shape flips the limiting side") {
  const LayerShape conv3 = make_layer(3, 256, 384, 15, 15, 3, 1);
  // Deep tile: plenty of reuse, compute dominates.
  TileConfig deep{3, 2, 64, 13, 13, 64, 2};
  const EstimateReport a =
      estimate(conv3, deep, BusConfig{}, DramConfig{}, AccelConfig{});
  CHECK(a.per_pass_comm < a.per_pass_compute);
  // Shallow tile: small output block, traffic dominates.
  TileConfig shallow{1, 8, 16, 5, 7, 16, 8};
  const EstimateReport b =
      estimate(conv3, shallow, BusConfig{}, DramConfig{}, AccelConfig{});
  CHECK(b.per_pass_comm > b.per_pass_compute);
  CHECK(b.per_pass_compute < 400.0);
}

TEST_CASE("the fixed-rate baseline charges every element") {
  const LayerShape layer = make_layer(1, 8, 8, 6, 6, 3, 1);
  TileConfig tile{1, 4, 4, 4, 4, 4, 4};
  const EstimateReport r =
      estimate_conventional(layer, tile, AccelConfig{}, {1.0, 1.0, 1.0});
  // Per pass: ifm 4*6*6 + w 4*4*9 + store 64 spread over 2 channel steps.
  CHECK(r.per_pass_comm == doctest::Approx(320.0));
  CHECK(r.per_pass_compute == doctest::Approx(152.0));
  CHECK(r.pass_count == 4);

  const EstimateReport scaled =
      estimate_conventional(layer, tile, AccelConfig{}, {2.0, 2.0, 2.0});
  CHECK(scaled.per_pass_comm == doctest::Approx(640.0));
  CHECK(scaled.total_cycles > r.total_cycles);
}

}  // TEST_SUITE
