#include "doctest.h"

#include <algorithm>
#include <set>

#include "commsim/dse.hpp"
#include "commsim/estimator.hpp"

using namespace commsim;

namespace {

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

LayerShape big_layer() { return make_layer(3, 256, 384, 15, 3, 1); }
LayerShape tiny_layer() { return make_layer(1, 8, 8, 6, 3, 1); }

DesignSpace tiny_space() {
  DesignSpace s;
  s.tb_set = {1};
  s.tc_set = {2, 4};
  s.tm_set = {2, 4};
  s.te_set = {2, 4};
  s.tf_set = {2, 4};
  s.mac_budget = 8;
  return s;
}

bool same_tile(const TileConfig& a, const TileConfig& b) {
  return a.tb == b.tb && a.tc == b.tc && a.tm == b.tm && a.te == b.te &&
         a.tf == b.tf && a.um == b.um && a.uc == b.uc;
}

}  // namespace

TEST_SUITE("dse") {

TEST_CASE("the mac budget keeps only maximal packings") {
  DesignSpace s;
  s.tb_set = {1};
  s.tc_set = {2, 3, 6};
  s.tm_set = {21, 42, 64};
  s.te_set = {7};
  s.tf_set = {13};
  s.mac_budget = 128;
  const auto pts = enumerate(s, big_layer());
  REQUIRE(pts.size() == 3);
  std::multiset<uint64_t> products;
  for (const auto& t : pts) products.insert(uint64_t(t.tc) * t.tm);
  CHECK(products == std::multiset<uint64_t>{126, 126, 128});

  s.mac_budget = 0;  // unlimited: the full cartesian grid survives
  CHECK(enumerate(s, big_layer()).size() == 9);
}

TEST_CASE("a published-style grid enumerates in set order") {
  DesignSpace s;
  s.tb_set = {1, 2, 3};
  s.tc_set = {6, 3, 2};
  s.tm_set = {21, 42, 64};
  s.te_set = {7, 13};
  s.tf_set = {13};
  s.mac_budget = 128;
  const auto pts = enumerate(s, big_layer());
  REQUIRE(pts.size() == 18);
  const TileConfig& first = pts.front();
  CHECK(first.tb == 1);
  CHECK(first.tc == 2);
  CHECK(first.tm == 64);
  CHECK(first.te == 7);
  CHECK(first.tf == 13);
  CHECK(first.um == 64);  // constrained mode: unroll = tile
  CHECK(first.uc == 2);

  DesignSpace one = s;
  one.tb_set = {2};
  one.tc_set = {2};
  one.tm_set = {64};
  one.te_set = {13};
  CHECK(enumerate(one, big_layer()).size() == 1);
}

TEST_CASE("degenerate spaces fail loudly") {
  DesignSpace empty = tiny_space();
  empty.tm_set.clear();
  CHECK_THROWS_AS(enumerate(empty, tiny_layer()), EmptySpace);

  DesignSpace starved = tiny_space();
  starved.mac_budget = 2;  // every tc*tm product is at least 8
  CHECK_THROWS_AS(enumerate(starved, tiny_layer()), EmptySpace);

  CHECK_THROWS_AS(optimize(tiny_layer(), tiny_space(), 1, Evaluator::Estimate,
                           BusConfig{}, DramConfig{}, AccelConfig{}),
                  Infeasible);
}

TEST_CASE("optimize returns the argmax of the chosen evaluator") {
  const auto r = optimize(tiny_layer(), tiny_space(), 500, Evaluator::Estimate,
                          BusConfig{}, DramConfig{}, AccelConfig{});
  REQUIRE(r.points.size() == 8);
  CHECK(r.evaluated == 8);
  CHECK(r.simulated == 0);

  // Recompute the winner by hand over the reported points.
  size_t arg = 0, arg3 = 0;
  for (size_t i = 1; i < r.points.size(); ++i) {
    if (r.points[i].perf_estimate > r.points[arg].perf_estimate) arg = i;
    if (3.0 * r.points[i].perf_estimate > 3.0 * r.points[arg3].perf_estimate)
      arg3 = i;
  }
  CHECK(arg == arg3);  // positive rescale cannot move the argmax
  CHECK(same_tile(r.best.tile, r.points[arg].tile));
  CHECK(r.best.perf_estimate == doctest::Approx(r.points[arg].perf_estimate));

  // The estimate agrees with calling the estimator directly.
  const EstimateReport direct = estimate(tiny_layer(), r.best.tile,
                                         BusConfig{}, DramConfig{},
                                         AccelConfig{});
  CHECK(r.best.perf_estimate == doctest::Approx(direct.performance));
}

TEST_CASE("the budget curve rises toward the unconstrained best") {
  const auto r = optimize(tiny_layer(), tiny_space(), 500, Evaluator::Estimate,
                          BusConfig{}, DramConfig{}, AccelConfig{});
  REQUIRE(r.budget_curve.size() >= 2);
  for (size_t i = 1; i < r.budget_curve.size(); ++i) {
    CHECK(r.budget_curve[i].first > r.budget_curve[i - 1].first);
    CHECK(r.budget_curve[i].second >= r.budget_curve[i - 1].second);
  }
  CHECK(r.budget_curve.back().second == doctest::Approx(r.best.perf()));
}

TEST_CASE("simulating the whole shortlist matches plain simulation search") {
  const auto full = optimize(tiny_layer(), tiny_space(), 500,
                             Evaluator::Simulate, BusConfig{}, DramConfig{},
                             AccelConfig{});
  const auto hybrid = hybrid_optimize(tiny_layer(), tiny_space(), 500, 1.0,
                                      BusConfig{}, DramConfig{}, AccelConfig{});
  CHECK(full.simulated == 8);
  CHECK(hybrid.simulated == 8);
  CHECK(same_tile(full.best.tile, hybrid.best.tile));
  REQUIRE(full.best.perf_simulated.has_value());
  REQUIRE(hybrid.best.perf_simulated.has_value());
  CHECK(*full.best.perf_simulated ==
        doctest::Approx(*hybrid.best.perf_simulated));

  // A trimmed shortlist can only do as well or worse.
  const auto trimmed = hybrid_optimize(tiny_layer(), tiny_space(), 500, 0.25,
                                       BusConfig{}, DramConfig{},
                                       AccelConfig{});
  CHECK(trimmed.simulated == 2);
  CHECK(trimmed.best.perf() <= full.best.perf() + 1e-9);
}

TEST_CASE("worker count never changes the answer") {
  const auto one = optimize(tiny_layer(), tiny_space(), 500,
                            Evaluator::Estimate, BusConfig{}, DramConfig{},
                            AccelConfig{}, {}, 1);
  const auto two = optimize(tiny_layer(), tiny_space(), 500,
                            Evaluator::Estimate, BusConfig{}, DramConfig{},
                            AccelConfig{}, {}, 2);
  REQUIRE(one.points.size() == two.points.size());
  CHECK(same_tile(one.best.tile, two.best.tile));
  for (size_t i = 0; i < one.points.size(); ++i) {
    CHECK(same_tile(one.points[i].tile, two.points[i].tile));
    CHECK(one.points[i].perf_estimate ==
          doctest::Approx(two.points[i].perf_estimate));
  }
}

TEST_CASE("shared unrolls trade per-layer freedom for one array shape") {
  const std::vector<uint32_t> um_set{2, 4};
  const std::vector<uint32_t> uc_set{2, 4};
  const std::vector<LayerShape> single{tiny_layer()};
  const auto solo = optimize_multilayer(single, um_set, uc_set, tiny_space(),
                                        500, TilingMode::Constrained,
                                        BusConfig{}, DramConfig{},
                                        AccelConfig{});
  CHECK(solo.tiles.size() == 1);
  CHECK(solo.layer_cycles.size() == 1);
  CHECK(solo.aggregate_perf > 0.0);
  CHECK(solo.layer_cycles[0] > 0.0);

  const std::vector<LayerShape> both{tiny_layer(),
                                     make_layer(1, 8, 8, 8, 3, 1)};
  const auto con = optimize_multilayer(both, um_set, uc_set, tiny_space(), 500,
                                       TilingMode::Constrained, BusConfig{},
                                       DramConfig{}, AccelConfig{});
  const auto un = optimize_multilayer(both, um_set, uc_set, tiny_space(), 500,
                                      TilingMode::Unconstrained, BusConfig{},
                                      DramConfig{}, AccelConfig{});
  CHECK(con.tiles.size() == 2);
  CHECK(un.tiles.size() == 2);
  // Constrained tiles are a subset of the unconstrained search.
  CHECK(un.aggregate_perf >= con.aggregate_perf - 1e-9);
  for (const auto& t : con.tiles) {
    CHECK(t.tm == con.um);
    CHECK(t.tc == con.uc);
  }
}

}  // TEST_SUITE
