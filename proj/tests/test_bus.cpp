#include "doctest.h"

#include <map>

#include "commsim/accelerator.hpp"
#include "commsim/bus.hpp"

using namespace commsim;

namespace {

struct Collector : BusListener {
  std::vector<std::pair<uint64_t, cycle_t>> done;
  void burst_complete(uint8_t, uint64_t cookie, cycle_t cycle) override {
    done.emplace_back(cookie, cycle);
  }
};

struct Rig {
  EventQueue q;
  DramConfig dram_cfg;
  BusConfig bus_cfg;
  DramModel dram;
  BusModel bus;
  Collector sink;

  explicit Rig(const BusConfig& bc, uint32_t lanes = 1)
      : dram_cfg([] {
          DramConfig d;
          d.refresh_period = 0;
          return d;
        }()),
        bus_cfg(bc),
        dram(q, dram_cfg, nullptr, true),
        bus(q, bus_cfg, dram_cfg, dram, lanes, nullptr, true) {
    dram.set_listener(&bus);
    bus.set_listener(&sink);
  }

  void drain() {
    while (q.step()) {
    }
  }
};

}  // namespace

TEST_SUITE("bus") {

TEST_CASE("a paced single lane respects the request gap and the window") {
  BusConfig bc;
  bc.inter_request_gap = 10;
  Rig rig(bc);
  for (uint32_t i = 0; i < 5; ++i)
    rig.bus.push_burst(0, BurstRequest{i, addr_t(i) * 16, 16, Dir::Read, 0}, i);
  rig.drain();

  REQUIRE(rig.sink.done.size() == 5);
  const cycle_t want[5] = {41, 57, 82, 98, 123};
  for (size_t i = 0; i < 5; ++i) {
    CHECK(rig.sink.done[i].first == i);  // delivery follows grant order
    CHECK(rig.sink.done[i].second == want[i]);
  }
  CHECK(rig.bus.violations() == 0);
  CHECK(rig.bus.grant_count(0) == 5);

  // Grant spacing honors the gap.
  std::vector<cycle_t> grants;
  for (const auto& r : rig.bus.trace())
    if (r.phase == ProtocolPhase::BegReq) grants.push_back(r.cycle);
  REQUIRE(grants.size() == 5);
  for (size_t i = 1; i < grants.size(); ++i)
    CHECK(grants[i] - grants[i - 1] >= 10);
}

TEST_CASE("phases of one transaction are ordered and beats dense") {
  Rig rig(BusConfig{});
  rig.bus.push_burst(0, BurstRequest{0, 0, 16, Dir::Read, 0}, 7);
  rig.drain();

  std::map<uint64_t, std::vector<PhaseRecord>> by_txn;
  for (const auto& r : rig.bus.trace()) by_txn[r.txn].push_back(r);
  REQUIRE(by_txn.size() == 1);
  const auto& rows = by_txn.begin()->second;

  cycle_t req = 0, req_end = 0;
  std::vector<uint32_t> beats;
  cycle_t last = 0;
  for (const auto& r : rows) {
    CHECK(r.cycle >= last);
    last = r.cycle;
    if (r.phase == ProtocolPhase::BegReq) req = r.cycle;
    if (r.phase == ProtocolPhase::EndReq) req_end = r.cycle;
    if (r.phase == ProtocolPhase::BegRsp) {
      CHECK(r.cycle > req_end);
      beats.push_back(r.beat);
    }
  }
  CHECK(req_end > req);
  REQUIRE(beats.size() == 16);
  for (uint32_t i = 0; i < 16; ++i) CHECK(beats[i] == i);
}

TEST_CASE("the shared data channel carries one beat per cycle") {
  Rig rig(BusConfig{}, 2);
  // Two lanes pulling from different banks at once.
  for (uint32_t i = 0; i < 3; ++i) {
    rig.bus.push_burst(0, BurstRequest{i, addr_t(i) * 16, 16, Dir::Read, 0}, i);
    rig.bus.push_burst(1, BurstRequest{i, 4096 + addr_t(i) * 16, 16, Dir::Read, 1},
                       100 + i);
  }
  rig.drain();
  REQUIRE(rig.sink.done.size() == 6);

  std::map<cycle_t, int> beats_at;
  for (const auto& r : rig.bus.trace())
    if (r.phase == ProtocolPhase::BegRsp) beats_at[r.cycle]++;
  for (const auto& [cycle, n] : beats_at) CHECK(n == 1);
  CHECK(rig.bus.violations() == 0);
}

TEST_CASE("issue rejects once the outstanding window is full") {
  Rig rig(BusConfig{});  // max_outstanding = 2
  rig.bus.issue(BurstRequest{0, 0, 16, Dir::Read, 0}, 0);
  rig.bus.issue(BurstRequest{1, 16, 16, Dir::Read, 0}, 1);
  CHECK_THROWS_AS(rig.bus.issue(BurstRequest{2, 32, 16, Dir::Read, 0}, 2),
                  IssueRejected);
  rig.drain();
  CHECK(rig.sink.done.size() == 2);
}

TEST_CASE("writes acknowledge after their data lands") {
  Rig rig(BusConfig{});
  rig.bus.push_burst(0, BurstRequest{0, 0, 16, Dir::Write, 0}, 0);
  rig.drain();
  REQUIRE(rig.sink.done.size() == 1);
  CHECK(rig.sink.done[0].second > 16);  // 16 data beats plus protocol overhead
  CHECK(rig.bus.beats_delivered(0) == 16);
}

}  // TEST_SUITE
