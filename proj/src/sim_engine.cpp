// sim_engine.cpp — wires the models together, runs to completion, exports
#include "commsim/sim_engine.hpp"

#include <fstream>

#include "json.hpp"

namespace commsim {

SimReport simulate(const LayerShape& layer, const TileConfig& tile,
                   const BusConfig& bus_cfg, const DramConfig& dram_cfg,
                   const AccelConfig& accel, bool collect_traces,
                   uint64_t pass_detail_limit) {
  bus_cfg.validate();
  dram_cfg.validate();
  const PassPlan plan = plan_passes(layer, tile, accel.pipeline_fill);
  if (accel.strict_sram &&
      buffer_footprint(layer, tile) > accel.sram_budget)
    throw ConfigError("tile footprint exceeds the SRAM budget (strict mode)");
  const MemLayout map = MemLayout::build(layer, dram_cfg);

  EventQueue q;
  DramModel dram(q, dram_cfg, nullptr, collect_traces);
  BusModel bus(q, bus_cfg, dram_cfg, dram, NUM_DMACS, nullptr, collect_traces);
  dram.set_listener(&bus);
  PassController ctrl(q, layer, plan, map, accel, bus_cfg, dram_cfg, bus,
                      pass_detail_limit);
  bus.set_listener(&ctrl);

  ctrl.start();
  q.run();

  SimReport r;
  r.total_cycles = ctrl.end_cycle();
  r.pass_count = plan.pass_count;
  r.performance =
      r.total_cycles
          ? 2.0 * double(layer.total_macs()) / double(r.total_cycles)
          : 0.0;
  r.per_pass = ctrl.timelines();
  r.beats = ctrl.beats_by_dmac();
  r.dram_commands = dram.command_counts();
  r.violations = dram.violations() + bus.violations() + ctrl.violations();
  if (!ctrl.finished()) r.violations++;  // queue drained with work pending

  // conservation: delivered beats must equal the planned element amounts
  uint64_t want_ifm = 0, want_w = 0, want_ofm = 0;
  for (uint64_t p = 0; p < plan.pass_count; ++p) {
    const TileOrigin o = plan.origin_of(p);
    want_ifm += plan.ifm_pixels_at(o);
    want_w += plan.w_weights_at(o);
    if (plan.closes_store_group(p)) want_ofm += plan.ofm_pixels_at(o);
  }
  if (r.beats[DMAC_IFM] != want_ifm || r.beats[DMAC_W] != want_w ||
      r.beats[DMAC_OFM] != want_ofm)
    r.violations++;

  for (const PassTimeline& t : r.per_pass) {
    const BandwidthReport bw = measure_bandwidth(t);
    uint32_t idx = 0;
    size_t k = 0;
    for (const DmaInterval& iv : t.intervals) {
      if (iv.end <= iv.start) continue;
      IntervalBandwidthRow row;
      row.pass = t.pass_index;
      row.interval = idx++;
      row.start = iv.start;
      row.end = iv.end;
      row.active_mask = iv.active_mask;
      row.bandwidth = bw.per_interval[k++];
      for (int d = 0; d < NUM_DMACS; ++d) row.beats[d] = iv.beats[d];
      r.per_interval_bandwidth.push_back(row);
    }
  }

  if (collect_traces) {
    r.traces_enabled = true;
    r.dram_trace = dram.trace();
    r.bus_trace = bus.trace();
  }
  return r;
}

void emit_trace(const SimReport& report, TraceKind kind,
                const std::string& path) {
  if (kind != TraceKind::Passes && !report.traces_enabled)
    throw TraceUnavailable("run simulate with traces enabled first");
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open trace path: " + path);

  switch (kind) {
    case TraceKind::Dram: {
      os << "cycle,kind,bank,row,col,dmac\n";
      for (const DramCommand& c : report.dram_trace)
        os << c.cycle << ',' << to_string(c.kind) << ',' << unsigned(c.bank)
           << ',' << c.row << ',' << c.col << ',' << unsigned(c.source_dmac)
           << '\n';
      break;
    }
    case TraceKind::Bus: {
      os << "cycle,txn,phase,beat\n";
      for (const PhaseRecord& p : report.bus_trace)
        os << p.cycle << ',' << p.txn << ',' << to_string(p.phase) << ','
           << p.beat << '\n';
      break;
    }
    case TraceKind::Passes: {
      nlohmann::json out = nlohmann::json::array();
      for (const PassTimeline& t : report.per_pass) {
        nlohmann::json row;
        row["pass"] = t.pass_index;
        row["comm_start"] = t.comm_start;
        row["comm_end"] = t.comm_end;
        row["compute_start"] = t.compute_start;
        row["compute_end"] = t.compute_end;
        nlohmann::json ivs = nlohmann::json::array();
        for (const DmaInterval& iv : t.intervals) {
          nlohmann::json j;
          j["start"] = iv.start;
          j["end"] = iv.end;
          nlohmann::json active = nlohmann::json::array();
          for (uint8_t d = 0; d < NUM_DMACS; ++d)
            if (iv.active_mask & (1u << d)) active.push_back(dmac_name(d));
          j["active"] = active;
          j["beats"] = {{"IFM", iv.beats[DMAC_IFM]},
                        {"W", iv.beats[DMAC_W]},
                        {"OFM", iv.beats[DMAC_OFM]}};
          if (iv.end > iv.start) {
            uint64_t n = iv.beats[0] + iv.beats[1] + iv.beats[2];
            j["bandwidth"] = double(n) / double(iv.end - iv.start);
          }
          ivs.push_back(j);
        }
        row["intervals"] = ivs;
        out.push_back(row);
      }
      os << out.dump(2) << '\n';
      break;
    }
  }
}

}  // namespace commsim
