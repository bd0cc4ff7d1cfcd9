// config.cpp — JSON config round-trip, presets, and report serialization.
// nlohmann::json keeps keys sorted, so every dump here is deterministic.

#include "commsim/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace commsim {

namespace {

using nlohmann::json;

// Short fixed formatting for CSV floats; JSON floats use the library's
// shortest-round-trip printer, which is equally stable.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

template <typename T>
T field(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

json layer_to_json(const LayerShape& l) {
  return json{{"name", l.name},     {"batch", l.batch}, {"in_ch", l.in_ch},
              {"out_ch", l.out_ch}, {"in_h", l.in_h},   {"in_w", l.in_w},
              {"k_h", l.k_h},       {"k_w", l.k_w},     {"stride", l.stride},
              {"pad", l.pad}};
}

LayerShape layer_from_json(const json& j) {
  if (j.is_string()) return layer_preset(j.get<std::string>());
  LayerShape l;
  l.name = field<std::string>(j, "name", "");
  l.batch = field<uint32_t>(j, "batch", 1);
  l.in_ch = field<uint32_t>(j, "in_ch", 1);
  l.out_ch = field<uint32_t>(j, "out_ch", 1);
  l.in_h = field<uint32_t>(j, "in_h", 1);
  l.in_w = field<uint32_t>(j, "in_w", 1);
  l.k_h = field<uint32_t>(j, "k_h", 1);
  l.k_w = field<uint32_t>(j, "k_w", 1);
  l.stride = field<uint32_t>(j, "stride", 1);
  l.pad = field<uint32_t>(j, "pad", 0);
  return l;
}

json tile_to_json(const TileConfig& t) {
  return json{{"tb", t.tb}, {"tc", t.tc}, {"tm", t.tm}, {"te", t.te},
              {"tf", t.tf}, {"um", t.um}, {"uc", t.uc}};
}

TileConfig tile_from_json(const json& j) {
  TileConfig t;
  t.tb = field<uint32_t>(j, "tb", 1);
  t.tc = field<uint32_t>(j, "tc", 1);
  t.tm = field<uint32_t>(j, "tm", 1);
  t.te = field<uint32_t>(j, "te", 1);
  t.tf = field<uint32_t>(j, "tf", 1);
  // Unroll defaults to the constrained reading (um = tm, uc = tc).
  t.um = field<uint32_t>(j, "um", t.tm);
  t.uc = field<uint32_t>(j, "uc", t.tc);
  return t;
}

json space_to_json(const DesignSpace& s) {
  return json{{"tb_set", s.tb_set},           {"tc_set", s.tc_set},
              {"tm_set", s.tm_set},           {"te_set", s.te_set},
              {"tf_set", s.tf_set},           {"mac_budget", s.mac_budget},
              {"divisible_only", s.divisible_only}};
}

DesignSpace space_from_json(const json& j) {
  DesignSpace s;
  s.tb_set = field<std::vector<uint32_t>>(j, "tb_set", {});
  s.tc_set = field<std::vector<uint32_t>>(j, "tc_set", {});
  s.tm_set = field<std::vector<uint32_t>>(j, "tm_set", {});
  s.te_set = field<std::vector<uint32_t>>(j, "te_set", {});
  s.tf_set = field<std::vector<uint32_t>>(j, "tf_set", {});
  s.mac_budget = field<uint64_t>(j, "mac_budget", 0);
  s.divisible_only = field<bool>(j, "divisible_only", false);
  return s;
}

json bus_to_json(const BusConfig& b) {
  return json{{"max_outstanding", b.max_outstanding},
              {"request_latency", b.request_latency},
              {"inter_request_gap", b.inter_request_gap},
              {"max_burst_beats", b.max_burst_beats}};
}

BusConfig bus_from_json(const json& j) {
  BusConfig b;
  b.max_outstanding = field<uint32_t>(j, "max_outstanding", b.max_outstanding);
  b.request_latency = field<uint32_t>(j, "request_latency", b.request_latency);
  b.inter_request_gap =
      field<uint32_t>(j, "inter_request_gap", b.inter_request_gap);
  b.max_burst_beats = field<uint32_t>(j, "max_burst_beats", b.max_burst_beats);
  return b;
}

json dram_to_json(const DramConfig& d) {
  return json{{"num_banks", d.num_banks},
              {"page_elements", d.page_elements},
              {"dram_burst_beats", d.dram_burst_beats},
              {"queue_depth", d.queue_depth},
              {"t_rcd", d.t_rcd},
              {"t_cl", d.t_cl},
              {"t_rp", d.t_rp},
              {"t_burst", d.t_burst},
              {"t_rc", d.t_rc},
              {"turnaround", d.turnaround},
              {"close_after_cols", d.close_after_cols},
              {"refresh_period", d.refresh_period},
              {"refresh_duration", d.refresh_duration}};
}

DramConfig dram_from_json(const json& j) {
  DramConfig d;
  d.num_banks = field<uint32_t>(j, "num_banks", d.num_banks);
  d.page_elements = field<uint32_t>(j, "page_elements", d.page_elements);
  d.dram_burst_beats =
      field<uint32_t>(j, "dram_burst_beats", d.dram_burst_beats);
  d.queue_depth = field<uint32_t>(j, "queue_depth", d.queue_depth);
  d.t_rcd = field<uint32_t>(j, "t_rcd", d.t_rcd);
  d.t_cl = field<uint32_t>(j, "t_cl", d.t_cl);
  d.t_rp = field<uint32_t>(j, "t_rp", d.t_rp);
  d.t_burst = field<uint32_t>(j, "t_burst", d.t_burst);
  d.t_rc = field<uint32_t>(j, "t_rc", d.t_rc);
  d.turnaround = field<uint32_t>(j, "turnaround", d.turnaround);
  d.close_after_cols =
      field<uint32_t>(j, "close_after_cols", d.close_after_cols);
  d.refresh_period = field<uint32_t>(j, "refresh_period", d.refresh_period);
  d.refresh_duration =
      field<uint32_t>(j, "refresh_duration", d.refresh_duration);
  return d;
}

json accel_to_json(const AccelConfig& a) {
  return json{{"setup_cycles", a.setup_cycles},
              {"pipeline_fill", a.pipeline_fill},
              {"strict_sram", a.strict_sram},
              {"sram_budget", a.sram_budget}};
}

AccelConfig accel_from_json(const json& j) {
  AccelConfig a;
  a.setup_cycles = field<uint32_t>(j, "setup_cycles", a.setup_cycles);
  a.pipeline_fill = field<uint32_t>(j, "pipeline_fill", a.pipeline_fill);
  a.strict_sram = field<bool>(j, "strict_sram", a.strict_sram);
  a.sram_budget = field<uint64_t>(j, "sram_budget", a.sram_budget);
  return a;
}

json point_to_json(const DsePoint& p) {
  json row = tile_to_json(p.tile);
  row["footprint"] = p.footprint;
  row["perf_estimate"] = p.perf_estimate;
  row["perf_simulated"] =
      p.perf_simulated ? json(*p.perf_simulated) : json(nullptr);
  row["regime"] = to_string(p.regime);
  return row;
}

json parse_or_throw(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  return j;
}

}  // namespace

// ============================================================================
// Presets
// ============================================================================

LayerShape layer_preset(const std::string& name) {
  LayerShape l;
  l.name = name;
  if (name == "alexnet-conv1") {
    l.batch = 3;
    l.in_ch = 3;
    l.out_ch = 96;
    l.in_h = 227;
    l.in_w = 227;
    l.k_h = 11;
    l.k_w = 11;
    l.stride = 4;
    l.pad = 0;
  } else if (name == "alexnet-conv3") {
    // Stored pre-padded: 13x13 output plane plus the one-pixel halo.
    l.batch = 3;
    l.in_ch = 256;
    l.out_ch = 384;
    l.in_h = 15;
    l.in_w = 15;
    l.k_h = 3;
    l.k_w = 3;
    l.stride = 1;
    l.pad = 0;
  } else {
    throw ConfigError("unknown layer preset: " + name);
  }
  return l;
}

DesignSpace default_space() {
  DesignSpace s;
  s.tb_set = {1, 2, 3};
  s.tc_set = {1, 2, 3, 4, 6, 8};
  s.tm_set = {16, 21, 32, 42, 64, 96, 128};
  s.te_set = {5, 7, 9, 13};
  s.tf_set = {7, 9, 13};
  s.mac_budget = 128;
  s.divisible_only = false;
  return s;
}

std::vector<uint32_t> default_unroll_m() { return {16, 21, 32, 42, 64, 96, 128}; }

std::vector<uint32_t> default_unroll_c() { return {1, 2, 3, 4, 6, 8}; }

// ============================================================================
// RunConfig
// ============================================================================

void RunConfig::validate() const {
  if (schema_version != 1)
    throw ConfigError("unsupported schema_version " +
                      std::to_string(schema_version));
  if (layers.empty()) throw ConfigError("config needs at least one layer");
  for (const auto& l : layers) l.validate();
  bus.validate();
  dram.validate();
  if (tile && space)
    throw ConfigError("config must carry a tile or a space, not both");
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  json ls = json::array();
  for (const auto& l : cfg.layers) ls.push_back(layer_to_json(l));
  j["layers"] = ls;
  j["tile"] = cfg.tile ? tile_to_json(*cfg.tile) : json(nullptr);
  j["space"] = cfg.space ? space_to_json(*cfg.space) : json(nullptr);
  j["bus"] = bus_to_json(cfg.bus);
  j["dram"] = dram_to_json(cfg.dram);
  j["accel"] = accel_to_json(cfg.accel);
  j["sram_budget"] = cfg.sram_budget;
  j["out_dir"] = cfg.out_dir;
  j["trace_dram"] = cfg.trace_dram;
  j["trace_bus"] = cfg.trace_bus;
  j["trace_passes"] = cfg.trace_passes;
  return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text) {
  const json j = parse_or_throw(text);
  RunConfig cfg;
  try {
    cfg.schema_version = field<uint32_t>(j, "schema_version", 1);
    if (auto it = j.find("layers"); it != j.end() && !it->is_null()) {
      if (!it->is_array()) throw ConfigError("layers must be an array");
      for (const auto& lj : *it) cfg.layers.push_back(layer_from_json(lj));
    }
    if (auto it = j.find("tile"); it != j.end() && !it->is_null())
      cfg.tile = tile_from_json(*it);
    if (auto it = j.find("space"); it != j.end() && !it->is_null())
      cfg.space = space_from_json(*it);
    if (auto it = j.find("bus"); it != j.end() && !it->is_null())
      cfg.bus = bus_from_json(*it);
    if (auto it = j.find("dram"); it != j.end() && !it->is_null())
      cfg.dram = dram_from_json(*it);
    if (auto it = j.find("accel"); it != j.end() && !it->is_null())
      cfg.accel = accel_from_json(*it);
    cfg.sram_budget = field<uint64_t>(j, "sram_budget", 0);
    cfg.out_dir = field<std::string>(j, "out_dir", ".");
    cfg.trace_dram = field<bool>(j, "trace_dram", false);
    cfg.trace_bus = field<bool>(j, "trace_bus", false);
    cfg.trace_passes = field<bool>(j, "trace_passes", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void save_config(const RunConfig& cfg, const std::string& path) {
  write_text_file(path, config_to_json(cfg));
}

// ============================================================================
// Reports
// ============================================================================

std::string report_to_json(const SimReport& r) {
  json j;
  j["model"] = "simulator";
  j["total_cycles"] = r.total_cycles;
  j["performance"] = r.performance;
  j["pass_count"] = r.pass_count;
  j["per_pass_comm"] = nullptr;
  j["per_pass_compute"] = nullptr;
  j["limiting_regimes"] = nullptr;
  j["beats"] = r.beats;
  j["dram_commands"] = json{{"activates", r.dram_commands.activates},
                            {"column_cmds", r.dram_commands.column_cmds},
                            {"precharges", r.dram_commands.precharges},
                            {"total", r.dram_commands.total()}};
  j["violations"] = r.violations;
  json passes = json::array();
  for (const auto& p : r.per_pass) {
    json ivs = json::array();
    for (const auto& iv : p.intervals)
      ivs.push_back(json{{"start", iv.start},
                         {"end", iv.end},
                         {"active_mask", iv.active_mask},
                         {"beats", iv.beats}});
    passes.push_back(json{{"pass", p.pass_index},
                          {"comm_start", p.comm_start},
                          {"comm_end", p.comm_end},
                          {"compute_start", p.compute_start},
                          {"compute_end", p.compute_end},
                          {"intervals", ivs}});
  }
  j["per_pass"] = passes;
  json rows = json::array();
  for (const auto& row : r.per_interval_bandwidth)
    rows.push_back(json{{"pass", row.pass},
                        {"interval", row.interval},
                        {"start", row.start},
                        {"end", row.end},
                        {"active_mask", row.active_mask},
                        {"bandwidth", row.bandwidth},
                        {"beats", row.beats}});
  j["interval_bandwidth"] = rows;
  return j.dump(2) + "\n";
}

std::string report_to_json(const EstimateReport& r, const std::string& model) {
  json j;
  j["model"] = model;
  j["total_cycles"] = r.total_cycles;
  j["performance"] = r.performance;
  j["pass_count"] = r.pass_count;
  j["per_pass_comm"] = r.per_pass_comm;
  j["per_pass_compute"] = r.per_pass_compute;
  json regimes = json::array();
  for (const auto reg : r.limiting_regime_per_interval)
    regimes.push_back(to_string(reg));
  j["limiting_regimes"] = regimes;
  j["beats"] = nullptr;
  j["dram_commands"] = nullptr;
  j["violations"] = nullptr;
  j["per_pass"] = nullptr;
  j["interval_bandwidth"] = nullptr;
  return j.dump(2) + "\n";
}

std::string dse_to_json(const DseResult& r) {
  json j;
  j["evaluated"] = r.evaluated;
  j["simulated"] = r.simulated;
  j["best"] = point_to_json(r.best);
  json pts = json::array();
  for (const auto& p : r.points) pts.push_back(point_to_json(p));
  j["points"] = pts;
  json curve = json::array();
  for (const auto& [budget, perf] : r.budget_curve)
    curve.push_back(json{{"budget", budget}, {"performance", perf}});
  j["budget_curve"] = curve;
  return j.dump(2) + "\n";
}

std::string dse_to_csv(const DseResult& r) {
  std::string out =
      "tb,tc,tm,te,tf,um,uc,footprint,perf_estimate,perf_simulated,regime\n";
  for (const auto& p : r.points) {
    const auto& t = p.tile;
    out += std::to_string(t.tb) + ',' + std::to_string(t.tc) + ',' +
           std::to_string(t.tm) + ',' + std::to_string(t.te) + ',' +
           std::to_string(t.tf) + ',' + std::to_string(t.um) + ',' +
           std::to_string(t.uc) + ',' + std::to_string(p.footprint) + ',' +
           fmt(p.perf_estimate) + ',' +
           (p.perf_simulated ? fmt(*p.perf_simulated) : std::string{}) + ',' +
           to_string(p.regime) + '\n';
  }
  return out;
}

std::string multilayer_to_json(const std::vector<LayerShape>& layers,
                               const MultiLayerResult& r) {
  json j;
  j["um"] = r.um;
  j["uc"] = r.uc;
  j["aggregate_performance"] = r.aggregate_perf;
  json per_layer = json::array();
  for (size_t i = 0; i < r.tiles.size(); ++i) {
    json row;
    row["layer"] = i < layers.size() ? layers[i].name : std::to_string(i);
    row["tile"] = tile_to_json(r.tiles[i]);
    row["cycles"] = i < r.layer_cycles.size() ? r.layer_cycles[i] : 0.0;
    per_layer.push_back(row);
  }
  j["layers"] = per_layer;
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << text;
  if (!out) throw ConfigError("short write: " + path);
}

}  // namespace commsim
