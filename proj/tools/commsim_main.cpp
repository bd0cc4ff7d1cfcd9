// commsim_main.cpp — command-line front end: simulate, estimate, dse,
// compare, trace.  Exit codes: 0 ok, 2 config error, 3 infeasible.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commsim/config.hpp"
#include "commsim/dse.hpp"
#include "commsim/estimator.hpp"
#include "commsim/sim_engine.hpp"

namespace fs = std::filesystem;
using namespace commsim;

namespace {

struct CliState {
  std::string config_path;
  std::vector<std::string> layer_names;
  std::string tile_spec;          // tb,tc,tm,te,tf[,um,uc]
  std::string out_dir;
  uint64_t sram_budget = 0;
  bool sram_budget_set = false;
  bool use_default_space = false;
  std::vector<std::string> traces;

  std::string model = "proposed";  // estimate
  std::string scale_spec;          // a,b,c

  std::string evaluator = "estimate";  // dse
  double top_fraction = 1.0;
  bool top_fraction_set = false;
  bool multilayer = false;
  bool unconstrained = false;
  uint32_t workers = 0;
};

std::vector<double> parse_csv_numbers(const std::string& spec) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(spec);
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    double v = std::stod(item, &used);
    if (used != item.size()) throw ConfigError("bad number in list: " + item);
    out.push_back(v);
  }
  return out;
}

TileConfig parse_tile(const std::string& spec) {
  const auto v = parse_csv_numbers(spec);
  if (v.size() != 5 && v.size() != 7)
    throw ConfigError("--tile wants tb,tc,tm,te,tf[,um,uc]");
  TileConfig t;
  t.tb = uint32_t(v[0]);
  t.tc = uint32_t(v[1]);
  t.tm = uint32_t(v[2]);
  t.te = uint32_t(v[3]);
  t.tf = uint32_t(v[4]);
  t.um = v.size() == 7 ? uint32_t(v[5]) : t.tm;
  t.uc = v.size() == 7 ? uint32_t(v[6]) : t.tc;
  return t;
}

std::array<double, 3> parse_scale(const std::string& spec) {
  const auto v = parse_csv_numbers(spec);
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() != 3) throw ConfigError("--scale wants one or three numbers");
  return {v[0], v[1], v[2]};
}

/// Config file first, then command-line overrides, then the environment
/// (output directory only).
RunConfig assemble(const CliState& cli) {
  RunConfig cfg;
  if (!cli.config_path.empty()) cfg = load_config(cli.config_path);
  if (!cli.layer_names.empty()) {
    cfg.layers.clear();
    for (const auto& n : cli.layer_names) cfg.layers.push_back(layer_preset(n));
  }
  if (cfg.layers.empty()) cfg.layers.push_back(layer_preset("alexnet-conv3"));
  if (!cli.tile_spec.empty()) cfg.tile = parse_tile(cli.tile_spec);
  if (cli.use_default_space && !cfg.space) cfg.space = default_space();
  if (cli.sram_budget_set) cfg.sram_budget = cli.sram_budget;
  if (!cli.out_dir.empty()) cfg.out_dir = cli.out_dir;
  if (const char* env = std::getenv("COMMSIM_OUT_DIR"); env && *env)
    cfg.out_dir = env;
  for (const auto& t : cli.traces) {
    if (t == "dram")
      cfg.trace_dram = true;
    else if (t == "bus")
      cfg.trace_bus = true;
    else if (t == "passes")
      cfg.trace_passes = true;
    else
      throw ConfigError("unknown trace kind: " + t);
  }
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::string layer_tag(const RunConfig& cfg, size_t i) {
  std::string name = cfg.layers[i].name.empty()
                         ? "layer" + std::to_string(i)
                         : cfg.layers[i].name;
  if (cfg.layers.size() > 1) name = std::to_string(i) + "_" + name;
  return name;
}

std::string out_path(const RunConfig& cfg, const std::string& file) {
  return (fs::path(cfg.out_dir) / file).string();
}

const TileConfig& need_tile(const RunConfig& cfg) {
  if (!cfg.tile) throw ConfigError("this subcommand needs a tile");
  return *cfg.tile;
}

const DesignSpace& need_space(const RunConfig& cfg) {
  if (!cfg.space)
    throw ConfigError("this subcommand needs a space (or --default-space)");
  return *cfg.space;
}

/// comm vs compute over the recorded steady-state passes.
const char* sim_regime(const SimReport& r) {
  double comm = 0, comp = 0;
  for (const auto& p : r.per_pass) {
    comm += double(p.comm_end) - double(p.comm_start);
    comp += double(p.compute_end) - double(p.compute_start);
  }
  return comm > comp ? "comm_limited" : "comp_limited";
}

void emit_traces(const RunConfig& cfg, const SimReport& rep,
                 const std::string& tag) {
  if (cfg.trace_dram)
    emit_trace(rep, TraceKind::Dram, out_path(cfg, "trace_dram_" + tag + ".csv"));
  if (cfg.trace_bus)
    emit_trace(rep, TraceKind::Bus, out_path(cfg, "trace_bus_" + tag + ".csv"));
  if (cfg.trace_passes)
    emit_trace(rep, TraceKind::Passes,
               out_path(cfg, "trace_passes_" + tag + ".json"));
}

int cmd_simulate(const CliState& cli) {
  RunConfig cfg = assemble(cli);
  const TileConfig& tile = need_tile(cfg);
  const bool traces = cfg.trace_dram || cfg.trace_bus || cfg.trace_passes;
  for (size_t i = 0; i < cfg.layers.size(); ++i) {
    const auto& layer = cfg.layers[i];
    const SimReport rep =
        simulate(layer, tile, cfg.bus, cfg.dram, cfg.accel, traces);
    const std::string tag = layer_tag(cfg, i);
    const std::string path = out_path(cfg, "simulate_" + tag + ".json");
    write_text_file(path, report_to_json(rep));
    emit_traces(cfg, rep, tag);
    std::printf("%s: %llu cycles, %.6g ops/cycle, %s (report %s)\n",
                tag.c_str(), (unsigned long long)rep.total_cycles,
                rep.performance, sim_regime(rep), path.c_str());
  }
  return 0;
}

int cmd_estimate(const CliState& cli) {
  RunConfig cfg = assemble(cli);
  const TileConfig& tile = need_tile(cfg);
  std::array<double, 3> scale = kScaleConventional;
  if (cli.model == "scaled")
    scale = cli.scale_spec.empty() ? kScalePerType : parse_scale(cli.scale_spec);
  else if (cli.model != "proposed" && cli.model != "conventional")
    throw ConfigError("unknown model: " + cli.model);
  for (size_t i = 0; i < cfg.layers.size(); ++i) {
    const auto& layer = cfg.layers[i];
    const EstimateReport rep =
        cli.model == "proposed"
            ? estimate(layer, tile, cfg.bus, cfg.dram, cfg.accel)
            : estimate_conventional(layer, tile, cfg.accel, scale);
    const std::string tag = layer_tag(cfg, i);
    const std::string path = out_path(cfg, "estimate_" + tag + ".json");
    write_text_file(path, report_to_json(rep, cli.model));
    const char* regime = rep.per_pass_comm > rep.per_pass_compute
                             ? "comm_limited"
                             : "comp_limited";
    std::printf("%s [%s]: %llu cycles, %.6g ops/cycle, %s (report %s)\n",
                tag.c_str(), cli.model.c_str(),
                (unsigned long long)rep.total_cycles, rep.performance, regime,
                path.c_str());
  }
  return 0;
}

int cmd_dse(const CliState& cli) {
  RunConfig cfg = assemble(cli);
  const DesignSpace& space = need_space(cfg);
  if (cfg.sram_budget == 0)
    throw ConfigError("dse needs a positive sram_budget");

  if (cli.multilayer) {
    const TilingMode mode = cli.unconstrained ? TilingMode::Unconstrained
                                              : TilingMode::Constrained;
    const MultiLayerResult res = optimize_multilayer(
        cfg.layers, default_unroll_m(), default_unroll_c(), space,
        cfg.sram_budget, mode, cfg.bus, cfg.dram, cfg.accel);
    const std::string path = out_path(cfg, "dse_multilayer.json");
    write_text_file(path, multilayer_to_json(cfg.layers, res));
    std::printf("unroll um=%u uc=%u, aggregate %.6g ops/cycle (%s)\n", res.um,
                res.uc, res.aggregate_perf, path.c_str());
    for (size_t i = 0; i < res.tiles.size(); ++i) {
      const auto& t = res.tiles[i];
      std::printf("  %s: tb=%u tc=%u tm=%u te=%u tf=%u (%.6g cycles)\n",
                  cfg.layers[i].name.c_str(), t.tb, t.tc, t.tm, t.te, t.tf,
                  res.layer_cycles[i]);
    }
    return 0;
  }

  const auto& layer = cfg.layers.front();
  DseResult res;
  if (cli.top_fraction_set && cli.top_fraction < 1.0) {
    Evaluator rank = Evaluator::Estimate;
    if (cli.evaluator == "conventional")
      rank = Evaluator::Conventional;
    else if (cli.evaluator != "estimate")
      throw ConfigError("--top-fraction ranks with estimate or conventional");
    res = hybrid_optimize(layer, space, cfg.sram_budget, cli.top_fraction,
                          cfg.bus, cfg.dram, cfg.accel, rank, cli.workers);
  } else {
    Evaluator ev;
    if (cli.evaluator == "simulate")
      ev = Evaluator::Simulate;
    else if (cli.evaluator == "estimate")
      ev = Evaluator::Estimate;
    else if (cli.evaluator == "conventional")
      ev = Evaluator::Conventional;
    else
      throw ConfigError("unknown evaluator: " + cli.evaluator);
    res = optimize(layer, space, cfg.sram_budget, ev, cfg.bus, cfg.dram,
                   cfg.accel, {}, cli.workers);
  }
  const std::string csv = out_path(cfg, "dse_points.csv");
  const std::string js = out_path(cfg, "dse_result.json");
  write_text_file(csv, dse_to_csv(res));
  write_text_file(js, dse_to_json(res));
  const auto& bt = res.best.tile;
  std::printf(
      "%llu points (%llu simulated); best tb=%u tc=%u tm=%u te=%u tf=%u: "
      "%.6g ops/cycle, footprint %llu (%s, %s)\n",
      (unsigned long long)res.evaluated, (unsigned long long)res.simulated,
      bt.tb, bt.tc, bt.tm, bt.te, bt.tf, res.best.perf(),
      (unsigned long long)res.best.footprint, csv.c_str(), js.c_str());
  return 0;
}

struct ErrorStats {
  double mean = 0, p50 = 0, p90 = 0, max = 0;
};

ErrorStats stats_of(std::vector<double> errs) {
  ErrorStats s;
  if (errs.empty()) return s;
  std::sort(errs.begin(), errs.end());
  for (double e : errs) s.mean += e;
  s.mean /= double(errs.size());
  s.p50 = errs[errs.size() / 2];
  s.p90 = errs[size_t(0.9 * double(errs.size() - 1))];
  s.max = errs.back();
  return s;
}

int cmd_compare(const CliState& cli) {
  RunConfig cfg = assemble(cli);
  const DesignSpace& space = need_space(cfg);
  if (cfg.sram_budget == 0)
    throw ConfigError("compare needs a positive sram_budget");
  const auto& layer = cfg.layers.front();
  const DseResult sweep =
      optimize(layer, space, cfg.sram_budget, Evaluator::Simulate, cfg.bus,
               cfg.dram, cfg.accel, {}, cli.workers);

  const char* names[4] = {"proposed", "conventional", "scaled-uniform",
                          "scaled-per-type"};
  const std::array<double, 3> scales[3] = {kScaleConventional, kScaleUniform,
                                           kScalePerType};
  std::vector<double> errs[4];
  for (const auto& p : sweep.points) {
    const double ps = *p.perf_simulated;
    // |sim - est| relative to simulated cycles == |ps - pe| / pe.
    errs[0].push_back(std::abs(ps - p.perf_estimate) / p.perf_estimate);
    for (int m = 0; m < 3; ++m) {
      const auto rep = estimate_conventional(layer, p.tile, cfg.accel, scales[m]);
      errs[m + 1].push_back(std::abs(ps - rep.performance) / rep.performance);
    }
  }

  std::string text = "model,mean,p50,p90,max,points\n";
  for (int m = 0; m < 4; ++m) {
    const ErrorStats s = stats_of(errs[m]);
    char line[160];
    std::snprintf(line, sizeof line, "%s,%.6g,%.6g,%.6g,%.6g,%zu\n", names[m],
                  s.mean, s.p50, s.p90, s.max, errs[m].size());
    text += line;
    std::printf("%-16s mean %6.2f%%  p50 %6.2f%%  p90 %6.2f%%  max %6.2f%%\n",
                names[m], 100 * s.mean, 100 * s.p50, 100 * s.p90, 100 * s.max);
  }
  const std::string path = out_path(cfg, "compare.csv");
  write_text_file(path, text);
  std::printf("%zu points (%s)\n", sweep.points.size(), path.c_str());
  return 0;
}

int cmd_trace(const CliState& cli) {
  CliState with_traces = cli;
  if (with_traces.traces.empty())
    with_traces.traces = {"dram", "bus", "passes"};
  RunConfig cfg = assemble(with_traces);
  const TileConfig& tile = need_tile(cfg);
  for (size_t i = 0; i < cfg.layers.size(); ++i) {
    const SimReport rep =
        simulate(cfg.layers[i], tile, cfg.bus, cfg.dram, cfg.accel, true);
    const std::string tag = layer_tag(cfg, i);
    emit_traces(cfg, rep, tag);
    std::printf("%s: traces written to %s\n", tag.c_str(),
                cfg.out_dir.c_str());
  }
  return 0;
}

void add_common(CLI::App* cmd, CliState& s) {
  cmd->add_option("--config", s.config_path, "JSON run configuration");
  cmd->add_option("--layer", s.layer_names,
                  "layer preset name (repeatable; replaces config layers)");
  cmd->add_option("--out", s.out_dir, "output directory");
  cmd->add_option("--sram-budget", s.sram_budget, "SRAM budget in elements")
      ->each([&s](const std::string&) { s.sram_budget_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transaction-level simulator and analytic estimator for "
               "communication-limited CNN accelerators"};
  app.require_subcommand(1);
  CliState s;

  CLI::App* sim = app.add_subcommand("simulate", "cycle-accurate run");
  add_common(sim, s);
  sim->add_option("--tile", s.tile_spec, "tb,tc,tm,te,tf[,um,uc]");
  sim->add_option("--trace", s.traces, "dram|bus|passes (repeatable)");

  CLI::App* est = app.add_subcommand("estimate", "closed-form estimate");
  add_common(est, s);
  est->add_option("--tile", s.tile_spec, "tb,tc,tm,te,tf[,um,uc]");
  est->add_option("--model", s.model, "proposed|conventional|scaled");
  est->add_option("--scale", s.scale_spec, "cycles/element a,b,c for scaled");

  CLI::App* dse = app.add_subcommand("dse", "tile-space search");
  add_common(dse, s);
  dse->add_flag("--default-space", s.use_default_space,
                "use the shipped tiling sets");
  dse->add_option("--evaluator", s.evaluator, "simulate|estimate|conventional");
  dse->add_option("--top-fraction", s.top_fraction,
                  "rank with the evaluator, simulate only this fraction")
      ->each([&s](const std::string&) { s.top_fraction_set = true; });
  dse->add_flag("--multilayer", s.multilayer, "shared-unroll multi-layer search");
  dse->add_flag("--unconstrained", s.unconstrained,
                "decouple tile sizes from the unroll factors");
  dse->add_option("--workers", s.workers, "parallel evaluations (0 = auto)");

  CLI::App* cmp = app.add_subcommand("compare", "simulator vs estimator error");
  add_common(cmp, s);
  cmp->add_flag("--default-space", s.use_default_space,
                "use the shipped tiling sets");
  cmp->add_option("--workers", s.workers, "parallel evaluations (0 = auto)");

  CLI::App* trc = app.add_subcommand("trace", "emit simulation traces");
  add_common(trc, s);
  trc->add_option("--tile", s.tile_spec, "tb,tc,tm,te,tf[,um,uc]");
  trc->add_option("--trace", s.traces, "dram|bus|passes (default: all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(s);
    if (est->parsed()) return cmd_estimate(s);
    if (dse->parsed()) return cmd_dse(s);
    if (cmp->parsed()) return cmd_compare(s);
    if (trc->parsed()) return cmd_trace(s);
  } catch (const Infeasible& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
