// config.hpp — run configuration files, layer presets, and report export
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "commsim/dse.hpp"
#include "commsim/estimator.hpp"
#include "commsim/params.hpp"
#include "commsim/sim_engine.hpp"
#include "commsim/workload.hpp"

namespace commsim {

// ============================================================================
// Run configuration
// ============================================================================

/// Everything a run needs, loadable from a JSON file.  Exactly one of
/// `tile`/`space` must be present for the subcommands that consume them;
/// there is no randomness anywhere, so no seed field.
struct RunConfig {
  uint32_t schema_version = 1;
  std::vector<LayerShape> layers;      ///< resolved presets or explicit shapes
  std::optional<TileConfig> tile;
  std::optional<DesignSpace> space;
  BusConfig bus;
  DramConfig dram;
  AccelConfig accel;
  uint64_t sram_budget = 0;            ///< elements; 0 = unconstrained
  std::string out_dir = ".";
  bool trace_dram = false;
  bool trace_bus = false;
  bool trace_passes = false;

  void validate() const;  ///< throws ConfigError
};

/// Named layer presets ("alexnet-conv1", "alexnet-conv3").  Throws
/// ConfigError on unknown names.
LayerShape layer_preset(const std::string& name);

/// The shipped tiling sets (the defaults a config file starts from).
DesignSpace default_space();

/// Unroll candidate sets for multi-layer searches.
std::vector<uint32_t> default_unroll_m();
std::vector<uint32_t> default_unroll_c();

/// Fixed cycles-per-element scales for the baseline estimators.
constexpr std::array<double, 3> kScaleConventional{1.0, 1.0, 1.0};
constexpr std::array<double, 3> kScaleUniform{1.75, 1.75, 1.75};
constexpr std::array<double, 3> kScalePerType{1.6, 2.7, 1.0};

// ============================================================================
// Config (de)serialization — round-trip is identity
// ============================================================================

std::string config_to_json(const RunConfig& cfg);        ///< deterministic text
RunConfig config_from_json(const std::string& text);     ///< throws ConfigError
RunConfig load_config(const std::string& path);          ///< throws ConfigError
void save_config(const RunConfig& cfg, const std::string& path);

// ============================================================================
// Report export — one schema for both producers; absent fields are null
// ============================================================================

std::string report_to_json(const SimReport& report);
std::string report_to_json(const EstimateReport& report,
                           const std::string& model);

/// Full point table (one row per enumerated point) and the budget/perf curve.
std::string dse_to_json(const DseResult& result);
std::string dse_to_csv(const DseResult& result);

std::string multilayer_to_json(const std::vector<LayerShape>& layers,
                               const MultiLayerResult& result);

/// Writes `text` to `path` byte-for-byte (no timestamps, no locale).
void write_text_file(const std::string& path, const std::string& text);

}  // namespace commsim
