// types.hpp — shared scalar types and error taxonomy
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace commsim {

using cycle_t = uint64_t;  ///< simulation time in accelerator clock cycles
using addr_t = uint64_t;   ///< element-granular DRAM address

// ============================================================================
// Errors
// ============================================================================
// Config/usage errors surface as exceptions; internal consistency is enforced
// by invariant counters inside the simulator (see sim_engine.hpp) so a release
// build can report violations instead of aborting mid-run.

/// Bad layer/tile geometry (non-positive dims, stride mismatch, ...).
struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// Address fell outside the mapped region or overflowed the map.
struct AddressError : std::runtime_error {
  explicit AddressError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or self-contradictory run configuration.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Requested trace stream was not enabled for this run.
struct TraceUnavailable : std::runtime_error {
  explicit TraceUnavailable(const std::string& what) : std::runtime_error(what) {}
};

/// Direct bus issue refused: outstanding window full or bank queue saturated.
struct IssueRejected : std::runtime_error {
  explicit IssueRejected(const std::string& what) : std::runtime_error(what) {}
};

/// Design-space filters left nothing to enumerate.
struct EmptySpace : std::runtime_error {
  explicit EmptySpace(const std::string& what) : std::runtime_error(what) {}
};

/// No enumerated point fits the SRAM budget.
struct Infeasible : std::runtime_error {
  explicit Infeasible(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace commsim
