#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "xdlate/hardware_graph.hpp"
#include "xdlate/xdl.hpp"

namespace xdlate::sim {

struct VesselState {
  double volume = 0.0;  // mL
  std::vector<std::pair<std::string, double>> contents;  // chemical -> mL
  double temperature = 25.0;  // °C
  double stir_rate = 0.0;     // rpm
};

/// Keyed by hardware-graph node id.
using SimState = std::map<std::string, VesselState>;

enum class SimErrorKind {
  TempOutOfRange,
  StirOutOfRange,
  Overflow,
  Underflow,
  NoTransferPath,
  UnknownVessel,
  UnboundReagent,
};

std::string_view to_string(SimErrorKind kind);

struct SimulationError {
  SimErrorKind kind;
  int step_index;  // 0-based
  std::string message;  // cites offending value and violated limit
};

struct VolumeDelta {
  std::string node_id;
  double before = 0.0;
  double after = 0.0;
};

struct SimulationEvent {
  int step_index;
  std::string action;
  std::vector<VolumeDelta> deltas;
  /// Volume that left the tracked system in this step (evaporation or
  /// routing to waste), in mL.
  double removed_volume = 0.0;
};

struct SimulationReport {
  std::vector<SimulationEvent> events;
  std::vector<SimulationError> errors;
  bool pass = false;  // pass <=> errors empty

  nlohmann::json to_json() const;
  static SimulationReport from_json(const nlohmann::json& j);
};

struct SimOptions {
  bool abort_on_first = false;
  double ambient_temp = 25.0;        // °C
  double default_flask_volume = 1e6; // mL, flasks without max_volume
};

/// Initial state: process vessels empty at ambient temperature, reagent
/// flasks full of their declared chemical.
SimState initial_state(const hw::HardwareGraph& graph, const SimOptions& options = {});

struct StepOutcome {
  SimState state;
  std::vector<SimulationError> errors;
  SimulationEvent event;
};

/// Pure transition function for one step. Volumes are clamped so that no
/// vessel ever goes negative or above capacity, even when errors are
/// reported.
StepOutcome step_effects(const xdl::XdlStep& step, int step_index,
                         const SimState& state, const hw::HardwareGraph& graph,
                         const hw::Binding& binding, const SimOptions& options = {});

/// Runs every step in order, collecting all constraint violations (or
/// aborting after the first error when configured so).
SimulationReport simulate(const xdl::XdlDocument& doc, const hw::HardwareGraph& graph,
                          const hw::Binding& binding, const SimOptions& options = {});

}  // namespace xdlate::sim
