#include "xdlate/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "xdlate/util.hpp"

namespace xdlate::sim {

namespace {

constexpr double kEps = 1e-9;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double capacity_of(const hw::GraphNode* node, const SimOptions& options) {
  if (node == nullptr) return std::numeric_limits<double>::infinity();
  if (node->max_volume) return *node->max_volume;
  if (node->node_class == hw::NodeClass::Flask) return options.default_flask_volume;
  return std::numeric_limits<double>::infinity();
}

void add_content(VesselState& v, const std::string& chemical, double amount) {
  if (amount <= 0.0) return;
  for (auto& [name, vol] : v.contents) {
    if (name == chemical) {
      vol += amount;
      return;
    }
  }
  v.contents.emplace_back(chemical, amount);
}

// Removes `amount` mL proportionally across the contents; returns the
// removed composition.
std::vector<std::pair<std::string, double>> drain(VesselState& v, double amount) {
  std::vector<std::pair<std::string, double>> removed;
  if (v.volume <= kEps || amount <= 0.0) return removed;
  const double fraction = std::min(1.0, amount / v.volume);
  for (auto& [name, vol] : v.contents) {
    const double part = vol * fraction;
    if (part > 0.0) removed.emplace_back(name, part);
    vol -= part;
  }
  v.volume = std::max(0.0, v.volume - amount);
  std::erase_if(v.contents, [](const auto& c) { return c.second <= kEps; });
  return removed;
}

class StepRunner {
 public:
  StepRunner(const xdl::XdlStep& step, int index, SimState state,
             const hw::HardwareGraph& graph, const hw::Binding& binding,
             const SimOptions& options)
      : step_(step),
        index_(index),
        graph_(graph),
        binding_(binding),
        options_(options) {
    outcome_.state = std::move(state);
    outcome_.event.step_index = index;
  }

  StepOutcome run() {
    const std::string& name = step_.name;
    if (name == "Add") run_add("reagent", "volume");
    else if (name == "Dissolve") run_add("solvent", "volume");
    else if (name == "Transfer") run_transfer();
    else if (name == "Stir" || name == "StartStir") run_stir();
    else if (name == "StopStir") run_stop_stir();
    else if (name == "HeatChill" || name == "HeatChillToTemp") run_heat_chill();
    else if (name == "Evaporate") run_evaporate();
    else if (name == "Filter") run_filter();
    else if (name == "WashSolid") run_wash_solid();
    else if (name == "Dry") run_dry();
    else if (name == "Separate") run_separate();
    else if (name == "Precipitate") run_precipitate();
    else if (name == "Wait") action_ << "wait";
    else action_ << "no-op (" << name << ")";
    outcome_.event.action = action_.str();
    return std::move(outcome_);
  }

 private:
  void error(SimErrorKind kind, std::string message) {
    outcome_.errors.push_back({kind, index_, std::move(message)});
  }

  // Resolves an XDL vessel attribute to a bound node id; empty on failure.
  std::string vessel_node(const char* attr) {
    const std::string* ref = step_.attr(attr);
    if (ref == nullptr) return "";
    auto it = binding_.vessel_map.find(*ref);
    if (it == binding_.vessel_map.end()) {
      error(SimErrorKind::UnknownVessel,
            "<" + step_.name + "> " + attr + "='" + *ref +
                "' is not bound to any hardware node");
      return "";
    }
    return it->second;
  }

  std::string reagent_node(const char* attr) {
    const std::string* ref = step_.attr(attr);
    if (ref == nullptr) return "";
    auto it = binding_.reagent_map.find(*ref);
    if (it == binding_.reagent_map.end()) {
      error(SimErrorKind::UnboundReagent,
            "<" + step_.name + "> " + attr + "='" + *ref +
                "' is not bound to any reagent flask");
      return "";
    }
    return it->second;
  }

  std::optional<double> quantity_attr(const char* attr, units::Dimension dim) {
    const std::string* raw = step_.attr(attr);
    if (raw == nullptr) return std::nullopt;
    auto parsed = units::normalize_quantity(*raw, dim);
    if (!parsed.ok()) return std::nullopt;
    return parsed.quantity->value;
  }

  VesselState& state_of(const std::string& node_id) {
    return outcome_.state[node_id];
  }

  void record_delta(const std::string& node_id, double before) {
    outcome_.event.deltas.push_back({node_id, before, state_of(node_id).volume});
  }

  bool is_waste(const std::string& node_id) const {
    const hw::GraphNode* n = graph_.node(node_id);
    return n != nullptr && n->node_class == hw::NodeClass::Waste;
  }

  // Moves liquid between nodes with underflow/overflow checks and clamping.
  // An empty dst (or a waste-class dst) discards the liquid and accounts it
  // as removed from the system. Returns the volume actually moved.
  double move_liquid(const std::string& src, const std::string& dst,
                     double requested) {
    if (requested <= 0.0 || src.empty()) return 0.0;
    VesselState& from = state_of(src);
    const double src_before = from.volume;

    double amount = requested;
    if (amount > from.volume + kEps) {
      error(SimErrorKind::Underflow,
            "cannot take " + fmt(amount) + " mL from '" + src + "' holding only " +
                fmt(from.volume) + " mL; transfer clamped");
      amount = from.volume;
    }

    const bool discard = dst.empty() || is_waste(dst);
    if (!discard) {
      VesselState& to = state_of(dst);
      const double cap = capacity_of(graph_.node(dst), options_);
      const double would_be = to.volume + amount;
      if (would_be > cap + kEps) {
        error(SimErrorKind::Overflow,
              "'" + dst + "' would hold " + fmt(would_be) + " mL, exceeding its " +
                  fmt(cap) + " mL capacity; clamped");
        amount = std::max(0.0, cap - to.volume);
      }
    }

    auto removed = drain(from, amount);
    if (discard) {
      double total = 0.0;
      for (const auto& [_, v] : removed) total += v;
      outcome_.event.removed_volume += total;
      if (!dst.empty()) {
        // waste node keeps zero volume; the report carries the amount
        record_delta(src, src_before);
        return amount;
      }
    } else {
      VesselState& to = state_of(dst);
      const double dst_before = to.volume;
      for (const auto& [chem, v] : removed) add_content(to, chem, v);
      to.volume += amount;
      record_delta(dst, dst_before);
    }
    record_delta(src, src_before);
    return amount;
  }

  double check_temp(const std::string& node_id, double value) {
    const hw::GraphNode* n = graph_.node(node_id);
    if (n == nullptr) return value;
    double clamped = value;
    if (n->temp_min && value < *n->temp_min - kEps) clamped = *n->temp_min;
    if (n->temp_max && value > *n->temp_max + kEps) clamped = *n->temp_max;
    if (clamped != value) {
      std::string limits;
      if (n->temp_min) limits += " min " + fmt(*n->temp_min) + " °C";
      if (n->temp_max) limits += " max " + fmt(*n->temp_max) + " °C";
      error(SimErrorKind::TempOutOfRange,
            "temperature " + fmt(value) + " °C outside range of '" + node_id +
                "' (" + util::trim(limits) + "); clamped to " + fmt(clamped));
    }
    return clamped;
  }

  double check_stir(const std::string& node_id, double value) {
    const hw::GraphNode* n = graph_.node(node_id);
    if (n == nullptr || !n->stir_max || value <= *n->stir_max + kEps) return value;
    error(SimErrorKind::StirOutOfRange,
          "stir rate " + fmt(value) + " rpm exceeds limit " + fmt(*n->stir_max) +
              " rpm of '" + node_id + "'; clamped");
    return *n->stir_max;
  }

  void run_add(const char* reagent_attr, const char* volume_attr) {
    const std::string vessel = vessel_node("vessel");
    const std::string flask = reagent_node(reagent_attr);
    if (vessel.empty() || flask.empty()) return;
    const std::string& reagent = *step_.attr(reagent_attr);
    auto volume = quantity_attr(volume_attr, units::Dimension::Volume);
    if (volume) {
      const double moved = move_liquid(flask, vessel, *volume);
      action_ << step_.name << " " << fmt(moved) << " mL of " << reagent << " to "
              << vessel;
    } else {
      // mass/amount additions are logged but do not change liquid volume
      const std::string* mass = step_.attr("mass");
      const std::string* amount = step_.attr("amount");
      action_ << step_.name << " " << (mass ? *mass : amount ? *amount : "solid")
              << " of " << reagent << " to " << vessel;
    }
  }

  void run_transfer() {
    const std::string from = vessel_node("from_vessel");
    const std::string to = vessel_node("to_vessel");
    auto volume = quantity_attr("volume", units::Dimension::Volume);
    if (from.empty() || to.empty() || !volume) return;
    auto path = hw::find_path(graph_, from, to);
    if (!path) {
      error(SimErrorKind::NoTransferPath,
            "no liquid path from '" + from + "' to '" + to + "'");
      action_ << "transfer blocked: " << from << " -> " << to;
      return;
    }
    const double moved = move_liquid(from, to, *volume);
    action_ << "transfer " << fmt(moved) << " mL " << from << " -> " << to << " via "
            << path->size() << " nodes";
  }

  void run_stir() {
    const std::string vessel = vessel_node("vessel");
    if (vessel.empty()) return;
    auto speed = quantity_attr("stir_speed", units::Dimension::RotationRate);
    if (speed) {
      state_of(vessel).stir_rate = check_stir(vessel, *speed);
      action_ << "stir " << vessel << " at " << fmt(state_of(vessel).stir_rate)
              << " rpm";
    } else {
      action_ << "stir " << vessel;
    }
  }

  void run_stop_stir() {
    const std::string vessel = vessel_node("vessel");
    if (vessel.empty()) return;
    state_of(vessel).stir_rate = 0.0;
    action_ << "stop stirring " << vessel;
  }

  void run_heat_chill() {
    const std::string vessel = vessel_node("vessel");
    if (vessel.empty()) return;
    const std::string* raw = step_.attr("temp");
    if (raw == nullptr) return;
    auto parsed = units::normalize_quantity(*raw, units::Dimension::Temperature);
    if (!parsed.ok()) {
      // symbolic temperatures ("reflux") must be resolved before simulation
      error(SimErrorKind::TempOutOfRange,
            "temperature '" + *raw + "' of '" + vessel +
                "' is not numeric; sanitize it to °C first");
      return;
    }
    const double set = check_temp(vessel, parsed.quantity->value);
    state_of(vessel).temperature = set;
    if (auto speed = quantity_attr("stir_speed", units::Dimension::RotationRate)) {
      state_of(vessel).stir_rate = check_stir(vessel, *speed);
    }
    action_ << "set " << vessel << " to " << fmt(set) << " °C";
  }

  void run_evaporate() {
    const std::string vessel = vessel_node("vessel");
    if (vessel.empty()) return;
    VesselState& v = state_of(vessel);
    if (auto temp = quantity_attr("temp", units::Dimension::Temperature)) {
      v.temperature = check_temp(vessel, *temp);
    }
    auto volume = quantity_attr("volume", units::Dimension::Volume);
    const double before = v.volume;
    const double target = volume ? std::min(*volume, v.volume) : v.volume;
    drain(v, target);
    outcome_.event.removed_volume += target;
    record_delta(vessel, before);
    action_ << "evaporate " << fmt(target) << " mL from " << vessel;
  }

  void run_filter() {
    const std::string vessel = vessel_node("vessel");
    if (vessel.empty()) return;
    std::string filtrate;
    if (step_.attr("filtrate_vessel") != nullptr) {
      filtrate = vessel_node("filtrate_vessel");
      if (filtrate.empty()) return;
    }
    const double amount = state_of(vessel).volume;
    const double moved = move_liquid(vessel, filtrate, amount);
    action_ << "filter " << vessel << ", " << fmt(moved) << " mL filtrate to "
            << (filtrate.empty() ? "waste" : filtrate);
  }

  void run_wash_solid() {
    const std::string vessel = vessel_node("vessel");
    const std::string flask = reagent_node("solvent");
    auto volume = quantity_attr("volume", units::Dimension::Volume);
    if (vessel.empty() || flask.empty() || !volume) return;
    const double in = move_liquid(flask, vessel, *volume);
    const double out = move_liquid(vessel, "", in);
    action_ << "wash solid in " << vessel << " with " << fmt(out) << " mL "
            << *step_.attr("solvent");
  }

  void run_dry() {
    const std::string vessel = vessel_node("vessel");
    if (vessel.empty()) return;
    if (auto temp = quantity_attr("temp", units::Dimension::Temperature)) {
      state_of(vessel).temperature = check_temp(vessel, *temp);
    }
    action_ << "dry " << vessel;
  }

  void run_separate() {
    const std::string from = vessel_node("from_vessel");
    const std::string sep = vessel_node("separation_vessel");
    const std::string to = vessel_node("to_vessel");
    if (from.empty() || sep.empty() || to.empty()) return;

    if (from != sep) move_liquid(from, sep, state_of(from).volume);

    double fraction = 0.5;  // even split unless the fixture annotates one
    if (const std::string* f = step_.attr("organic_fraction")) {
      try {
        const double parsed = std::stod(*f);
        if (parsed >= 0.0 && parsed <= 1.0) fraction = parsed;
      } catch (...) {
      }
    }
    const double total = state_of(sep).volume;
    const double organic = total * fraction;
    const double aqueous = total - organic;
    move_liquid(sep, to, organic);
    move_liquid(sep, "", aqueous);
    action_ << "separate " << fmt(total) << " mL in " << sep << ": " << fmt(organic)
            << " mL to " << to << ", " << fmt(aqueous) << " mL to waste";
  }

  void run_precipitate() {
    const std::string vessel = vessel_node("vessel");
    if (vessel.empty()) return;
    if (auto temp = quantity_attr("temp", units::Dimension::Temperature)) {
      state_of(vessel).temperature = check_temp(vessel, *temp);
    }
    action_ << "precipitate in " << vessel;
  }

  const xdl::XdlStep& step_;
  int index_;
  const hw::HardwareGraph& graph_;
  const hw::Binding& binding_;
  const SimOptions& options_;
  StepOutcome outcome_;
  std::ostringstream action_;
};

}  // namespace

std::string_view to_string(SimErrorKind kind) {
  switch (kind) {
    case SimErrorKind::TempOutOfRange: return "TempOutOfRange";
    case SimErrorKind::StirOutOfRange: return "StirOutOfRange";
    case SimErrorKind::Overflow: return "Overflow";
    case SimErrorKind::Underflow: return "Underflow";
    case SimErrorKind::NoTransferPath: return "NoTransferPath";
    case SimErrorKind::UnknownVessel: return "UnknownVessel";
    case SimErrorKind::UnboundReagent: return "UnboundReagent";
  }
  return "?";
}

SimState initial_state(const hw::HardwareGraph& graph, const SimOptions& options) {
  SimState state;
  for (const auto& node : graph.nodes()) {
    VesselState v;
    v.temperature = options.ambient_temp;
    if (node.node_class == hw::NodeClass::Flask) {
      v.volume = capacity_of(&node, options);
      if (!node.chemical.empty()) v.contents.emplace_back(node.chemical, v.volume);
    }
    state[node.id] = std::move(v);
  }
  return state;
}

StepOutcome step_effects(const xdl::XdlStep& step, int step_index,
                         const SimState& state, const hw::HardwareGraph& graph,
                         const hw::Binding& binding, const SimOptions& options) {
  StepRunner runner(step, step_index, state, graph, binding, options);
  return runner.run();
}

SimulationReport simulate(const xdl::XdlDocument& doc, const hw::HardwareGraph& graph,
                          const hw::Binding& binding, const SimOptions& options) {
  SimulationReport report;
  SimState state = initial_state(graph, options);
  for (std::size_t i = 0; i < doc.procedure.size(); ++i) {
    StepOutcome outcome = step_effects(doc.procedure[i], static_cast<int>(i), state,
                                       graph, binding, options);
    state = std::move(outcome.state);
    report.events.push_back(std::move(outcome.event));
    for (auto& e : outcome.errors) report.errors.push_back(std::move(e));
    if (options.abort_on_first && !report.errors.empty()) break;
  }
  report.pass = report.errors.empty();
  return report;
}

nlohmann::json SimulationReport::to_json() const {
  nlohmann::json j;
  j["verdict"] = pass ? "pass" : "fail";
  j["events"] = nlohmann::json::array();
  for (const auto& e : events) {
    nlohmann::json ev;
    ev["step_index"] = e.step_index;
    ev["action"] = e.action;
    ev["removed_volume"] = e.removed_volume;
    ev["deltas"] = nlohmann::json::array();
    for (const auto& d : e.deltas) {
      ev["deltas"].push_back({{"node", d.node_id}, {"before", d.before}, {"after", d.after}});
    }
    j["events"].push_back(std::move(ev));
  }
  j["errors"] = nlohmann::json::array();
  for (const auto& e : errors) {
    j["errors"].push_back({{"kind", std::string(to_string(e.kind))},
                           {"step_index", e.step_index},
                           {"message", e.message}});
  }
  return j;
}

SimulationReport SimulationReport::from_json(const nlohmann::json& j) {
  SimulationReport r;
  r.pass = j.value("verdict", "fail") == "pass";
  for (const auto& ev : j.value("events", nlohmann::json::array())) {
    SimulationEvent e;
    e.step_index = ev.value("step_index", 0);
    e.action = ev.value("action", "");
    e.removed_volume = ev.value("removed_volume", 0.0);
    for (const auto& d : ev.value("deltas", nlohmann::json::array())) {
      e.deltas.push_back({d.value("node", ""), d.value("before", 0.0), d.value("after", 0.0)});
    }
    r.events.push_back(std::move(e));
  }
  for (const auto& er : j.value("errors", nlohmann::json::array())) {
    SimulationError e;
    e.step_index = er.value("step_index", 0);
    e.message = er.value("message", "");
    const std::string kind = er.value("kind", "");
    for (SimErrorKind k : {SimErrorKind::TempOutOfRange, SimErrorKind::StirOutOfRange,
                           SimErrorKind::Overflow, SimErrorKind::Underflow,
                           SimErrorKind::NoTransferPath, SimErrorKind::UnknownVessel,
                           SimErrorKind::UnboundReagent}) {
      if (to_string(k) == kind) e.kind = k;
    }
    r.errors.push_back(std::move(e));
  }
  return r;
}

}  // namespace xdlate::sim
