#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "xdlate/xdl.hpp"

namespace xdlate::hw {

enum class NodeClass {
  Reactor,
  Flask,
  Valve,
  Pump,
  Separator,
  Rotavap,
  Filter,
  Waste,
  Cartridge,
};

std::string_view to_string(NodeClass c);
std::optional<NodeClass> node_class_from_string(std::string_view name);

struct GraphNode {
  std::string id;
  NodeClass node_class = NodeClass::Flask;
  std::optional<double> max_volume;  // mL
  std::optional<double> temp_min;    // °C
  std::optional<double> temp_max;    // °C
  std::optional<double> stir_max;    // rpm
  std::string chemical;              // flasks only
};

class HardwareGraph {
 public:
  const GraphNode* node(std::string_view id) const;
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<std::pair<std::string, std::string>>& edges() const {
    return edges_;
  }

  /// Outgoing neighbor ids, sorted.
  std::vector<std::string> successors(std::string_view id) const;
  std::vector<std::string> node_ids_of_class(NodeClass c) const;  // sorted

  void add_node(GraphNode n);
  void add_edge(std::string src, std::string dst);

 private:
  std::vector<GraphNode> nodes_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::pair<std::string, std::string>> edges_;
  std::map<std::string, std::set<std::string>, std::less<>> adjacency_;
};

struct GraphIssue {
  std::string path;  // JSON-ish context, e.g. "nodes[3].max_volume"
  std::string message;
};

struct LoadResult {
  std::optional<HardwareGraph> graph;
  std::vector<GraphIssue> issues;
  bool ok() const { return graph.has_value() && issues.empty(); }
};

/// Parses the JSON graph format {"nodes":[{id,class,...}],"edges":[[src,dst],...]},
/// collecting every schema violation instead of stopping at the first.
LoadResult load_graph(const std::string& json_text);
LoadResult load_graph_file(const std::string& path);

std::string graph_to_json(const HardwareGraph& graph);

/// Shortest directed path whose interior nodes are valves or pumps only.
/// Ties are broken toward lexicographically smaller node ids. Throws
/// std::invalid_argument on unknown endpoints.
std::optional<std::vector<std::string>> find_path(const HardwareGraph& graph,
                                                  std::string_view src_id,
                                                  std::string_view dst_id);

struct Binding {
  std::map<std::string, std::string> vessel_map;   // XDL vessel id -> node id
  std::map<std::string, std::string> reagent_map;  // reagent name -> flask id
  bool complete = false;
};

enum class BindErrorKind { MissingHardware, MissingReagentFlask };

struct BindError {
  BindErrorKind kind;
  std::string subject;  // vessel id or reagent name
  std::string message;
};

struct BindOptions {
  /// Explicit vessel id -> node class overrides, consulted before the
  /// substring heuristics.
  std::map<std::string, NodeClass> class_overrides;
  /// Extra names accepted for a reagent when matching flask chemicals
  /// (reagent name -> synonyms).
  std::map<std::string, std::set<std::string>> reagent_synonyms;
};

/// Maps every XDL vessel to a compatible process node (maximum injective
/// assignment, deterministic lexicographic tie-breaking) and every reagent
/// to a flask holding its chemical. Unbound items are reported; the binding
/// is partial on failure.
std::pair<Binding, std::vector<BindError>> bind_hardware(
    const xdl::XdlDocument& doc, const HardwareGraph& graph,
    const BindOptions& options = {});

/// Class inferred from a vessel id via substring heuristics ("reactor",
/// "separator", ...). Defaults to Reactor when nothing matches.
NodeClass infer_vessel_class(std::string_view vessel_id);

}  // namespace xdlate::hw
