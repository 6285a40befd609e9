#include "xdlate/hardware_graph.hpp"

#include <algorithm>
#include <deque>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "xdlate/util.hpp"

namespace xdlate::hw {

std::string_view to_string(NodeClass c) {
  switch (c) {
    case NodeClass::Reactor: return "reactor";
    case NodeClass::Flask: return "flask";
    case NodeClass::Valve: return "valve";
    case NodeClass::Pump: return "pump";
    case NodeClass::Separator: return "separator";
    case NodeClass::Rotavap: return "rotavap";
    case NodeClass::Filter: return "filter";
    case NodeClass::Waste: return "waste";
    case NodeClass::Cartridge: return "cartridge";
  }
  return "?";
}

std::optional<NodeClass> node_class_from_string(std::string_view name) {
  for (NodeClass c : {NodeClass::Reactor, NodeClass::Flask, NodeClass::Valve,
                      NodeClass::Pump, NodeClass::Separator, NodeClass::Rotavap,
                      NodeClass::Filter, NodeClass::Waste, NodeClass::Cartridge}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

const GraphNode* HardwareGraph::node(std::string_view id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &nodes_[it->second];
}

std::vector<std::string> HardwareGraph::successors(std::string_view id) const {
  auto it = adjacency_.find(id);
  if (it == adjacency_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::vector<std::string> HardwareGraph::node_ids_of_class(NodeClass c) const {
  std::vector<std::string> out;
  for (const auto& n : nodes_) {
    if (n.node_class == c) out.push_back(n.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void HardwareGraph::add_node(GraphNode n) {
  index_[n.id] = nodes_.size();
  nodes_.push_back(std::move(n));
}

void HardwareGraph::add_edge(std::string src, std::string dst) {
  adjacency_[src].insert(dst);
  edges_.emplace_back(std::move(src), std::move(dst));
}

// ---------------------------------------------------------------------------

LoadResult load_graph(const std::string& json_text) {
  LoadResult result;
  auto issue = [&](std::string path, std::string message) {
    result.issues.push_back({std::move(path), std::move(message)});
  };

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    issue("", std::string("not valid JSON: ") + e.what());
    return result;
  }
  if (!j.is_object()) {
    issue("", "top level must be an object with 'nodes' and 'edges'");
    return result;
  }

  HardwareGraph graph;

  const auto nodes = j.value("nodes", nlohmann::json::array());
  if (!j.contains("nodes")) issue("nodes", "missing");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    const auto& n = nodes[i];
    if (!n.is_object()) {
      issue(path, "must be an object");
      continue;
    }
    GraphNode node;
    if (!n.contains("id") || !n["id"].is_string() || n["id"].get<std::string>().empty()) {
      issue(path + ".id", "missing or empty");
      continue;
    }
    node.id = n["id"].get<std::string>();
    if (graph.node(node.id) != nullptr) {
      issue(path + ".id", "duplicate node id '" + node.id + "'");
      continue;
    }
    if (!n.contains("class") || !n["class"].is_string()) {
      issue(path + ".class", "missing");
      continue;
    }
    auto cls = node_class_from_string(n["class"].get<std::string>());
    if (!cls) {
      issue(path + ".class", "unknown class '" + n["class"].get<std::string>() + "'");
      continue;
    }
    node.node_class = *cls;

    auto read_number = [&](const char* key) -> std::optional<double> {
      if (!n.contains(key)) return std::nullopt;
      if (!n[key].is_number()) {
        issue(path + "." + key, "must be a number");
        return std::nullopt;
      }
      return n[key].get<double>();
    };
    node.max_volume = read_number("max_volume");
    node.temp_min = read_number("temp_min");
    node.temp_max = read_number("temp_max");
    node.stir_max = read_number("stir_max");
    if (n.contains("chemical")) {
      if (!n["chemical"].is_string()) {
        issue(path + ".chemical", "must be a string");
      } else {
        node.chemical = n["chemical"].get<std::string>();
      }
    }

    if (node.max_volume && *node.max_volume <= 0.0) {
      issue(path + ".max_volume", "must be > 0");
    }
    if (node.temp_min && node.temp_max && *node.temp_min > *node.temp_max) {
      issue(path, "temp_min (" + std::to_string(*node.temp_min) +
                      ") exceeds temp_max (" + std::to_string(*node.temp_max) + ")");
    }
    if (node.stir_max && *node.stir_max < 0.0) {
      issue(path + ".stir_max", "must be >= 0");
    }
    if (!node.chemical.empty() && node.node_class != NodeClass::Flask) {
      issue(path + ".chemical", "only flask nodes may declare a chemical");
    }

    const char* known[] = {"id", "class", "max_volume", "temp_min",
                           "temp_max", "stir_max", "chemical"};
    for (auto it = n.begin(); it != n.end(); ++it) {
      bool ok = false;
      for (const char* k : known) {
        if (it.key() == k) ok = true;
      }
      if (!ok) issue(path + "." + it.key(), "unknown field");
    }

    graph.add_node(std::move(node));
  }

  const auto edges = j.value("edges", nlohmann::json::array());
  if (!j.contains("edges")) issue("edges", "missing");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "edges[" + std::to_string(i) + "]";
    const auto& e = edges[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
      issue(path, "must be a [src, dst] pair of node ids");
      continue;
    }
    const std::string src = e[0].get<std::string>();
    const std::string dst = e[1].get<std::string>();
    bool ok = true;
    if (graph.node(src) == nullptr) {
      issue(path, "edge source '" + src + "' is not a node");
      ok = false;
    }
    if (graph.node(dst) == nullptr) {
      issue(path, "edge target '" + dst + "' is not a node");
      ok = false;
    }
    if (ok) graph.add_edge(src, dst);
  }

  result.graph = std::move(graph);  // best effort, like the XDL parser
  return result;
}

LoadResult load_graph_file(const std::string& path) {
  return load_graph(util::read_file(path));
}

std::string graph_to_json(const HardwareGraph& graph) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : graph.nodes()) {
    nlohmann::json node;
    node["id"] = n.id;
    node["class"] = std::string(to_string(n.node_class));
    if (n.max_volume) node["max_volume"] = *n.max_volume;
    if (n.temp_min) node["temp_min"] = *n.temp_min;
    if (n.temp_max) node["temp_max"] = *n.temp_max;
    if (n.stir_max) node["stir_max"] = *n.stir_max;
    if (!n.chemical.empty()) node["chemical"] = n.chemical;
    j["nodes"].push_back(std::move(node));
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& [src, dst] : graph.edges()) {
    j["edges"].push_back(nlohmann::json::array({src, dst}));
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::optional<std::vector<std::string>> find_path(const HardwareGraph& graph,
                                                  std::string_view src_id,
                                                  std::string_view dst_id) {
  const GraphNode* src = graph.node(src_id);
  const GraphNode* dst = graph.node(dst_id);
  if (src == nullptr) throw std::invalid_argument("unknown node id: " + std::string(src_id));
  if (dst == nullptr) throw std::invalid_argument("unknown node id: " + std::string(dst_id));

  if (src_id == dst_id) return std::vector<std::string>{std::string(src_id)};

  auto traversable_interior = [&](const std::string& id) {
    const GraphNode* n = graph.node(id);
    return n != nullptr && (n->node_class == NodeClass::Valve ||
                            n->node_class == NodeClass::Pump);
  };

  // BFS with sorted successors: first shortest path found is the
  // lexicographically smallest one of minimal length.
  std::map<std::string, std::string> parent;
  std::deque<std::string> queue;
  queue.emplace_back(src_id);
  parent[std::string(src_id)] = "";
  while (!queue.empty()) {
    const std::string cur = queue.front();
    queue.pop_front();
    for (const std::string& next : graph.successors(cur)) {
      if (parent.count(next)) continue;
      if (next != dst_id && !traversable_interior(next)) continue;
      parent[next] = cur;
      if (next == dst_id) {
        std::vector<std::string> path;
        for (std::string at = next; !at.empty(); at = parent[at]) path.push_back(at);
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

NodeClass infer_vessel_class(std::string_view vessel_id) {
  const std::string id = util::to_lower(vessel_id);
  if (id.find("separat") != std::string::npos) return NodeClass::Separator;
  if (id.find("rotavap") != std::string::npos ||
      id.find("evaporat") != std::string::npos) {
    return NodeClass::Rotavap;
  }
  if (id.find("filter") != std::string::npos) return NodeClass::Filter;
  if (id.find("waste") != std::string::npos) return NodeClass::Waste;
  if (id.find("cartridge") != std::string::npos) return NodeClass::Cartridge;
  if (id.find("flask") != std::string::npos) return NodeClass::Flask;
  return NodeClass::Reactor;
}

namespace {

// Kuhn's augmenting-path matching. Vessels are processed in declaration
// order and candidate nodes in sorted order, which makes the maximum
// matching deterministic.
bool augment(std::size_t vessel,
             const std::vector<std::vector<std::string>>& candidates,
             std::map<std::string, std::size_t>& node_owner,
             std::vector<std::string>& assignment,
             std::set<std::string>& visited) {
  for (const std::string& node : candidates[vessel]) {
    if (visited.count(node)) continue;
    visited.insert(node);
    auto owner = node_owner.find(node);
    if (owner == node_owner.end() ||
        augment(owner->second, candidates, node_owner, assignment, visited)) {
      node_owner[node] = vessel;
      assignment[vessel] = node;
      return true;
    }
  }
  return false;
}

}  // namespace

std::pair<Binding, std::vector<BindError>> bind_hardware(
    const xdl::XdlDocument& doc, const HardwareGraph& graph,
    const BindOptions& options) {
  Binding binding;
  std::vector<BindError> errors;

  // vessel -> eligible process nodes of the hinted class
  std::vector<std::vector<std::string>> candidates(doc.hardware.size());
  for (std::size_t i = 0; i < doc.hardware.size(); ++i) {
    const auto& decl = doc.hardware[i];
    NodeClass wanted;
    if (auto it = options.class_overrides.find(decl.id);
        it != options.class_overrides.end()) {
      wanted = it->second;
    } else if (auto cls = node_class_from_string(util::to_lower(decl.class_hint))) {
      wanted = *cls;
    } else {
      wanted = infer_vessel_class(decl.id);
    }
    // vessels map onto process nodes; flasks are reserved for reagents
    if (wanted != NodeClass::Flask) {
      candidates[i] = graph.node_ids_of_class(wanted);
    }
  }

  std::vector<std::string> assignment(doc.hardware.size());
  std::map<std::string, std::size_t> node_owner;
  for (std::size_t i = 0; i < doc.hardware.size(); ++i) {
    std::set<std::string> visited;
    if (!augment(i, candidates, node_owner, assignment, visited)) {
      errors.push_back({BindErrorKind::MissingHardware, doc.hardware[i].id,
                        "no free hardware node for vessel '" + doc.hardware[i].id +
                            "'"});
    }
  }
  for (std::size_t i = 0; i < doc.hardware.size(); ++i) {
    if (!assignment[i].empty()) binding.vessel_map[doc.hardware[i].id] = assignment[i];
  }

  // reagents -> flasks by chemical name or synonym, case-insensitive
  for (const auto& reagent : doc.reagents) {
    std::vector<std::string> names{reagent.name};
    if (auto it = options.reagent_synonyms.find(reagent.name);
        it != options.reagent_synonyms.end()) {
      names.insert(names.end(), it->second.begin(), it->second.end());
    }
    std::string chosen;
    for (const std::string& flask_id : graph.node_ids_of_class(NodeClass::Flask)) {
      const GraphNode* flask = graph.node(flask_id);
      for (const std::string& name : names) {
        if (util::iequals(flask->chemical, name)) {
          chosen = flask_id;
          break;
        }
      }
      if (!chosen.empty()) break;
    }
    if (chosen.empty()) {
      errors.push_back({BindErrorKind::MissingReagentFlask, reagent.name,
                        "no flask provides reagent '" + reagent.name + "'"});
    } else {
      binding.reagent_map[reagent.name] = chosen;
    }
  }

  binding.complete = errors.empty();
  return {std::move(binding), std::move(errors)};
}

}  // namespace xdlate::hw
