#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace xdlate::kg {

enum class NodeType { Document, Procedure, Chemical, Analytical, Purification, Note, Chunk };
enum class EdgeType {
  Contains,
  UsesChemical,
  HasAnalysis,
  HasPurification,
  HasNote,
  IndexedAs,
  TranslatedAs,
};

std::string_view to_string(NodeType t);
std::string_view to_string(EdgeType t);
std::optional<NodeType> node_type_from_string(std::string_view s);
std::optional<EdgeType> edge_type_from_string(std::string_view s);

struct KgNode {
  std::string id;
  NodeType type = NodeType::Note;
  nlohmann::json props = nlohmann::json::object();
};

struct KgEdge {
  EdgeType type;
  std::string src;
  /// Node id, except for TranslatedAs edges whose target is a translation
  /// session id recorded in the labbook.
  std::string dst;
};

class KnowledgeGraph {
 public:
  KgNode& add_node(KgNode node);  // no-op (returns existing) on duplicate id
  void add_edge(EdgeType type, std::string src, std::string dst);

  const KgNode* node(std::string_view id) const;
  KgNode* node(std::string_view id);
  const std::vector<KgNode>& nodes() const { return nodes_; }
  const std::vector<KgEdge>& edges() const { return edges_; }

  std::vector<const KgNode*> nodes_of_type(NodeType t) const;

  /// Violations of referential integrity: every edge endpoint must exist,
  /// except TranslatedAs targets which reference the labbook.
  std::vector<std::string> integrity_issues() const;

  nlohmann::json to_json() const;
  static KnowledgeGraph from_json(const nlohmann::json& j);

 private:
  std::vector<KgNode> nodes_;
  std::vector<KgEdge> edges_;
};

}  // namespace xdlate::kg
