#include "xdlate/knowledge_graph.hpp"

namespace xdlate::kg {

std::string_view to_string(NodeType t) {
  switch (t) {
    case NodeType::Document: return "Document";
    case NodeType::Procedure: return "Procedure";
    case NodeType::Chemical: return "Chemical";
    case NodeType::Analytical: return "Analytical";
    case NodeType::Purification: return "Purification";
    case NodeType::Note: return "Note";
    case NodeType::Chunk: return "Chunk";
  }
  return "?";
}

std::string_view to_string(EdgeType t) {
  switch (t) {
    case EdgeType::Contains: return "contains";
    case EdgeType::UsesChemical: return "uses_chemical";
    case EdgeType::HasAnalysis: return "has_analysis";
    case EdgeType::HasPurification: return "has_purification";
    case EdgeType::HasNote: return "has_note";
    case EdgeType::IndexedAs: return "indexed_as";
    case EdgeType::TranslatedAs: return "translated_as";
  }
  return "?";
}

std::optional<NodeType> node_type_from_string(std::string_view s) {
  for (NodeType t : {NodeType::Document, NodeType::Procedure, NodeType::Chemical,
                     NodeType::Analytical, NodeType::Purification, NodeType::Note,
                     NodeType::Chunk}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::optional<EdgeType> edge_type_from_string(std::string_view s) {
  for (EdgeType t : {EdgeType::Contains, EdgeType::UsesChemical, EdgeType::HasAnalysis,
                     EdgeType::HasPurification, EdgeType::HasNote, EdgeType::IndexedAs,
                     EdgeType::TranslatedAs}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

KgNode& KnowledgeGraph::add_node(KgNode node) {
  if (KgNode* existing = this->node(node.id)) return *existing;
  nodes_.push_back(std::move(node));
  return nodes_.back();
}

void KnowledgeGraph::add_edge(EdgeType type, std::string src, std::string dst) {
  for (const auto& e : edges_) {
    if (e.type == type && e.src == src && e.dst == dst) return;  // dedup
  }
  edges_.push_back({type, std::move(src), std::move(dst)});
}

const KgNode* KnowledgeGraph::node(std::string_view id) const {
  for (const auto& n : nodes_) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

KgNode* KnowledgeGraph::node(std::string_view id) {
  for (auto& n : nodes_) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

std::vector<const KgNode*> KnowledgeGraph::nodes_of_type(NodeType t) const {
  std::vector<const KgNode*> out;
  for (const auto& n : nodes_) {
    if (n.type == t) out.push_back(&n);
  }
  return out;
}

std::vector<std::string> KnowledgeGraph::integrity_issues() const {
  std::vector<std::string> issues;
  for (const auto& e : edges_) {
    if (node(e.src) == nullptr) {
      issues.push_back("edge " + std::string(to_string(e.type)) + " has missing source '" +
                       e.src + "'");
    }
    if (e.type == EdgeType::TranslatedAs) {
      if (e.dst.empty()) issues.push_back("translated_as edge has empty session id");
      continue;  // target lives in the labbook, not the graph
    }
    if (node(e.dst) == nullptr) {
      issues.push_back("edge " + std::string(to_string(e.type)) + " has missing target '" +
                       e.dst + "'");
    }
  }
  return issues;
}

nlohmann::json KnowledgeGraph::to_json() const {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : nodes_) {
    j["nodes"].push_back({{"id", n.id},
                          {"type", std::string(to_string(n.type))},
                          {"props", n.props}});
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : edges_) {
    j["edges"].push_back({{"type", std::string(to_string(e.type))},
                          {"src", e.src},
                          {"dst", e.dst}});
  }
  return j;
}

KnowledgeGraph KnowledgeGraph::from_json(const nlohmann::json& j) {
  KnowledgeGraph g;
  for (const auto& n : j.value("nodes", nlohmann::json::array())) {
    KgNode node;
    node.id = n.at("id").get<std::string>();
    node.type = node_type_from_string(n.at("type").get<std::string>())
                    .value_or(NodeType::Note);
    node.props = n.value("props", nlohmann::json::object());
    g.add_node(std::move(node));
  }
  for (const auto& e : j.value("edges", nlohmann::json::array())) {
    auto type = edge_type_from_string(e.at("type").get<std::string>());
    if (!type) continue;
    g.add_edge(*type, e.at("src").get<std::string>(), e.at("dst").get<std::string>());
  }
  return g;
}

}  // namespace xdlate::kg
