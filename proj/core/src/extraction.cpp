#include "xdlate/extraction.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "xdlate/embedded_data.hpp"
#include "xdlate/util.hpp"

namespace xdlate::extraction {

nlohmann::json extraction_schema() {
  static const nlohmann::json schema = nlohmann::json::parse(data::kExtractionSchemaJson);
  return schema;
}

namespace {

void require_string_array_of_objects(
    const nlohmann::json& fragment, const std::string& key,
    const std::vector<std::string>& required_fields,
    const std::set<std::string>& allowed_fields, std::vector<std::string>& errors) {
  if (!fragment.contains(key)) {
    errors.push_back(key + ": required key is missing");
    return;
  }
  const auto& arr = fragment[key];
  if (!arr.is_array()) {
    errors.push_back(key + ": must be an array");
    return;
  }
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = key + "[" + std::to_string(i) + "]";
    const auto& item = arr[i];
    if (!item.is_object()) {
      errors.push_back(path + ": must be an object");
      continue;
    }
    for (const auto& f : required_fields) {
      if (!item.contains(f) || !item[f].is_string() || item[f].get<std::string>().empty()) {
        errors.push_back(path + "." + f + ": required non-empty string");
      }
    }
    for (auto it = item.begin(); it != item.end(); ++it) {
      if (!allowed_fields.count(it.key())) {
        errors.push_back(path + "." + it.key() + ": unknown key");
      } else if (it.key() == "synonyms" || it.key() == "abbreviations") {
        if (!it.value().is_array()) {
          errors.push_back(path + "." + it.key() + ": must be an array of strings");
        } else {
          for (const auto& s : it.value()) {
            if (!s.is_string()) {
              errors.push_back(path + "." + it.key() + ": must be an array of strings");
              break;
            }
          }
        }
      } else if (it.key() != "synonyms" && it.key() != "abbreviations" &&
                 !it.value().is_string()) {
        errors.push_back(path + "." + it.key() + ": must be a string");
      }
    }
  }
}

}  // namespace

std::vector<std::string> validate_fragment(const nlohmann::json& fragment) {
  std::vector<std::string> errors;
  if (!fragment.is_object()) {
    errors.push_back(": fragment must be a JSON object");
    return errors;
  }
  static const std::set<std::string> top_keys = {"chemicals", "procedures",
                                                 "purification", "analytical", "notes"};
  for (auto it = fragment.begin(); it != fragment.end(); ++it) {
    if (!top_keys.count(it.key())) errors.push_back(it.key() + ": unknown key");
  }

  require_string_array_of_objects(fragment, "chemicals", {"name"},
                                  {"name", "synonyms", "abbreviations"}, errors);
  require_string_array_of_objects(fragment, "procedures", {"title", "text"},
                                  {"title", "text"}, errors);
  require_string_array_of_objects(fragment, "purification", {"text"},
                                  {"procedure", "text"}, errors);
  require_string_array_of_objects(fragment, "analytical", {"text"},
                                  {"procedure", "technique", "text"}, errors);

  if (!fragment.contains("notes")) {
    errors.push_back("notes: required key is missing");
  } else if (!fragment["notes"].is_array()) {
    errors.push_back("notes: must be an array");
  } else {
    for (std::size_t i = 0; i < fragment["notes"].size(); ++i) {
      if (!fragment["notes"][i].is_string()) {
        errors.push_back("notes[" + std::to_string(i) + "]: must be a string");
      }
    }
  }
  return errors;
}

std::optional<nlohmann::json> extract_json_object(const std::string& text) {
  // prefer a fenced block when present
  std::size_t fence = text.find("```");
  while (fence != std::string::npos) {
    std::size_t body_start = text.find('\n', fence);
    if (body_start == std::string::npos) break;
    ++body_start;
    const std::size_t fence_end = text.find("```", body_start);
    if (fence_end == std::string::npos) break;
    const std::string body = util::trim(text.substr(body_start, fence_end - body_start));
    if (!body.empty() && body.front() == '{') {
      try {
        return nlohmann::json::parse(body);
      } catch (const nlohmann::json::exception&) {
      }
    }
    fence = text.find("```", fence_end + 3);
  }
  const std::size_t first = text.find('{');
  const std::size_t last = text.rfind('}');
  if (first == std::string::npos || last == std::string::npos || last < first) {
    return std::nullopt;
  }
  try {
    return nlohmann::json::parse(text.substr(first, last - first + 1));
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

std::string document_node_id(const std::string& doc_id) {
  return "doc-" + util::slug(doc_id);
}

// ---------------------------------------------------------------------------

namespace {

struct ChemicalEntry {
  std::set<std::string> names;      // lowercased primary names
  std::set<std::string> all_names;  // names + synonyms + abbreviations, lowercased
  std::set<std::string> display_synonyms;
  std::set<std::string> display_abbreviations;
  std::string display_name;  // lexicographically smallest primary name
};

// Union-find keyed by overlap of the name sets; the partition is
// independent of fragment order.
struct UnionFind {
  std::vector<std::size_t> parent;
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

kg::KnowledgeGraph merge_extractions(const std::string& doc_id,
                                     const std::vector<ExtractionFragment>& fragments,
                                     std::vector<std::string>* warnings) {
  kg::KnowledgeGraph graph;
  const std::string doc_node = document_node_id(doc_id);
  graph.add_node({doc_node, kg::NodeType::Document,
                  nlohmann::json{{"title", doc_id}}});

  // ---- chemicals: gather raw entries, then union intersecting name sets
  std::vector<ChemicalEntry> raw;
  for (const auto& fragment : fragments) {
    for (const auto& item : fragment.payload.value("chemicals", nlohmann::json::array())) {
      ChemicalEntry entry;
      const std::string name = item.value("name", "");
      if (name.empty()) continue;
      entry.names.insert(util::to_lower(name));
      entry.all_names.insert(util::to_lower(name));
      entry.display_name = name;
      for (const auto& s : item.value("synonyms", nlohmann::json::array())) {
        entry.display_synonyms.insert(s.get<std::string>());
        entry.all_names.insert(util::to_lower(s.get<std::string>()));
      }
      for (const auto& a : item.value("abbreviations", nlohmann::json::array())) {
        entry.display_abbreviations.insert(a.get<std::string>());
        entry.all_names.insert(util::to_lower(a.get<std::string>()));
      }
      raw.push_back(std::move(entry));
    }
  }
  UnionFind uf;
  uf.parent.resize(raw.size());
  std::iota(uf.parent.begin(), uf.parent.end(), 0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t j = i + 1; j < raw.size(); ++j) {
      for (const auto& n : raw[i].all_names) {
        if (raw[j].all_names.count(n)) {
          uf.unite(i, j);
          break;
        }
      }
    }
  }
  std::map<std::size_t, ChemicalEntry> merged;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    ChemicalEntry& target = merged[uf.find(i)];
    target.names.insert(raw[i].names.begin(), raw[i].names.end());
    target.all_names.insert(raw[i].all_names.begin(), raw[i].all_names.end());
    target.display_synonyms.insert(raw[i].display_synonyms.begin(),
                                   raw[i].display_synonyms.end());
    target.display_abbreviations.insert(raw[i].display_abbreviations.begin(),
                                        raw[i].display_abbreviations.end());
  }
  // canonical display name: lexicographically smallest primary name, which
  // makes the merged node set independent of fragment order
  std::vector<std::pair<std::string, const ChemicalEntry*>> chemicals;
  for (auto& [_, entry] : merged) {
    chemicals.emplace_back(*entry.names.begin(), &entry);
  }
  std::sort(chemicals.begin(), chemicals.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [canonical, entry] : chemicals) {
    kg::KgNode node;
    node.id = "chem-" + util::slug(canonical);
    node.type = kg::NodeType::Chemical;
    node.props["name"] = canonical;
    node.props["synonyms"] = std::vector<std::string>(entry->display_synonyms.begin(),
                                                      entry->display_synonyms.end());
    node.props["abbreviations"] = std::vector<std::string>(
        entry->display_abbreviations.begin(), entry->display_abbreviations.end());
    graph.add_node(std::move(node));
  }

  // ---- procedures: identity is the (title, text) pair
  std::map<std::pair<std::string, std::string>, std::string> proc_node_by_content;
  std::map<std::string, int> title_uses;
  for (const auto& fragment : fragments) {
    for (const auto& item : fragment.payload.value("procedures", nlohmann::json::array())) {
      const std::string title = item.value("title", "");
      const std::string text = item.value("text", "");
      if (title.empty() || text.empty()) continue;
      const auto content = std::make_pair(title, text);
      if (proc_node_by_content.count(content)) continue;  // fragment re-merge

      std::string effective_title = title;
      const int uses = ++title_uses[title];
      if (uses > 1) {
        effective_title = title + " (" + std::to_string(uses) + ")";
        if (warnings != nullptr) {
          warnings->push_back("procedure title '" + title +
                              "' reused with a different body; kept as '" +
                              effective_title + "'");
        }
      }
      kg::KgNode node;
      node.id = "proc-" + util::slug(effective_title);
      node.type = kg::NodeType::Procedure;
      node.props["title"] = effective_title;
      node.props["text"] = text;
      graph.add_node(std::move(node));
      proc_node_by_content[content] = "proc-" + util::slug(effective_title);
      graph.add_edge(kg::EdgeType::Contains, doc_node, proc_node_by_content[content]);
    }
  }

  // uses_chemical edges: a chemical is "used" when any of its names appears
  // in the procedure text
  for (const kg::KgNode* proc : graph.nodes_of_type(kg::NodeType::Procedure)) {
    const std::string text = util::to_lower(proc->props.value("text", ""));
    for (const auto& [canonical, entry] : chemicals) {
      bool used = false;
      for (const auto& n : entry->all_names) {
        if (!n.empty() && text.find(n) != std::string::npos) used = true;
      }
      if (used) {
        graph.add_edge(kg::EdgeType::UsesChemical, proc->id,
                       "chem-" + util::slug(canonical));
      }
    }
  }

  // ---- purification / analytical / notes (content-hashed ids so that
  // re-merging a fragment adds nothing)
  auto attach_point = [&](const std::string& proc_title) -> std::string {
    if (!proc_title.empty()) {
      for (const kg::KgNode* proc : graph.nodes_of_type(kg::NodeType::Procedure)) {
        if (proc->props.value("title", "") == proc_title) return proc->id;
      }
    }
    return doc_node;
  };

  for (const auto& fragment : fragments) {
    for (const auto& item :
         fragment.payload.value("purification", nlohmann::json::array())) {
      const std::string text = item.value("text", "");
      if (text.empty()) continue;
      const std::string proc = item.value("procedure", "");
      kg::KgNode node;
      node.id = "purif-" + util::fnv1a_hex(proc + "\x1f" + text);
      node.type = kg::NodeType::Purification;
      node.props["text"] = text;
      if (!proc.empty()) node.props["procedure"] = proc;
      graph.add_node(std::move(node));
      graph.add_edge(kg::EdgeType::HasPurification, attach_point(proc),
                     "purif-" + util::fnv1a_hex(proc + "\x1f" + text));
    }
    for (const auto& item : fragment.payload.value("analytical", nlohmann::json::array())) {
      const std::string text = item.value("text", "");
      if (text.empty()) continue;
      const std::string proc = item.value("procedure", "");
      kg::KgNode node;
      node.id = "anal-" + util::fnv1a_hex(proc + "\x1f" + text);
      node.type = kg::NodeType::Analytical;
      node.props["text"] = text;
      if (!proc.empty()) node.props["procedure"] = proc;
      if (item.contains("technique")) node.props["technique"] = item["technique"];
      graph.add_node(std::move(node));
      graph.add_edge(kg::EdgeType::HasAnalysis, attach_point(proc),
                     "anal-" + util::fnv1a_hex(proc + "\x1f" + text));
    }
    for (const auto& note : fragment.payload.value("notes", nlohmann::json::array())) {
      const std::string text = note.is_string() ? note.get<std::string>() : "";
      if (text.empty()) continue;
      kg::KgNode node;
      node.id = "note-" + util::fnv1a_hex(text);
      node.type = kg::NodeType::Note;
      node.props["text"] = text;
      graph.add_node(std::move(node));
      graph.add_edge(kg::EdgeType::HasNote, doc_node, "note-" + util::fnv1a_hex(text));
    }
  }

  return graph;
}

// ---------------------------------------------------------------------------

ScrapeResult scrape_document(const std::string& doc_id, const std::string& text,
                             llm::Gateway& gateway, mem::VectorStore* store,
                             const ScrapeOptions& options) {
  ScrapeResult result;
  std::vector<ExtractionFragment> fragments;

  std::vector<std::string> chunks;
  if (!util::trim(text).empty()) {
    chunks = llm::chunk_text(text, options.extraction_chunk_tokens);
  }

  try {
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      std::map<std::string, std::string> vars{
          {"chunk", chunks[i]},
          {"chunk_index", std::to_string(i + 1)},
          {"chunk_count", std::to_string(chunks.size())}};
      llm::ChatRequest request;
      request.system = "You extract chemistry data as strict JSON.";
      request.user = util::render_template(data::kPromptScrape, vars);
      request.model = options.model;

      auto try_parse = [&](const std::string& response)
          -> std::optional<ExtractionFragment> {
        auto payload = extract_json_object(response);
        if (!payload) return std::nullopt;
        if (!validate_fragment(*payload).empty()) return std::nullopt;
        return ExtractionFragment{i, std::move(*payload)};
      };

      const llm::ChatResponse first = gateway.chat(request);
      if (auto fragment = try_parse(first.text)) {
        fragments.push_back(std::move(*fragment));
        continue;
      }
      // one schema-guided retry, then skip the fragment
      std::string problems;
      if (auto payload = extract_json_object(first.text)) {
        for (const auto& e : validate_fragment(*payload)) problems += e + "\n";
      } else {
        problems = "response did not contain a JSON object\n";
      }
      llm::ChatRequest retry = request;
      retry.user += "\n\nYour previous answer was rejected:\n" + problems +
                    "Return only the corrected JSON object.";
      const llm::ChatResponse second = gateway.chat(retry);
      if (auto fragment = try_parse(second.text)) {
        fragments.push_back(std::move(*fragment));
      } else {
        result.warnings.push_back("chunk " + std::to_string(i + 1) +
                                  ": extraction output rejected twice; skipped");
      }
    }
  } catch (const llm::GatewayError& e) {
    result.aborted = true;
    result.abort_reason = e.what();
  }

  result.graph = merge_extractions(doc_id, fragments, &result.warnings);

  if (store != nullptr && options.index_document && !util::trim(text).empty() &&
      !result.aborted) {
    const std::string doc_node = document_node_id(doc_id);
    const std::vector<std::string> index_chunks =
        llm::chunk_text(text, options.index_chunk_tokens);
    auto vectors = gateway.embed(index_chunks);
    for (std::size_t i = 0; i < index_chunks.size(); ++i) {
      mem::VectorRecord rec;
      rec.ns = mem::Namespace::Documents;
      rec.id = doc_node + "-chunk-" + std::to_string(i);
      rec.text = index_chunks[i];
      rec.vector = vectors[i];
      rec.metadata["doc"] = doc_node;
      rec.metadata["index"] = std::to_string(i);
      store->upsert(rec);

      kg::KgNode chunk_node;
      chunk_node.id = rec.id;
      chunk_node.type = kg::NodeType::Chunk;
      chunk_node.props["record"] = rec.id;
      chunk_node.props["tokens"] = llm::estimate_tokens(index_chunks[i]);
      result.graph.add_node(std::move(chunk_node));
      result.graph.add_edge(kg::EdgeType::IndexedAs, doc_node, rec.id);
    }
  }
  return result;
}

}  // namespace xdlate::extraction
