#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xdlate/knowledge_graph.hpp"
#include "xdlate/llm.hpp"
#include "xdlate/vector_store.hpp"

namespace xdlate::extraction {

struct ExtractionFragment {
  std::size_t chunk_index = 0;
  nlohmann::json payload;  // validates against extraction_schema()
};

/// The canonical JSON schema the scraping agent's output must satisfy
/// (also shipped at core/data/extraction_schema.json).
nlohmann::json extraction_schema();

/// Violations as "path: problem" strings; empty means the fragment
/// conforms. Unknown keys are rejected.
std::vector<std::string> validate_fragment(const nlohmann::json& fragment);

/// Extracts the first JSON object from an LLM response (tolerating fences
/// and prose around it).
std::optional<nlohmann::json> extract_json_object(const std::string& text);

/// Deterministic fold of schema-valid fragments into a knowledge graph:
/// chemicals merge when their name/synonym/abbreviation sets intersect,
/// procedures deduplicate by exact title, and title collisions with
/// differing bodies are kept with a numeric suffix plus a warning.
kg::KnowledgeGraph merge_extractions(const std::string& doc_id,
                                     const std::vector<ExtractionFragment>& fragments,
                                     std::vector<std::string>* warnings = nullptr);

struct ScrapeOptions {
  std::size_t extraction_chunk_tokens = 4096;
  std::size_t index_chunk_tokens = 2048;
  std::string model;         // scraping-agent model tag
  bool index_document = true;
};

struct ScrapeResult {
  kg::KnowledgeGraph graph;
  std::vector<std::string> warnings;
  bool aborted = false;       // gateway failed; graph is partial
  std::string abort_reason;
};

/// Chunks the document, runs one extraction call per chunk (with one
/// schema-guided retry for malformed output), merges the fragments, and
/// indexes the text into the documents namespace for later retrieval.
ScrapeResult scrape_document(const std::string& doc_id, const std::string& text,
                             llm::Gateway& gateway, mem::VectorStore* store,
                             const ScrapeOptions& options = {});

std::string document_node_id(const std::string& doc_id);

}  // namespace xdlate::extraction
