#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xdlate/chem_data.hpp"
#include "xdlate/llm.hpp"
#include "xdlate/vector_store.hpp"

namespace xdlate::sanitizer {

enum class Category { Executable, Blueprint, Incomplete };

std::string_view to_string(Category c);
Category category_from_string(std::string_view s);  // unknown -> Incomplete

struct Resolution {
  std::string fragment;     // verbatim substring of the original procedure
  std::string explanation;
  std::string source;       // "annotated_seed" | "expert_answer"
};

struct ChemicalNote {
  std::string name;
  std::string iupac_name;
  std::optional<double> molar_mass;     // g/mol
  std::optional<double> boiling_point;  // °C
  std::string role;
};

struct SanitizedProcedure {
  std::string title;
  std::string original_text;
  std::string sanitized_text;
  Category category = Category::Incomplete;
  std::vector<Resolution> resolutions;
  std::vector<ChemicalNote> chemicals;
  std::vector<std::string> open_questions;  // flagged but unanswered sentences

  nlohmann::json to_json() const;
  static SanitizedProcedure from_json(const nlohmann::json& j);
};

/// Expert callback for ambiguity questions. Returning nullopt leaves the
/// question recorded but unanswered.
using AskFn = std::function<std::optional<std::string>(const std::string& question)>;

struct SanitizeContext {
  mem::VectorStore* store = nullptr;          // ambiguities + documents
  llm::Gateway* gateway = nullptr;
  chem::ChemicalClient* chemicals = nullptr;
  const chem::SolventTable* solvents = nullptr;
  AskFn ask;                                   // optional
  bool use_cad = true;        // ablation toggles
  bool use_chem_data = true;
  bool use_doc_db = true;
  double cad_threshold = 0.55;  // cosine similarity gate for CAD hits
  std::size_t doc_k = 3;
  std::string model;
};

/// Embeds each sentence, attaches the nearest stored explanation above the
/// similarity threshold, and routes still-ambiguous sentences to the expert
/// callback; answers are persisted for future runs.
std::vector<Resolution> resolve_ambiguities(const std::string& procedure_text,
                                            SanitizeContext& ctx,
                                            std::vector<std::string>* open_questions);

/// The procedure agent: assembles ambiguity resolutions, chemical data,
/// solvent boiling points and document context into one prompt, and returns
/// the sanitized text with its category.
SanitizedProcedure sanitize(const std::string& title, const std::string& procedure_text,
                            SanitizeContext& ctx);

/// Inserts one expert-annotated fragment/explanation pair into the
/// ambiguities namespace (the Chemical Ambiguity Database).
std::string store_ambiguity(mem::VectorStore& store, llm::Gateway& gateway,
                            const std::string& fragment, const std::string& explanation,
                            const std::string& source);

}  // namespace xdlate::sanitizer
