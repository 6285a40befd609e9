#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "xdlate/hardware_graph.hpp"
#include "xdlate/labbook.hpp"
#include "xdlate/llm.hpp"
#include "xdlate/sanitizer.hpp"
#include "xdlate/simulator.hpp"
#include "xdlate/vector_store.hpp"
#include "xdlate/xdl.hpp"

namespace xdlate::translation {

/// The agent's answer contained no XDL document even after a reprompt.
struct TranslationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonExecutableStep {
  std::string description;
  std::string reason;
  bool approximated = false;
};

struct DiscrepancyReport {
  std::vector<std::string> missing_steps;
  std::vector<std::string> misordered_steps;
  std::vector<std::string> wrong_parameters;
  std::vector<NonExecutableStep> non_executable;
  bool indeterminate = false;   // agent output unusable after a reprompt
  std::string raw_output;       // kept as feedback when indeterminate

  /// Approximated non-executable entries do not block the stage.
  bool passes() const;
  nlohmann::json to_json() const;
  static DiscrepancyReport from_json(const nlohmann::json& j);
};

enum class Verdict { ValidAndSimulated, ValidOnly, Failed };
std::string_view to_string(Verdict v);

struct TranslationAttempt {
  int iteration = 0;  // 1-based
  std::string xdl_text;
  std::vector<xdl::XdlError> stage1_errors;
  std::optional<DiscrepancyReport> stage2;
  std::optional<nlohmann::json> stage3;  // binding errors + simulation report
  std::string feedback;  // findings handed to the next repair; empty on success

  nlohmann::json to_json() const;
};

struct FlaggedStep {
  std::string description;
  std::string reason;
  std::string source_title;
  std::string session_id;
};

struct TranslationSession {
  std::string id;
  std::string procedure_title;
  std::vector<TranslationAttempt> attempts;
  std::string final_xdl;  // set on full success only
  Verdict verdict = Verdict::Failed;
  int iterations_used = 0;
  std::vector<FlaggedStep> flagged;  // non-executable steps, deduplicated
  std::string failure_note;          // e.g. translation produced no XDL

  nlohmann::json to_json() const;
};

struct PipelineOptions {
  int max_iterations = 6;
  int rag_k = 5;
  bool use_xdl_db = true;       // ablation: exclude example retrieval + storing
  bool abort_on_first = false;  // simulator error collection mode
  std::string model;
  const xdl::StepSchema* schema = nullptr;  // nullptr = builtin
};

struct PipelineSinks {
  mem::VectorStore* store = nullptr;  // validated pairs + flagged steps
  mem::Labbook* labbook = nullptr;
  std::string document_ref;
  std::int64_t timestamp = 0;
};

/// Top-5 validated procedure/XDL pairs most similar to the given text.
std::vector<mem::QueryHit> retrieve_examples(const std::string& procedure_text,
                                             const mem::VectorStore& store,
                                             llm::Gateway& gateway, std::size_t k = 5);

/// Single-prompt translation: chemicals and roles, step-by-step
/// decomposition, then one combined XDL document. Throws TranslationFailure
/// when no XDL block can be extracted even after a structured reprompt.
/// Rejects procedures categorized "incomplete".
std::string translate(const sanitizer::SanitizedProcedure& sanitized,
                      const mem::VectorStore* store, llm::Gateway& gateway,
                      const PipelineOptions& options = {});

/// LLM-as-a-judge comparison of procedure and XDL.
DiscrepancyReport critique(const std::string& procedure_text, const std::string& xdl_text,
                           llm::Gateway& gateway, const PipelineOptions& options = {});

/// Whole-document correction guided by numbered findings.
std::string repair(const std::string& xdl_text, const std::string& feedback,
                   llm::Gateway& gateway, const PipelineOptions& options = {});

/// The three-stage loop: parse/validate, discrepancy critique, bind+simulate,
/// repairing after any failing stage until everything passes or the
/// iteration budget is exhausted. Never throws; the verdict encodes the
/// outcome. On success the pair is stored validated and the session is
/// appended to the labbook (when sinks are wired).
TranslationSession run_pipeline(const sanitizer::SanitizedProcedure& sanitized,
                                const hw::HardwareGraph& graph, llm::Gateway& gateway,
                                const PipelineOptions& options = {},
                                const PipelineSinks& sinks = {});

/// Re-runs parse+validate+bind+simulate on stored XDL; used to prove
/// success soundness.
bool reverify_clean(const std::string& xdl_text, const hw::HardwareGraph& graph,
                    const PipelineOptions& options = {});

}  // namespace xdlate::translation
