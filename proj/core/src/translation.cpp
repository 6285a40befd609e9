#include "xdlate/translation.hpp"

#include <sstream>

#include "xdlate/embedded_data.hpp"
#include "xdlate/extraction.hpp"
#include "xdlate/util.hpp"

namespace xdlate::translation {

namespace {

const xdl::StepSchema& schema_of(const PipelineOptions& options) {
  return options.schema != nullptr ? *options.schema : xdl::StepSchema::builtin();
}

std::optional<std::string> extract_xdl_block(const std::string& text) {
  const std::size_t start = text.rfind("<Synthesis");
  if (start == std::string::npos) return std::nullopt;
  const std::size_t end = text.find("</Synthesis>", start);
  if (end == std::string::npos) return std::nullopt;
  return text.substr(start, end + std::string("</Synthesis>").size() - start);
}

std::string chat_for_xdl(llm::Gateway& gateway, llm::ChatRequest request,
                         const char* what) {
  const llm::ChatResponse first = gateway.chat(request);
  if (auto block = extract_xdl_block(first.text)) return *block;

  llm::ChatRequest retry = request;
  retry.user +=
      "\n\nYour previous answer did not contain a complete XDL document. "
      "Answer again and end with one <Synthesis>...</Synthesis> block.";
  const llm::ChatResponse second = gateway.chat(retry);
  if (auto block = extract_xdl_block(second.text)) return *block;
  throw TranslationFailure(std::string(what) + " produced no XDL block after a reprompt");
}

/// Numbered findings, capped to keep repair prompts bounded.
std::string render_feedback(const std::vector<std::string>& findings,
                            std::size_t cap = 40) {
  std::ostringstream out;
  std::size_t n = 0;
  for (const auto& f : findings) {
    if (n >= cap) {
      out << "... " << (findings.size() - cap) << " further findings omitted\n";
      break;
    }
    out << ++n << ". " << f << "\n";
  }
  return out.str();
}

std::vector<std::string> stage1_findings(const std::vector<xdl::XdlError>& errors) {
  std::vector<std::string> findings;
  for (const auto& e : errors) {
    std::string f = "[" + std::string(xdl::to_string(e.code)) + "]";
    if (e.location.line > 0) f += " line " + std::to_string(e.location.line);
    f += ": " + e.message;
    findings.push_back(std::move(f));
  }
  return findings;
}

std::vector<std::string> stage2_findings(const DiscrepancyReport& report) {
  std::vector<std::string> findings;
  if (report.indeterminate) {
    findings.push_back("discrepancy check unreadable; raw critique follows: " +
                       report.raw_output);
    return findings;
  }
  for (const auto& s : report.missing_steps) findings.push_back("missing step: " + s);
  for (const auto& s : report.misordered_steps) findings.push_back("misordered: " + s);
  for (const auto& s : report.wrong_parameters) findings.push_back("wrong parameter: " + s);
  for (const auto& s : report.non_executable) {
    if (!s.approximated) {
      findings.push_back("not executable in XDL: " + s.description + " (" + s.reason +
                         "); approximate it with supported steps");
    }
  }
  return findings;
}

}  // namespace

bool DiscrepancyReport::passes() const {
  if (indeterminate) return false;
  if (!missing_steps.empty() || !misordered_steps.empty() || !wrong_parameters.empty()) {
    return false;
  }
  for (const auto& s : non_executable) {
    if (!s.approximated) return false;
  }
  return true;
}

nlohmann::json DiscrepancyReport::to_json() const {
  nlohmann::json j;
  j["missing_steps"] = missing_steps;
  j["misordered_steps"] = misordered_steps;
  j["wrong_parameters"] = wrong_parameters;
  j["non_executable"] = nlohmann::json::array();
  for (const auto& s : non_executable) {
    j["non_executable"].push_back({{"description", s.description},
                                   {"reason", s.reason},
                                   {"approximated", s.approximated}});
  }
  j["indeterminate"] = indeterminate;
  if (indeterminate) j["raw_output"] = raw_output;
  return j;
}

DiscrepancyReport DiscrepancyReport::from_json(const nlohmann::json& j) {
  DiscrepancyReport r;
  for (const auto& s : j.value("missing_steps", nlohmann::json::array())) {
    if (s.is_string()) r.missing_steps.push_back(s.get<std::string>());
  }
  for (const auto& s : j.value("misordered_steps", nlohmann::json::array())) {
    if (s.is_string()) r.misordered_steps.push_back(s.get<std::string>());
  }
  for (const auto& s : j.value("wrong_parameters", nlohmann::json::array())) {
    if (s.is_string()) r.wrong_parameters.push_back(s.get<std::string>());
  }
  for (const auto& s : j.value("non_executable", nlohmann::json::array())) {
    if (!s.is_object()) continue;
    r.non_executable.push_back({s.value("description", ""), s.value("reason", ""),
                                s.value("approximated", false)});
  }
  r.indeterminate = j.value("indeterminate", false);
  return r;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::ValidAndSimulated: return "valid_and_simulated";
    case Verdict::ValidOnly: return "valid_only";
    case Verdict::Failed: return "failed";
  }
  return "?";
}

nlohmann::json TranslationAttempt::to_json() const {
  nlohmann::json j;
  j["iteration"] = iteration;
  j["xdl"] = xdl_text;
  j["stage1_errors"] = nlohmann::json::array();
  for (const auto& e : stage1_errors) {
    j["stage1_errors"].push_back({{"code", std::string(xdl::to_string(e.code))},
                                  {"message", e.message},
                                  {"line", e.location.line},
                                  {"column", e.location.column}});
  }
  if (stage2) j["stage2"] = stage2->to_json();
  if (stage3) j["stage3"] = *stage3;
  j["feedback"] = feedback;
  return j;
}

nlohmann::json TranslationSession::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["procedure_title"] = procedure_title;
  j["verdict"] = std::string(to_string(verdict));
  j["iterations_used"] = iterations_used;
  j["final_xdl"] = final_xdl;
  if (!failure_note.empty()) j["failure_note"] = failure_note;
  j["attempts"] = nlohmann::json::array();
  for (const auto& a : attempts) j["attempts"].push_back(a.to_json());
  j["flagged"] = nlohmann::json::array();
  for (const auto& f : flagged) {
    j["flagged"].push_back({{"description", f.description},
                            {"reason", f.reason},
                            {"source_title", f.source_title},
                            {"session_id", f.session_id}});
  }
  return j;
}

// ---------------------------------------------------------------------------

std::vector<mem::QueryHit> retrieve_examples(const std::string& procedure_text,
                                             const mem::VectorStore& store,
                                             llm::Gateway& gateway, std::size_t k) {
  const auto probe = gateway.embed({procedure_text}).at(0);
  return store.query(probe, k, mem::Namespace::XdlPairs);
}

std::string translate(const sanitizer::SanitizedProcedure& sanitized,
                      const mem::VectorStore* store, llm::Gateway& gateway,
                      const PipelineOptions& options) {
  if (sanitized.category == sanitizer::Category::Incomplete) {
    throw std::invalid_argument(
        "incomplete procedures cannot be translated; sanitize first");
  }

  std::ostringstream examples;
  if (options.use_xdl_db && store != nullptr) {
    const auto hits = retrieve_examples(sanitized.sanitized_text, *store, gateway,
                                        static_cast<std::size_t>(options.rag_k));
    for (const auto& hit : hits) {
      examples << "Procedure:\n" << hit.record->text << "\nXDL:\n";
      auto it = hit.record->metadata.find("xdl");
      examples << (it != hit.record->metadata.end() ? it->second : "") << "\n\n";
    }
  }

  std::ostringstream resolutions;
  for (const auto& r : sanitized.resolutions) {
    resolutions << "- \"" << r.fragment << "\": " << r.explanation << "\n";
  }

  std::map<std::string, std::string> vars{
      {"procedure", sanitized.sanitized_text},
      {"step_documentation", schema_of(options).documentation()},
      {"resolutions", resolutions.str().empty() ? "(none)" : resolutions.str()},
      {"examples", examples.str().empty() ? "(none)" : examples.str()}};

  llm::ChatRequest request;
  request.system = "You translate chemistry procedures into XDL.";
  request.user = util::render_template(data::kPromptTranslate, vars);
  request.model = options.model;
  return chat_for_xdl(gateway, std::move(request), "translation");
}

DiscrepancyReport critique(const std::string& procedure_text, const std::string& xdl_text,
                           llm::Gateway& gateway, const PipelineOptions& options) {
  std::string step_names;
  for (const auto& name : schema_of(options).step_names()) {
    if (!step_names.empty()) step_names += ", ";
    step_names += name;
  }
  std::map<std::string, std::string> vars{{"procedure", procedure_text},
                                          {"xdl", xdl_text},
                                          {"step_names", step_names}};
  llm::ChatRequest request;
  request.system = "You review XDL translations of chemistry procedures.";
  request.user = util::render_template(data::kPromptCritique, vars);
  request.model = options.model;

  auto parse = [](const std::string& text) -> std::optional<DiscrepancyReport> {
    auto payload = extraction::extract_json_object(text);
    if (!payload || !payload->is_object()) return std::nullopt;
    if (!payload->contains("missing_steps") && !payload->contains("non_executable")) {
      return std::nullopt;
    }
    return DiscrepancyReport::from_json(*payload);
  };

  const llm::ChatResponse first = gateway.chat(request);
  if (auto report = parse(first.text)) return *report;

  llm::ChatRequest retry = request;
  retry.user +=
      "\n\nYour previous answer was not the required JSON object. Return only "
      "the JSON object with keys missing_steps, misordered_steps, "
      "wrong_parameters, non_executable.";
  const llm::ChatResponse second = gateway.chat(retry);
  if (auto report = parse(second.text)) return *report;

  DiscrepancyReport report;
  report.indeterminate = true;
  report.raw_output = second.text;
  return report;
}

std::string repair(const std::string& xdl_text, const std::string& feedback,
                   llm::Gateway& gateway, const PipelineOptions& options) {
  if (util::trim(feedback).empty()) {
    throw std::invalid_argument("repair requires non-empty feedback");
  }
  std::map<std::string, std::string> vars{
      {"xdl", xdl_text},
      {"feedback", feedback},
      {"step_documentation", schema_of(options).documentation()}};
  llm::ChatRequest request;
  request.system = "You fix XDL documents based on validator findings.";
  request.user = util::render_template(data::kPromptRepair, vars);
  request.model = options.model;
  return chat_for_xdl(gateway, std::move(request), "repair");
}

// ---------------------------------------------------------------------------

namespace {

void record_flag(TranslationSession& session, const NonExecutableStep& step) {
  for (const auto& f : session.flagged) {
    if (f.description == step.description && f.source_title == session.procedure_title) {
      return;  // deduplicated by (description, source)
    }
  }
  session.flagged.push_back({step.description, step.reason, session.procedure_title,
                             session.id});
}

void persist_flags(const TranslationSession& session, const PipelineSinks& sinks,
                   llm::Gateway& gateway) {
  if (sinks.store == nullptr) return;
  for (const auto& f : session.flagged) {
    const std::string id =
        "flag-" + util::fnv1a_hex(f.description + "\x1f" + f.source_title);
    if (sinks.store->find(mem::Namespace::FlaggedSteps, id) != nullptr) continue;
    mem::VectorRecord rec;
    rec.ns = mem::Namespace::FlaggedSteps;
    rec.id = id;
    rec.text = f.description;
    rec.vector = gateway.embed({f.description}).at(0);
    rec.metadata["reason"] = f.reason;
    rec.metadata["source_title"] = f.source_title;
    rec.metadata["session_id"] = f.session_id;
    sinks.store->upsert(std::move(rec));
  }
}

}  // namespace

TranslationSession run_pipeline(const sanitizer::SanitizedProcedure& sanitized,
                                const hw::HardwareGraph& graph, llm::Gateway& gateway,
                                const PipelineOptions& options,
                                const PipelineSinks& sinks) {
  TranslationSession session;
  session.procedure_title = sanitized.title;
  session.id = "session-" + util::fnv1a_hex(sanitized.title + "\x1f" +
                                            sanitized.sanitized_text);
  const xdl::StepSchema& schema = schema_of(options);

  std::string xdl_text;
  try {
    xdl_text = translate(sanitized, options.use_xdl_db ? sinks.store : nullptr,
                         gateway, options);
  } catch (const TranslationFailure& e) {
    session.failure_note = e.what();
  } catch (const std::invalid_argument& e) {
    session.failure_note = e.what();
  }

  bool success = false;
  for (int iteration = 1;
       session.failure_note.empty() && iteration <= options.max_iterations;
       ++iteration) {
    TranslationAttempt attempt;
    attempt.iteration = iteration;
    attempt.xdl_text = xdl_text;

    // stage 1: syntax and semantic validity
    const xdl::ParseResult stage1 = xdl::check_xdl(xdl_text, schema);
    attempt.stage1_errors = stage1.errors;
    std::vector<std::string> findings;
    if (!stage1.errors.empty() || !stage1.document) {
      findings = stage1_findings(stage1.errors);
      if (findings.empty()) findings.push_back("document could not be parsed");
    } else {
      // stage 2: discrepancy critique
      DiscrepancyReport report =
          critique(sanitized.sanitized_text, xdl_text, gateway, options);
      attempt.stage2 = report;
      for (const auto& s : report.non_executable) record_flag(session, s);
      if (!report.passes()) {
        findings = stage2_findings(report);
      } else {
        // stage 3: hardware binding + constrained simulation
        auto [binding, bind_errors] = hw::bind_hardware(*stage1.document, graph);
        nlohmann::json stage3;
        stage3["binding_errors"] = nlohmann::json::array();
        for (const auto& e : bind_errors) {
          stage3["binding_errors"].push_back(e.message);
          findings.push_back(e.message);
        }
        if (bind_errors.empty()) {
          sim::SimOptions sim_options;
          sim_options.abort_on_first = options.abort_on_first;
          const sim::SimulationReport report_sim =
              sim::simulate(*stage1.document, graph, binding, sim_options);
          stage3["simulation"] = report_sim.to_json();
          for (const auto& e : report_sim.errors) {
            findings.push_back("[" + std::string(sim::to_string(e.kind)) + "] step " +
                               std::to_string(e.step_index + 1) + ": " + e.message);
          }
        }
        attempt.stage3 = stage3;
      }
    }

    if (findings.empty()) {
      session.attempts.push_back(std::move(attempt));
      success = true;
      break;
    }
    attempt.feedback = render_feedback(findings);
    const std::string feedback = attempt.feedback;
    session.attempts.push_back(std::move(attempt));

    if (iteration == options.max_iterations) break;
    try {
      xdl_text = repair(xdl_text, feedback, gateway, options);
    } catch (const TranslationFailure& e) {
      session.failure_note = e.what();
      break;
    }
  }

  session.iterations_used = static_cast<int>(session.attempts.size());
  if (success) {
    session.verdict = Verdict::ValidAndSimulated;
    session.final_xdl = xdl_text;
  } else if (!session.attempts.empty() &&
             session.attempts.back().stage1_errors.empty() &&
             !session.attempts.back().xdl_text.empty()) {
    session.verdict = Verdict::ValidOnly;
  } else {
    session.verdict = Verdict::Failed;
  }

  // learning: a successful translation becomes a retrievable example
  if (success && options.use_xdl_db && sinks.store != nullptr) {
    mem::XdlPair pair;
    pair.procedure_text = sanitized.sanitized_text;
    pair.xdl_text = session.final_xdl;
    pair.provenance = "pipeline";
    pair.validated = true;
    mem::store_validated_pair(*sinks.store, gateway, pair);
  }
  persist_flags(session, sinks, gateway);

  if (sinks.labbook != nullptr) {
    mem::LabbookEntry entry;
    entry.document_ref = sinks.document_ref;
    entry.procedure_title = sanitized.title;
    entry.kg_node = "proc-" + util::slug(sanitized.title);
    entry.raw_procedure = sanitized.original_text;
    entry.sanitized_procedure = sanitized.sanitized_text;
    entry.category = std::string(sanitizer::to_string(sanitized.category));
    for (const auto& r : sanitized.resolutions) {
      entry.resolutions.push_back({{"fragment", r.fragment},
                                   {"explanation", r.explanation},
                                   {"source", r.source}});
    }
    entry.final_xdl = session.final_xdl;
    entry.validation = session.to_json();
    entry.created_at = sinks.timestamp;
    sinks.labbook->append(std::move(entry));
  }
  return session;
}

bool reverify_clean(const std::string& xdl_text, const hw::HardwareGraph& graph,
                    const PipelineOptions& options) {
  const xdl::ParseResult checked = xdl::check_xdl(xdl_text, schema_of(options));
  if (!checked.ok()) return false;
  auto [binding, bind_errors] = hw::bind_hardware(*checked.document, graph);
  if (!bind_errors.empty()) return false;
  const sim::SimulationReport report = sim::simulate(*checked.document, graph, binding);
  return report.pass;
}

}  // namespace xdlate::translation
