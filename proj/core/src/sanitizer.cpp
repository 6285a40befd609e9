#include "xdlate/sanitizer.hpp"

#include <sstream>

#include "xdlate/embedded_data.hpp"
#include "xdlate/extraction.hpp"
#include "xdlate/util.hpp"

namespace xdlate::sanitizer {

namespace {

const std::vector<std::string>& ambiguity_markers() {
  static const std::vector<std::string> markers = [] {
    std::vector<std::string> out;
    for (const std::string& line : util::split(data::kAmbiguityMarkersTxt, '\n')) {
      const std::string t = util::trim(line);
      if (!t.empty() && t[0] != '#') out.push_back(util::to_lower(t));
    }
    return out;
  }();
  return markers;
}

bool looks_ambiguous(std::string_view sentence) {
  const std::string lower = util::to_lower(sentence);
  for (const auto& marker : ambiguity_markers()) {
    if (lower.find(marker) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Executable: return "executable";
    case Category::Blueprint: return "blueprint";
    case Category::Incomplete: return "incomplete";
  }
  return "?";
}

Category category_from_string(std::string_view s) {
  if (s == "executable") return Category::Executable;
  if (s == "blueprint") return Category::Blueprint;
  return Category::Incomplete;
}

nlohmann::json SanitizedProcedure::to_json() const {
  nlohmann::json j;
  j["title"] = title;
  j["original_text"] = original_text;
  j["sanitized_text"] = sanitized_text;
  j["category"] = std::string(to_string(category));
  j["resolutions"] = nlohmann::json::array();
  for (const auto& r : resolutions) {
    j["resolutions"].push_back({{"fragment", r.fragment},
                                {"explanation", r.explanation},
                                {"source", r.source}});
  }
  j["chemicals"] = nlohmann::json::array();
  for (const auto& c : chemicals) {
    nlohmann::json cj{{"name", c.name}};
    if (!c.iupac_name.empty()) cj["iupac_name"] = c.iupac_name;
    if (c.molar_mass) cj["molar_mass"] = *c.molar_mass;
    if (c.boiling_point) cj["boiling_point"] = *c.boiling_point;
    if (!c.role.empty()) cj["role"] = c.role;
    j["chemicals"].push_back(std::move(cj));
  }
  j["open_questions"] = open_questions;
  return j;
}

SanitizedProcedure SanitizedProcedure::from_json(const nlohmann::json& j) {
  SanitizedProcedure p;
  p.title = j.value("title", "");
  p.original_text = j.value("original_text", "");
  p.sanitized_text = j.value("sanitized_text", "");
  p.category = category_from_string(j.value("category", "incomplete"));
  for (const auto& r : j.value("resolutions", nlohmann::json::array())) {
    p.resolutions.push_back({r.value("fragment", ""), r.value("explanation", ""),
                             r.value("source", "")});
  }
  for (const auto& c : j.value("chemicals", nlohmann::json::array())) {
    ChemicalNote note;
    note.name = c.value("name", "");
    note.iupac_name = c.value("iupac_name", "");
    if (c.contains("molar_mass")) note.molar_mass = c["molar_mass"].get<double>();
    if (c.contains("boiling_point")) note.boiling_point = c["boiling_point"].get<double>();
    note.role = c.value("role", "");
    p.chemicals.push_back(std::move(note));
  }
  for (const auto& q : j.value("open_questions", nlohmann::json::array())) {
    p.open_questions.push_back(q.get<std::string>());
  }
  return p;
}

std::string store_ambiguity(mem::VectorStore& store, llm::Gateway& gateway,
                            const std::string& fragment, const std::string& explanation,
                            const std::string& source) {
  if (fragment.empty() || explanation.empty()) {
    throw std::invalid_argument("ambiguity fragment and explanation must be non-empty");
  }
  mem::VectorRecord rec;
  rec.ns = mem::Namespace::Ambiguities;
  rec.id = "cad-" + util::fnv1a_hex(fragment);
  rec.text = fragment;
  rec.vector = gateway.embed({fragment}).at(0);
  rec.metadata["explanation"] = explanation;
  rec.metadata["source"] = source;
  return store.upsert(std::move(rec));
}

std::vector<Resolution> resolve_ambiguities(const std::string& procedure_text,
                                            SanitizeContext& ctx,
                                            std::vector<std::string>* open_questions) {
  std::vector<Resolution> resolutions;
  if (!ctx.use_cad || ctx.store == nullptr || ctx.gateway == nullptr) return resolutions;

  const auto spans = util::split_sentences(procedure_text);
  if (spans.empty()) return resolutions;

  std::vector<std::string> sentences;
  sentences.reserve(spans.size());
  for (const auto& sp : spans) {
    sentences.emplace_back(procedure_text.substr(sp.offset, sp.length));
  }
  const auto vectors = ctx.gateway->embed(sentences);

  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto hits = ctx.store->query(vectors[i], 1, mem::Namespace::Ambiguities);
    if (!hits.empty() && hits[0].similarity >= ctx.cad_threshold) {
      resolutions.push_back({sentences[i],
                             hits[0].record->metadata.count("explanation")
                                 ? hits[0].record->metadata.at("explanation")
                                 : hits[0].record->text,
                             hits[0].record->metadata.count("source")
                                 ? hits[0].record->metadata.at("source")
                                 : "annotated_seed"});
      continue;
    }
    if (!looks_ambiguous(sentences[i])) continue;
    if (ctx.ask) {
      if (auto answer = ctx.ask(sentences[i]); answer && !answer->empty()) {
        store_ambiguity(*ctx.store, *ctx.gateway, sentences[i], *answer,
                        "expert_answer");
        resolutions.push_back({sentences[i], *answer, "expert_answer"});
        continue;
      }
    }
    if (open_questions != nullptr) open_questions->push_back(sentences[i]);
  }
  return resolutions;
}

SanitizedProcedure sanitize(const std::string& title, const std::string& procedure_text,
                            SanitizeContext& ctx) {
  if (ctx.gateway == nullptr) throw std::invalid_argument("sanitize requires a gateway");

  SanitizedProcedure result;
  result.title = title;
  result.original_text = procedure_text;

  result.resolutions = resolve_ambiguities(procedure_text, ctx, &result.open_questions);

  std::ostringstream resolutions_text;
  for (const auto& r : result.resolutions) {
    resolutions_text << "- \"" << r.fragment << "\": " << r.explanation << "\n";
  }

  // chemical data known up front (curated cache scan over the text)
  std::ostringstream chem_text;
  std::string solvent_text;
  if (ctx.use_chem_data) {
    if (ctx.solvents != nullptr) solvent_text = ctx.solvents->mentioned_in(procedure_text);
    if (ctx.chemicals != nullptr) {
      for (const auto& name : ctx.chemicals->known_names()) {
        if (!util::icontains(procedure_text, name)) continue;
        if (auto info = ctx.chemicals->lookup(name)) {
          chem_text << "- " << name;
          if (!info->iupac_name.empty()) chem_text << " (IUPAC: " << info->iupac_name << ")";
          if (info->molar_mass) chem_text << ", " << *info->molar_mass << " g/mol";
          chem_text << "\n";
        }
      }
    }
  }

  std::ostringstream doc_context;
  if (ctx.use_doc_db && ctx.store != nullptr &&
      ctx.store->count(mem::Namespace::Documents) > 0) {
    const auto probe = ctx.gateway->embed({procedure_text}).at(0);
    for (const auto& hit : ctx.store->query(probe, ctx.doc_k, mem::Namespace::Documents)) {
      doc_context << "---\n" << hit.record->text << "\n";
    }
  }

  std::map<std::string, std::string> vars{
      {"procedure", procedure_text},
      {"resolutions", resolutions_text.str().empty() ? "(none)" : resolutions_text.str()},
      {"chemical_data", chem_text.str().empty() ? "(none)" : chem_text.str()},
      {"solvent_data", solvent_text.empty() ? "(none)" : solvent_text},
      {"document_context", doc_context.str().empty() ? "(none)" : doc_context.str()}};

  llm::ChatRequest request;
  request.system = "You prepare chemical procedures for robotic execution.";
  request.user = util::render_template(data::kPromptSanitize, vars);
  request.model = ctx.model;

  auto apply = [&](const nlohmann::json& payload) {
    result.sanitized_text = payload.value("sanitized_text", "");
    result.category = category_from_string(payload.value("category", "incomplete"));
    for (const auto& c : payload.value("chemicals", nlohmann::json::array())) {
      if (!c.is_object()) continue;
      ChemicalNote note;
      note.name = c.value("name", "");
      if (note.name.empty()) continue;
      note.iupac_name = c.value("iupac_name", "");
      if (c.contains("molar_mass") && c["molar_mass"].is_number()) {
        note.molar_mass = c["molar_mass"].get<double>();
      }
      if (c.contains("boiling_point") && c["boiling_point"].is_number()) {
        note.boiling_point = c["boiling_point"].get<double>();
      }
      note.role = c.value("role", "");
      // fill gaps from the curated sources
      if (ctx.use_chem_data && ctx.chemicals != nullptr &&
          (!note.molar_mass || note.iupac_name.empty())) {
        if (auto info = ctx.chemicals->lookup(note.name)) {
          if (!note.molar_mass) note.molar_mass = info->molar_mass;
          if (note.iupac_name.empty()) note.iupac_name = info->iupac_name;
        }
      }
      if (ctx.use_chem_data && ctx.solvents != nullptr && !note.boiling_point) {
        note.boiling_point = ctx.solvents->boiling_point(note.name);
      }
      result.chemicals.push_back(std::move(note));
    }
  };

  const llm::ChatResponse first = ctx.gateway->chat(request);
  auto payload = extraction::extract_json_object(first.text);
  if (payload && payload->contains("sanitized_text") && payload->contains("category")) {
    apply(*payload);
    return result;
  }

  llm::ChatRequest retry = request;
  retry.user +=
      "\n\nYour previous answer was not the required JSON object with "
      "'sanitized_text' and 'category'. Return only the JSON object.";
  const llm::ChatResponse second = ctx.gateway->chat(retry);
  payload = extraction::extract_json_object(second.text);
  if (payload && payload->contains("sanitized_text") && payload->contains("category")) {
    apply(*payload);
    return result;
  }

  // degrade: keep the original text, mark it incomplete
  result.sanitized_text = procedure_text;
  result.category = Category::Incomplete;
  result.open_questions.push_back("procedure agent returned no parseable result");
  return result;
}

}  // namespace xdlate::sanitizer
