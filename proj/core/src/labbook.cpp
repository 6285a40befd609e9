#include "xdlate/labbook.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "xdlate/util.hpp"
#include "xdlate/vector_store.hpp"

namespace xdlate::mem {

nlohmann::json LabbookEntry::to_json() const {
  nlohmann::json j;
  j["id"] = id;
  j["document_ref"] = document_ref;
  j["procedure_title"] = procedure_title;
  j["kg_node"] = kg_node;
  j["raw_procedure"] = raw_procedure;
  j["sanitized_procedure"] = sanitized_procedure;
  j["category"] = category;
  j["resolutions"] = resolutions;
  j["final_xdl"] = final_xdl;
  j["validation"] = validation;
  j["analytical"] = analytical;
  j["created_at"] = created_at;
  return j;
}

LabbookEntry LabbookEntry::from_json(const nlohmann::json& j) {
  LabbookEntry e;
  e.id = j.value("id", "");
  e.document_ref = j.value("document_ref", "");
  e.procedure_title = j.value("procedure_title", "");
  e.kg_node = j.value("kg_node", "");
  e.raw_procedure = j.value("raw_procedure", "");
  e.sanitized_procedure = j.value("sanitized_procedure", "");
  e.category = j.value("category", "");
  e.resolutions = j.value("resolutions", nlohmann::json::array());
  e.final_xdl = j.value("final_xdl", "");
  e.validation = j.value("validation", nlohmann::json::object());
  e.analytical = j.value("analytical", nlohmann::json::array());
  e.created_at = j.value("created_at", std::int64_t{0});
  return e;
}

Labbook::Labbook(std::string directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw StoreError("cannot create labbook directory: " + ec.message());
  path_ = directory + "/labbook.jsonl";
  if (std::filesystem::exists(path_)) {
    next_seq_ = read_all().size() + 1;
  }
}

std::string Labbook::append(LabbookEntry entry) {
  std::lock_guard lock(mutex_);
  char buf[32];
  std::snprintf(buf, sizeof buf, "lb-%06zu", next_seq_);
  entry.id = buf;
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw StoreError("cannot append to labbook " + path_);
  out << entry.to_json().dump() << "\n";
  out.flush();
  if (!out) throw StoreError("labbook write failed: " + path_);
  ++next_seq_;
  return entry.id;
}

std::vector<LabbookEntry> Labbook::read_all() const {
  std::lock_guard lock(mutex_);
  std::vector<LabbookEntry> entries;
  if (!std::filesystem::exists(path_)) return entries;
  for (const std::string& line : util::split(util::read_file(path_), '\n')) {
    if (util::trim(line).empty()) continue;
    entries.push_back(LabbookEntry::from_json(nlohmann::json::parse(line)));
  }
  return entries;
}

std::vector<LabbookEntry> Labbook::read_by_title(std::string_view procedure_title) const {
  std::vector<LabbookEntry> out;
  for (auto& e : read_all()) {
    if (e.procedure_title == procedure_title) out.push_back(std::move(e));
  }
  return out;
}

std::size_t Labbook::size() const { return read_all().size(); }

}  // namespace xdlate::mem
