#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace xdlate::mem {

struct LabbookEntry {
  std::string id;  // assigned on append
  std::string document_ref;
  std::string procedure_title;
  std::string kg_node;  // knowledge-graph node id of the procedure
  std::string raw_procedure;
  std::string sanitized_procedure;
  std::string category;  // executable | blueprint | incomplete
  nlohmann::json resolutions = nlohmann::json::array();
  std::string final_xdl;  // empty when translation failed
  nlohmann::json validation = nlohmann::json::object();  // session summary
  nlohmann::json analytical = nlohmann::json::array();
  std::int64_t created_at = 0;  // unix seconds; fixed by --epoch for replay

  nlohmann::json to_json() const;
  static LabbookEntry from_json(const nlohmann::json& j);
};

/// Append-only JSON-lines labbook living next to the vector store. Entries
/// are immutable once written; reads never mutate.
class Labbook {
 public:
  explicit Labbook(std::string directory);

  std::string append(LabbookEntry entry);  // returns the assigned id
  std::vector<LabbookEntry> read_all() const;
  std::vector<LabbookEntry> read_by_title(std::string_view procedure_title) const;
  std::size_t size() const;

  std::string path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mutex_;
  std::size_t next_seq_ = 1;
};

}  // namespace xdlate::mem
