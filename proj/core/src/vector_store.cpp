#include "xdlate/vector_store.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "xdlate/util.hpp"
#include "xdlate/xdl.hpp"

namespace xdlate::mem {

namespace fs = std::filesystem;

namespace {

constexpr char kVecMagic[4] = {'X', 'V', 'E', 'C'};
constexpr std::uint32_t kVecVersion = 1;

std::string jsonl_path(const std::string& dir, Namespace ns) {
  return dir + "/" + std::string(to_string(ns)) + ".jsonl";
}
std::string vec_path(const std::string& dir, Namespace ns) {
  return dir + "/" + std::string(to_string(ns)) + ".vec";
}

}  // namespace

std::string_view to_string(Namespace ns) {
  switch (ns) {
    case Namespace::Documents: return "documents";
    case Namespace::XdlPairs: return "xdl_pairs";
    case Namespace::Ambiguities: return "ambiguities";
    case Namespace::FlaggedSteps: return "flagged_steps";
  }
  return "?";
}

std::optional<Namespace> namespace_from_string(std::string_view name) {
  for (Namespace ns : {Namespace::Documents, Namespace::XdlPairs,
                       Namespace::Ambiguities, Namespace::FlaggedSteps}) {
    if (to_string(ns) == name) return ns;
  }
  return std::nullopt;
}

VectorStore::VectorStore(std::string directory) : dir_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw StoreError("cannot create store directory " + dir_ + ": " + ec.message());

  const std::string lock_path = dir_ + "/.lock";
  lock_fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
  if (lock_fd_ < 0) throw StoreError("cannot open lock file " + lock_path);
  if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(lock_fd_);
    lock_fd_ = -1;
    throw StoreError("store directory " + dir_ + " is locked by another process");
  }

  for (Namespace ns : {Namespace::Documents, Namespace::XdlPairs,
                       Namespace::Ambiguities, Namespace::FlaggedSteps}) {
    load(ns);
  }
}

VectorStore::~VectorStore() {
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

VectorStore::Shard& VectorStore::shard(Namespace ns) { return shards_[ns]; }
const VectorStore::Shard& VectorStore::shard(Namespace ns) const {
  static const Shard empty;
  auto it = shards_.find(ns);
  return it == shards_.end() ? empty : it->second;
}

void VectorStore::load(Namespace ns) {
  Shard& s = shards_[ns];
  const std::string jpath = jsonl_path(dir_, ns);
  if (!fs::exists(jpath)) return;

  std::vector<std::vector<double>> vectors;
  const std::string vpath = vec_path(dir_, ns);
  if (fs::exists(vpath)) {
    std::ifstream vin(vpath, std::ios::binary);
    char magic[4];
    std::uint32_t version = 0, dim = 0;
    vin.read(magic, 4);
    vin.read(reinterpret_cast<char*>(&version), sizeof version);
    vin.read(reinterpret_cast<char*>(&dim), sizeof dim);
    if (!vin || std::memcmp(magic, kVecMagic, 4) != 0 || version != kVecVersion) {
      throw StoreError("corrupt vector sidecar " + vpath);
    }
    s.dim = dim;
    std::vector<double> buffer(dim);
    while (vin.read(reinterpret_cast<char*>(buffer.data()),
                    static_cast<std::streamsize>(dim * sizeof(double)))) {
      vectors.push_back(buffer);
    }
  }

  std::size_t index = 0;
  for (const std::string& line : util::split(util::read_file(jpath), '\n')) {
    if (util::trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    VectorRecord rec;
    rec.id = j.at("id").get<std::string>();
    rec.ns = ns;
    rec.text = j.value("text", "");
    for (auto it = j.value("metadata", nlohmann::json::object()).begin();
         it != j.value("metadata", nlohmann::json::object()).end(); ++it) {
      rec.metadata[it.key()] = it.value().get<std::string>();
    }
    if (index < vectors.size()) rec.vector.values = vectors[index];
    ++index;
    s.by_id[rec.id] = s.records.size();
    s.records.push_back(std::move(rec));
  }
  if (index != vectors.size()) {
    throw StoreError("store " + jpath + " and its vector sidecar disagree (" +
                     std::to_string(index) + " records vs " +
                     std::to_string(vectors.size()) + " vectors)");
  }
}

void VectorStore::persist(Namespace ns, const VectorRecord& record) {
  const std::string jpath = jsonl_path(dir_, ns);
  nlohmann::json j;
  j["id"] = record.id;
  j["text"] = record.text;
  j["metadata"] = record.metadata;
  std::ofstream out(jpath, std::ios::app | std::ios::binary);
  if (!out) throw StoreError("cannot append to " + jpath);
  out << j.dump() << "\n";
  out.flush();
  if (!out) throw StoreError("write failed: " + jpath);

  const std::string vpath = vec_path(dir_, ns);
  const bool fresh = !fs::exists(vpath);
  std::ofstream vout(vpath, std::ios::app | std::ios::binary);
  if (!vout) throw StoreError("cannot append to " + vpath);
  if (fresh) {
    const std::uint32_t dim = static_cast<std::uint32_t>(record.vector.values.size());
    vout.write(kVecMagic, 4);
    vout.write(reinterpret_cast<const char*>(&kVecVersion), sizeof kVecVersion);
    vout.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  }
  vout.write(reinterpret_cast<const char*>(record.vector.values.data()),
             static_cast<std::streamsize>(record.vector.values.size() * sizeof(double)));
  vout.flush();
  if (!vout) throw StoreError("write failed: " + vpath);
}

std::string VectorStore::upsert(VectorRecord record) {
  std::lock_guard lock(mutex_);
  Shard& s = shard(record.ns);
  if (record.id.empty()) throw StoreError("record id must not be empty");
  if (s.dim.has_value()) {
    if (record.vector.values.size() != *s.dim) {
      throw StoreError("vector dimension " + std::to_string(record.vector.values.size()) +
                       " does not match namespace '" + std::string(to_string(record.ns)) +
                       "' dimension " + std::to_string(*s.dim));
    }
  } else {
    if (record.vector.values.empty()) throw StoreError("vector must not be empty");
    s.dim = record.vector.values.size();
  }

  auto it = s.by_id.find(record.id);
  if (it != s.by_id.end()) {
    const VectorRecord& existing = s.records[it->second];
    if (existing.text == record.text && existing.metadata == record.metadata &&
        existing.vector.values == record.vector.values) {
      return record.id;  // idempotent
    }
    throw StoreError("record '" + record.id + "' already exists in namespace '" +
                     std::string(to_string(record.ns)) + "' with different content");
  }

  persist(record.ns, record);
  s.by_id[record.id] = s.records.size();
  std::string id = record.id;
  s.records.push_back(std::move(record));
  return id;
}

std::vector<QueryHit> VectorStore::query(const llm::EmbeddingVector& probe,
                                         std::size_t k, Namespace ns) const {
  std::lock_guard lock(mutex_);
  const Shard& s = shard(ns);
  std::vector<std::pair<double, std::size_t>> scored;  // (similarity, index)
  scored.reserve(s.records.size());
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    const VectorRecord& rec = s.records[i];
    if (ns == Namespace::XdlPairs) {
      // RAG gate: only validated pairs are ever retrievable
      auto it = rec.metadata.find("validated");
      if (it == rec.metadata.end() || it->second != "true") continue;
    }
    scored.emplace_back(llm::EmbeddingVector::cosine(probe, rec.vector), i);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;  // insertion order breaks ties
  });
  if (scored.size() > k) scored.resize(k);
  std::vector<QueryHit> hits;
  hits.reserve(scored.size());
  for (const auto& [sim, idx] : scored) hits.push_back({&s.records[idx], sim});
  return hits;
}

const VectorRecord* VectorStore::find(Namespace ns, std::string_view id) const {
  std::lock_guard lock(mutex_);
  const Shard& s = shard(ns);
  auto it = s.by_id.find(std::string(id));
  return it == s.by_id.end() ? nullptr : &s.records[it->second];
}

std::vector<const VectorRecord*> VectorStore::all(Namespace ns) const {
  std::lock_guard lock(mutex_);
  const Shard& s = shard(ns);
  std::vector<const VectorRecord*> out;
  out.reserve(s.records.size());
  for (const auto& r : s.records) out.push_back(&r);
  return out;
}

std::size_t VectorStore::count(Namespace ns) const {
  std::lock_guard lock(mutex_);
  return shard(ns).records.size();
}

std::optional<std::size_t> VectorStore::dimension(Namespace ns) const {
  std::lock_guard lock(mutex_);
  return shard(ns).dim;
}

// ---------------------------------------------------------------------------

std::string store_validated_pair(VectorStore& store, llm::Gateway& gateway,
                                 const XdlPair& pair) {
  VectorRecord rec;
  rec.ns = Namespace::XdlPairs;
  rec.id = "pair-" + util::fnv1a_hex(pair.procedure_text + "\x1f" + pair.xdl_text);
  rec.text = pair.procedure_text;
  rec.vector = gateway.embed({pair.procedure_text}).at(0);
  rec.metadata["xdl"] = pair.xdl_text;
  rec.metadata["provenance"] = pair.provenance;
  rec.metadata["validated"] = pair.validated ? "true" : "false";
  return store.upsert(std::move(rec));
}

SeedOutcome seed_xdl_db(VectorStore& store, llm::Gateway& gateway,
                        const std::vector<XdlPair>& pairs) {
  SeedOutcome outcome;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto checked = xdl::check_xdl(pairs[i].xdl_text);
    if (!checked.ok()) {
      outcome.errors.push_back(
          "pair " + std::to_string(i) + " rejected: " +
          (checked.errors.empty() ? "unparseable XDL"
                                  : checked.errors.front().message));
      continue;
    }
    XdlPair validated = pairs[i];
    validated.validated = true;
    store_validated_pair(store, gateway, validated);
    ++outcome.inserted;
  }
  return outcome;
}

}  // namespace xdlate::mem
