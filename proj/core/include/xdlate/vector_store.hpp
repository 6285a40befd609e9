#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xdlate/llm.hpp"

namespace xdlate::mem {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Namespace { Documents, XdlPairs, Ambiguities, FlaggedSteps };

std::string_view to_string(Namespace ns);
std::optional<Namespace> namespace_from_string(std::string_view name);

struct VectorRecord {
  std::string id;
  Namespace ns = Namespace::Documents;
  std::string text;
  llm::EmbeddingVector vector;
  std::map<std::string, std::string> metadata;
};

struct QueryHit {
  const VectorRecord* record;
  double similarity;
};

/// Exact-scan vector store persisted as JSON-lines plus a binary vector
/// sidecar per namespace. A directory holds one store; a lock file keeps it
/// single-writer. Cosine ranking is exhaustive (no approximation) and ties
/// break by insertion order.
class VectorStore {
 public:
  explicit VectorStore(std::string directory);
  ~VectorStore();

  VectorStore(const VectorStore&) = delete;
  VectorStore& operator=(const VectorStore&) = delete;

  /// Returns the record id. Re-upserting an identical record is a no-op;
  /// the same id with different content is a StoreError, as is a vector
  /// whose dimension differs from the namespace's established one.
  std::string upsert(VectorRecord record);

  std::vector<QueryHit> query(const llm::EmbeddingVector& probe, std::size_t k,
                              Namespace ns) const;

  const VectorRecord* find(Namespace ns, std::string_view id) const;
  std::vector<const VectorRecord*> all(Namespace ns) const;
  std::size_t count(Namespace ns) const;
  std::optional<std::size_t> dimension(Namespace ns) const;

  const std::string& directory() const { return dir_; }

 private:
  struct Shard {
    std::vector<VectorRecord> records;
    std::map<std::string, std::size_t> by_id;
    std::optional<std::size_t> dim;
  };

  Shard& shard(Namespace ns);
  const Shard& shard(Namespace ns) const;
  void load(Namespace ns);
  void persist(Namespace ns, const VectorRecord& record);

  std::string dir_;
  int lock_fd_ = -1;
  mutable std::mutex mutex_;
  std::map<Namespace, Shard> shards_;
};

// ---------------------------------------------------------------------------

struct XdlPair {
  std::string procedure_text;
  std::string xdl_text;
  std::string provenance = "seed";  // "seed" or "pipeline"
  bool validated = false;
};

struct SeedOutcome {
  std::size_t inserted = 0;
  std::vector<std::string> errors;  // per-pair parse failures
};

/// Inserts procedure/XDL pairs whose XDL parses error-free, embedding the
/// procedure text. Broken pairs are reported and skipped; valid ones still
/// land.
SeedOutcome seed_xdl_db(VectorStore& store, llm::Gateway& gateway,
                        const std::vector<XdlPair>& pairs);

/// Stores one validated pair (used by the pipeline after a success).
std::string store_validated_pair(VectorStore& store, llm::Gateway& gateway,
                                 const XdlPair& pair);

}  // namespace xdlate::mem
