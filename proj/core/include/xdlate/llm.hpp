#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace xdlate::llm {

/// Infrastructure failures of the gateway (network, replay misses). Domain
/// findings never travel through exceptions.
struct GatewayError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NetworkError : GatewayError {
  using GatewayError::GatewayError;
};
struct TranscriptMiss : GatewayError {
  using GatewayError::GatewayError;
};

struct ChatRequest {
  std::string system;
  std::string user;
  std::string model;      // per-agent model tag
  double temperature = 0.0;

  /// Stable content hash used to match recorded exchanges.
  std::string fingerprint() const;
};

struct ChatResponse {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct EmbeddingVector {
  std::vector<double> values;  // unit-normalized

  double norm() const;
  static double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
};

class Gateway {
 public:
  virtual ~Gateway() = default;
  virtual ChatResponse chat(const ChatRequest& request) = 0;
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
  virtual std::size_t embedding_dimension() const = 0;
};

// ---------------------------------------------------------------------------
// Transcripts: JSON-lines of recorded exchanges. Replay consumes entries
// either strictly in order or by fingerprint (each entry at most once).

struct TranscriptEntry {
  std::string kind;         // "chat" or "embed"
  std::string fingerprint;  // may be empty in hand-written fixtures
  std::string response;     // chat only
  std::vector<std::vector<double>> vectors;  // embed only
};

struct Transcript {
  std::vector<TranscriptEntry> entries;

  static Transcript load(const std::string& path);
  static Transcript parse(const std::string& jsonl);
};

enum class ReplayMode { StrictOrder, Fingerprint };

/// Deterministic offline backend: chat responses come from a transcript,
/// embeddings are derived from a seeded hash of the text (bitwise stable
/// across runs and machines). Without a transcript every chat call is a
/// TranscriptMiss, which still leaves embeddings usable.
class ScriptedGateway : public Gateway {
 public:
  explicit ScriptedGateway(Transcript transcript = {},
                           ReplayMode mode = ReplayMode::StrictOrder,
                           std::uint64_t seed = 42, std::size_t dimension = 2048);

  ChatResponse chat(const ChatRequest& request) override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  std::size_t embedding_dimension() const override { return dimension_; }

  /// Entries not yet consumed (exhausting a transcript raises
  /// TranscriptMiss at the next call, not here).
  std::size_t remaining() const;

 private:
  mutable std::mutex mutex_;
  std::deque<TranscriptEntry> pending_;
  std::map<std::string, std::deque<TranscriptEntry>> by_fingerprint_;
  ReplayMode mode_;
  std::uint64_t seed_;
  std::size_t dimension_;
};

/// Pure function behind ScriptedGateway::embed, exposed for oracle tests.
EmbeddingVector hash_embedding(const std::string& text, std::uint64_t seed,
                               std::size_t dimension);

// ---------------------------------------------------------------------------

struct LiveConfig {
  std::string base_url;     // e.g. http://localhost:8080/v1
  std::string api_key;
  std::string chat_model;
  std::string embed_model;
  std::size_t dimension = 2048;
  int max_retries = 3;
  int retry_backoff_ms = 250;

  /// Reads LLM_BASE_URL, LLM_API_KEY, LLM_CHAT_MODEL, LLM_EMBED_MODEL.
  static LiveConfig from_env();
};

/// OpenAI-compatible REST backend (chat/completions + embeddings) with
/// retry and exponential backoff. Construction throws NetworkError when the
/// XDLATE_FORBID_NETWORK guard is set.
class LiveGateway : public Gateway {
 public:
  explicit LiveGateway(LiveConfig config);
  ~LiveGateway() override;

  ChatResponse chat(const ChatRequest& request) override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  std::size_t embedding_dimension() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Forwards to an inner gateway and appends every exchange to a JSON-lines
/// transcript file (the --record flag).
class RecordingGateway : public Gateway {
 public:
  RecordingGateway(std::shared_ptr<Gateway> inner, std::string path);

  ChatResponse chat(const ChatRequest& request) override;
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;
  std::size_t embedding_dimension() const override;

 private:
  std::shared_ptr<Gateway> inner_;
  std::string path_;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Token-estimated chunking. The estimator is ceil(bytes / 4), a documented
// approximation of the upstream tokenizer.

std::size_t estimate_tokens(std::string_view text);

/// Splits text into pieces of at most max_tokens estimated tokens,
/// preferring paragraph, then sentence, then whitespace boundaries. The
/// concatenation of the returned chunks reproduces the input byte for byte.
std::vector<std::string> chunk_text(std::string_view text, std::size_t max_tokens);

}  // namespace xdlate::llm
