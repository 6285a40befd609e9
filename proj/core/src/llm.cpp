#ifdef XDLATE_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif

#include "xdlate/llm.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "xdlate/util.hpp"

namespace xdlate::llm {

namespace {

/// Deny-all network guard used by offline commands and the test suites.
void check_network_allowed() {
  const char* guard = std::getenv("XDLATE_FORBID_NETWORK");
  if (guard != nullptr && guard[0] != '\0' && std::string_view(guard) != "0") {
    throw NetworkError(
        "network access is forbidden in this context (XDLATE_FORBID_NETWORK is set)");
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string ChatRequest::fingerprint() const {
  std::string blob;
  blob.reserve(system.size() + user.size() + model.size() + 24);
  blob.append(system).push_back('\x1f');
  blob.append(user).push_back('\x1f');
  blob.append(model).push_back('\x1f');
  blob.append(fmt_double(temperature));
  return util::fnv1a_hex(blob);
}

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

double EmbeddingVector::cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  const std::size_t n = std::min(a.values.size(), b.values.size());
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += a.values[i] * b.values[i];
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (na * nb);
}

EmbeddingVector hash_embedding(const std::string& text, std::uint64_t seed,
                               std::size_t dimension) {
  EmbeddingVector v;
  v.values.resize(dimension);
  std::uint64_t state = seed ^ util::fnv1a(text);
  for (std::size_t i = 0; i < dimension; ++i) {
    const std::uint64_t bits = util::splitmix64(state);
    // uniform in [-1, 1)
    v.values[i] = static_cast<double>(bits >> 11) * (2.0 / 9007199254740992.0) - 1.0;
  }
  double n = v.norm();
  if (n == 0.0) {
    v.values[0] = 1.0;
    n = 1.0;
  }
  for (double& x : v.values) x /= n;
  return v;
}

// ---------------------------------------------------------------------------
// Transcript

Transcript Transcript::parse(const std::string& jsonl) {
  Transcript t;
  std::size_t line_no = 0;
  for (const std::string& line : util::split(jsonl, '\n')) {
    ++line_no;
    const std::string trimmed = util::trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(trimmed);
    } catch (const nlohmann::json::exception& e) {
      throw GatewayError("transcript line " + std::to_string(line_no) +
                         " is not valid JSON: " + e.what());
    }
    TranscriptEntry entry;
    entry.kind = j.value("kind", "chat");
    entry.fingerprint = j.value("fingerprint", "");
    entry.response = j.value("response", "");
    for (const auto& vec : j.value("vectors", nlohmann::json::array())) {
      entry.vectors.push_back(vec.get<std::vector<double>>());
    }
    t.entries.push_back(std::move(entry));
  }
  return t;
}

Transcript Transcript::load(const std::string& path) {
  return parse(util::read_file(path));
}

// ---------------------------------------------------------------------------
// ScriptedGateway

ScriptedGateway::ScriptedGateway(Transcript transcript, ReplayMode mode,
                                 std::uint64_t seed, std::size_t dimension)
    : mode_(mode), seed_(seed), dimension_(dimension) {
  for (auto& e : transcript.entries) {
    if (mode_ == ReplayMode::Fingerprint) {
      by_fingerprint_[e.fingerprint].push_back(e);
    }
    pending_.push_back(std::move(e));
  }
}

std::size_t ScriptedGateway::remaining() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  if (mode_ == ReplayMode::Fingerprint) {
    for (const auto& [_, q] : by_fingerprint_) n += q.size();
  } else {
    n = pending_.size();
  }
  return n;
}

ChatResponse ScriptedGateway::chat(const ChatRequest& request) {
  std::lock_guard lock(mutex_);
  const std::string fp = request.fingerprint();
  TranscriptEntry entry;
  if (mode_ == ReplayMode::Fingerprint) {
    auto it = by_fingerprint_.find(fp);
    if (it == by_fingerprint_.end() || it->second.empty()) {
      throw TranscriptMiss("no recorded response for request fingerprint " + fp);
    }
    entry = std::move(it->second.front());
    it->second.pop_front();
  } else {
    if (pending_.empty()) {
      throw TranscriptMiss("transcript exhausted at request fingerprint " + fp);
    }
    entry = std::move(pending_.front());
    pending_.pop_front();
    if (entry.kind != "chat") {
      throw TranscriptMiss("transcript out of sync: expected a chat entry for " + fp);
    }
  }
  ChatResponse r;
  r.text = entry.response;
  r.prompt_tokens = static_cast<int>(estimate_tokens(request.system) +
                                     estimate_tokens(request.user));
  r.completion_tokens = static_cast<int>(estimate_tokens(r.text));
  return r;
}

std::vector<EmbeddingVector> ScriptedGateway::embed(const std::vector<std::string>& texts) {
  {
    std::lock_guard lock(mutex_);
    // replay recorded embedding batches when the transcript carries them
    if (mode_ == ReplayMode::StrictOrder && !pending_.empty() &&
        pending_.front().kind == "embed" &&
        pending_.front().vectors.size() == texts.size()) {
      TranscriptEntry entry = std::move(pending_.front());
      pending_.pop_front();
      std::vector<EmbeddingVector> out;
      for (auto& vec : entry.vectors) out.push_back(EmbeddingVector{std::move(vec)});
      return out;
    }
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hash_embedding(t, seed_, dimension_));
  return out;
}

// ---------------------------------------------------------------------------
// LiveGateway

LiveConfig LiveConfig::from_env() {
  auto env = [](const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  LiveConfig c;
  c.base_url = env("LLM_BASE_URL");
  c.api_key = env("LLM_API_KEY");
  c.chat_model = env("LLM_CHAT_MODEL");
  c.embed_model = env("LLM_EMBED_MODEL");
  if (c.chat_model.empty()) c.chat_model = "default-chat";
  if (c.embed_model.empty()) c.embed_model = "default-embed";
  return c;
}

struct LiveGateway::Impl {
  LiveConfig config;
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // e.g. /v1

  explicit Impl(LiveConfig c) : config(std::move(c)) {
    if (config.base_url.empty()) {
      throw NetworkError("live backend requires a base URL (LLM_BASE_URL)");
    }
    const std::size_t scheme = config.base_url.find("://");
    const std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const std::size_t slash = config.base_url.find('/', host_start);
    if (slash == std::string::npos) {
      origin = config.base_url;
    } else {
      origin = config.base_url.substr(0, slash);
      path_prefix = config.base_url.substr(slash);
      while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
    }
  }

  nlohmann::json post(const std::string& endpoint, const nlohmann::json& body) {
    check_network_allowed();
    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!config.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config.api_key);
    }
    std::string last_error;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            config.retry_backoff_ms * (1 << (attempt - 1))));
      }
      auto res = client.Post(path_prefix + endpoint, headers, body.dump(),
                             "application/json");
      if (!res) {
        last_error = "connection failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw NetworkError("HTTP " + std::to_string(res->status) + " from " +
                           endpoint + ": " + res->body.substr(0, 400));
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw NetworkError(std::string("invalid JSON from ") + endpoint + ": " +
                           e.what());
      }
    }
    throw NetworkError("request to " + endpoint + " failed after " +
                       std::to_string(config.max_retries + 1) + " attempts (" +
                       last_error + ")");
  }
};

LiveGateway::LiveGateway(LiveConfig config) {
  check_network_allowed();
  impl_ = std::make_unique<Impl>(std::move(config));
}

LiveGateway::~LiveGateway() = default;

std::size_t LiveGateway::embedding_dimension() const { return impl_->config.dimension; }

ChatResponse LiveGateway::chat(const ChatRequest& request) {
  nlohmann::json body;
  body["model"] = request.model.empty() ? impl_->config.chat_model : request.model;
  body["temperature"] = request.temperature;
  body["messages"] = nlohmann::json::array();
  if (!request.system.empty()) {
    body["messages"].push_back({{"role", "system"}, {"content", request.system}});
  }
  body["messages"].push_back({{"role", "user"}, {"content", request.user}});

  const nlohmann::json res = impl_->post("/chat/completions", body);
  ChatResponse out;
  try {
    out.text = res.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw NetworkError("chat response lacks choices[0].message.content");
  }
  if (res.contains("usage")) {
    out.prompt_tokens = res["usage"].value("prompt_tokens", 0);
    out.completion_tokens = res["usage"].value("completion_tokens", 0);
  }
  return out;
}

std::vector<EmbeddingVector> LiveGateway::embed(const std::vector<std::string>& texts) {
  if (texts.empty()) return {};
  nlohmann::json body;
  body["model"] = impl_->config.embed_model;
  body["input"] = texts;
  body["dimensions"] = impl_->config.dimension;

  const nlohmann::json res = impl_->post("/embeddings", body);
  std::vector<EmbeddingVector> out(texts.size());
  try {
    for (const auto& item : res.at("data")) {
      const std::size_t index = item.at("index").get<std::size_t>();
      if (index >= out.size()) throw NetworkError("embedding index out of range");
      out[index].values = item.at("embedding").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw NetworkError(std::string("malformed embeddings response: ") + e.what());
  }
  // enforce the configured dimension and unit norm
  for (auto& v : out) {
    v.values.resize(impl_->config.dimension, 0.0);
    const double n = v.norm();
    if (n > 0.0) {
      for (double& x : v.values) x /= n;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// RecordingGateway

RecordingGateway::RecordingGateway(std::shared_ptr<Gateway> inner, std::string path)
    : inner_(std::move(inner)), path_(std::move(path)) {}

std::size_t RecordingGateway::embedding_dimension() const {
  return inner_->embedding_dimension();
}

ChatResponse RecordingGateway::chat(const ChatRequest& request) {
  ChatResponse response = inner_->chat(request);
  nlohmann::json j;
  j["kind"] = "chat";
  j["fingerprint"] = request.fingerprint();
  j["request"] = {{"system", request.system},
                  {"user", request.user},
                  {"model", request.model},
                  {"temperature", request.temperature}};
  j["response"] = response.text;
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << j.dump() << "\n";
  return response;
}

std::vector<EmbeddingVector> RecordingGateway::embed(const std::vector<std::string>& texts) {
  auto vectors = inner_->embed(texts);
  std::string blob;
  for (const auto& t : texts) {
    blob.append(t);
    blob.push_back('\x1f');
  }
  nlohmann::json j;
  j["kind"] = "embed";
  j["fingerprint"] = util::fnv1a_hex(blob);
  j["vectors"] = nlohmann::json::array();
  for (const auto& v : vectors) j["vectors"].push_back(v.values);
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << j.dump() << "\n";
  return vectors;
}

}  // namespace xdlate::llm
