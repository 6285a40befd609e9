#include "xdlate/gap_miner.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "xdlate/embedded_data.hpp"
#include "xdlate/extraction.hpp"
#include "xdlate/util.hpp"

namespace xdlate::gaps {

std::vector<Cluster> cluster_embeddings(const std::vector<llm::EmbeddingVector>& vectors,
                                        double threshold) {
  const std::size_t n = vectors.size();
  std::vector<Cluster> clusters;
  if (n == 0) return clusters;

  // pairwise cosine distances
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = 1.0 - llm::EmbeddingVector::cosine(vectors[i], vectors[j]);
      dist[i][j] = dist[j][i] = d;
    }
  }

  clusters.reserve(n);
  for (std::size_t i = 0; i < n; ++i) clusters.push_back({{i}});

  auto linkage = [&](const Cluster& a, const Cluster& b) {
    double sum = 0.0;
    for (std::size_t i : a.members) {
      for (std::size_t j : b.members) sum += dist[i][j];
    }
    return sum / static_cast<double>(a.members.size() * b.members.size());
  };

  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        const double d = linkage(clusters[i], clusters[j]);
        if (d < best) {  // strict < keeps the smallest (i, j) on ties
          best = d;
          bi = i;
          bj = j;
        }
      }
    }
    if (best >= threshold) break;
    clusters[bi].members.insert(clusters[bi].members.end(),
                                clusters[bj].members.begin(),
                                clusters[bj].members.end());
    std::sort(clusters[bi].members.begin(), clusters[bi].members.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  std::sort(clusters.begin(), clusters.end(), [](const Cluster& a, const Cluster& b) {
    return a.members.front() < b.members.front();
  });
  return clusters;
}

std::vector<Cluster> cluster_flagged(const std::vector<FlaggedStep>& steps,
                                     llm::Gateway& gateway, double threshold) {
  if (steps.empty()) throw std::invalid_argument("nothing to cluster");
  std::vector<std::string> texts;
  texts.reserve(steps.size());
  for (const auto& s : steps) texts.push_back(s.description);
  return cluster_embeddings(gateway.embed(texts), threshold);
}

// ---------------------------------------------------------------------------

std::string_view to_string(FeatureCategory c) {
  switch (c) {
    case FeatureCategory::NewAttribute: return "new_attribute";
    case FeatureCategory::NewStep: return "new_step";
    case FeatureCategory::NewStepAndHardware: return "new_step_and_hardware";
  }
  return "?";
}

namespace {

FeatureSuggestion fallback_suggestion(const std::vector<FlaggedStep>& steps,
                                      const Cluster& cluster) {
  FeatureSuggestion s;
  // shortest member description doubles as the label
  std::string label = steps[cluster.members.front()].description;
  for (std::size_t m : cluster.members) {
    if (steps[m].description.size() < label.size()) label = steps[m].description;
  }
  s.label = label;
  s.category = FeatureCategory::NewStep;
  s.urgency = 3;
  s.ease = 3;
  return s;
}

}  // namespace

std::vector<FeatureSuggestion> categorize_clusters(
    const std::vector<FlaggedStep>& steps, const std::vector<Cluster>& clusters,
    llm::Gateway* gateway, const std::string& model,
    std::vector<std::string>* warnings) {
  if (clusters.empty()) throw std::invalid_argument("no clusters to categorize");

  std::vector<FeatureSuggestion> suggestions;
  for (const auto& cluster : clusters) {
    std::ostringstream members;
    for (std::size_t m : cluster.members) {
      members << "- " << steps[m].description;
      if (!steps[m].reason.empty()) members << " (" << steps[m].reason << ")";
      members << "\n";
    }

    FeatureSuggestion suggestion;
    bool categorized = false;
    if (gateway != nullptr) {
      llm::ChatRequest request;
      request.system = "You plan new features for a chemistry DSL.";
      request.user = util::render_template(data::kPromptCategorize,
                                           {{"members", members.str()}});
      request.model = model;

      auto parse = [&](const std::string& text) -> bool {
        auto payload = extraction::extract_json_object(text);
        if (!payload || !payload->contains("label") || !payload->contains("category")) {
          return false;
        }
        const std::string category = payload->value("category", "");
        if (category == "new_attribute") {
          suggestion.category = FeatureCategory::NewAttribute;
        } else if (category == "new_step") {
          suggestion.category = FeatureCategory::NewStep;
        } else if (category == "new_step_and_hardware") {
          suggestion.category = FeatureCategory::NewStepAndHardware;
        } else {
          return false;
        }
        suggestion.label = payload->value("label", "");
        suggestion.urgency = std::max(1, payload->value("urgency", 3));
        suggestion.ease = std::max(1, payload->value("ease", 3));
        return !suggestion.label.empty();
      };

      if (parse(gateway->chat(request).text)) {
        categorized = true;
      } else {
        llm::ChatRequest retry = request;
        retry.user +=
            "\n\nYour previous answer was not the required JSON object. Return "
            "only the JSON object with keys label, category, urgency, ease.";
        categorized = parse(gateway->chat(retry).text);
      }
    }
    if (!categorized) {
      suggestion = fallback_suggestion(steps, cluster);
      if (warnings != nullptr) {
        warnings->push_back("cluster '" + suggestion.label +
                            "' could not be categorized; defaulted to new_step");
      }
    }
    suggestion.member_count = cluster.members.size();
    for (std::size_t m : cluster.members) {
      if (suggestion.examples.size() >= 3) break;
      suggestion.examples.push_back(steps[m].description);
    }
    suggestions.push_back(std::move(suggestion));
  }
  return suggestions;
}

// ---------------------------------------------------------------------------

namespace {

const std::set<std::string>& stopwords() {
  static const std::set<std::string> words = [] {
    std::set<std::string> out;
    for (const std::string& line : util::split(data::kStopwordsTxt, '\n')) {
      const std::string t = util::trim(line);
      if (!t.empty() && t[0] != '#') out.insert(t);
    }
    return out;
  }();
  return words;
}

}  // namespace

std::vector<std::pair<std::string, std::size_t>> keyword_frequency(
    const std::vector<std::string>& corpus, std::size_t top_n) {
  if (corpus.empty()) throw std::invalid_argument("corpus must not be empty");
  std::map<std::string, std::size_t> counts;
  for (const auto& text : corpus) {
    std::string token;
    auto flush = [&] {
      if (!token.empty() && !stopwords().count(token)) ++counts[token];
      token.clear();
    };
    for (char c : text) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      } else {
        flush();
      }
    }
    flush();
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > top_n) ranked.resize(top_n);
  return ranked;
}

std::string roadmap_report(const std::vector<FeatureSuggestion>& suggestions) {
  if (suggestions.empty()) throw std::invalid_argument("no suggestions to report");

  std::ostringstream out;
  out << "# XDL feature roadmap\n\n";
  out << suggestions.size() << " suggestions mined from steps the translator "
      << "could not express, grouped by the kind of change needed and ordered "
      << "by urgency, then ease of implementation.\n";

  const std::pair<FeatureCategory, const char*> sections[] = {
      {FeatureCategory::NewAttribute, "New attributes for existing steps"},
      {FeatureCategory::NewStep, "New steps"},
      {FeatureCategory::NewStepAndHardware, "New steps requiring hardware support"}};

  for (const auto& [category, heading] : sections) {
    std::vector<const FeatureSuggestion*> group;
    for (const auto& s : suggestions) {
      if (s.category == category) group.push_back(&s);
    }
    if (group.empty()) continue;
    std::sort(group.begin(), group.end(), [](const auto* a, const auto* b) {
      if (a->urgency != b->urgency) return a->urgency < b->urgency;
      if (a->ease != b->ease) return a->ease < b->ease;
      return a->label < b->label;
    });
    out << "\n## " << heading << "\n\n";
    for (const auto* s : group) {
      out << "- **" << s->label << "** (" << s->member_count
          << (s->member_count == 1 ? " occurrence" : " occurrences") << ", urgency "
          << s->urgency << ", ease " << s->ease << ")\n";
      for (const auto& example : s->examples) {
        out << "  - e.g. \"" << example << "\"\n";
      }
    }
  }
  return out.str();
}

std::vector<FlaggedStep> load_flagged(const mem::VectorStore& store) {
  std::vector<FlaggedStep> steps;
  for (const mem::VectorRecord* rec : store.all(mem::Namespace::FlaggedSteps)) {
    FlaggedStep s;
    s.description = rec->text;
    auto get = [&](const char* key) {
      auto it = rec->metadata.find(key);
      return it == rec->metadata.end() ? std::string() : it->second;
    };
    s.reason = get("reason");
    s.source_title = get("source_title");
    s.session_id = get("session_id");
    steps.push_back(std::move(s));
  }
  return steps;
}

}  // namespace xdlate::gaps
