#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "xdlate/llm.hpp"
#include "xdlate/translation.hpp"
#include "xdlate/vector_store.hpp"

namespace xdlate::gaps {

using translation::FlaggedStep;

struct Cluster {
  std::vector<std::size_t> members;  // indices into the flagged-step list
};

/// Average-linkage agglomerative clustering over cosine distance: the
/// globally closest pair merges while its distance stays below the
/// threshold. Deterministic given input order.
std::vector<Cluster> cluster_embeddings(const std::vector<llm::EmbeddingVector>& vectors,
                                        double threshold);

std::vector<Cluster> cluster_flagged(const std::vector<FlaggedStep>& steps,
                                     llm::Gateway& gateway, double threshold = 0.45);

enum class FeatureCategory { NewAttribute, NewStep, NewStepAndHardware };
std::string_view to_string(FeatureCategory c);

struct FeatureSuggestion {
  std::string label;
  FeatureCategory category = FeatureCategory::NewStep;
  std::size_t member_count = 0;
  std::vector<std::string> examples;  // up to 3 member descriptions
  int urgency = 3;  // 1 = most urgent
  int ease = 3;     // 1 = easiest
};

/// One agent call per cluster; malformed output falls back to a new_step
/// suggestion with a warning after one reprompt. Passing a null gateway
/// selects the offline fallback for every cluster.
std::vector<FeatureSuggestion> categorize_clusters(
    const std::vector<FlaggedStep>& steps, const std::vector<Cluster>& clusters,
    llm::Gateway* gateway, const std::string& model,
    std::vector<std::string>* warnings = nullptr);

/// Case-folded keyword counts over a corpus with stopwords removed, sorted
/// by descending count then lexicographically.
std::vector<std::pair<std::string, std::size_t>> keyword_frequency(
    const std::vector<std::string>& corpus, std::size_t top_n);

/// Markdown roadmap grouped by category, ordered by (urgency, ease, label).
std::string roadmap_report(const std::vector<FeatureSuggestion>& suggestions);

std::vector<FlaggedStep> load_flagged(const mem::VectorStore& store);

}  // namespace xdlate::gaps
