#pragma once

// Independent oracles used by the unit and acceptance suites. Everything in
// this header recomputes expectations from first principles (plain loops and
// arithmetic) so that it stays decoupled from the implementation under test.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "xdlate/hardware_graph.hpp"
#include "xdlate/llm.hpp"
#include "xdlate/simulator.hpp"
#include "xdlate/xdl.hpp"

namespace support {

using namespace xdlate;

// ===========================================================================
// Mutation engine: start from a generated valid document, inject defects by
// in-place line edits, and keep the injection log as the ground truth.

struct Injected {
  xdl::ErrorCode code;
  int line;  // 1-based
};

struct MutatedFixture {
  std::string source;
  std::vector<Injected> injected;
};

/// A valid document with `n_steps` steps rendered to text. Uses only the
/// builtin vocabulary and declared references, so check_xdl reports nothing.
inline std::string make_valid_source(std::mt19937_64& rng, int n_steps) {
  xdl::XdlDocument doc;
  doc.hardware.push_back({"reactor", "reactor", {}});
  doc.hardware.push_back({"separator", "separator", {}});
  doc.reagents.push_back({"methanol", "solvent", "", {}});
  doc.reagents.push_back({"water", "", "", {}});
  doc.reagents.push_back({"toluene", "solvent", "", {}});

  std::uniform_int_distribution<int> pick(0, 5);
  std::uniform_int_distribution<int> vol(5, 80);
  std::uniform_int_distribution<int> minutes(1, 120);
  const char* reagents[] = {"methanol", "water", "toluene"};
  std::uniform_int_distribution<int> reagent_pick(0, 2);

  for (int i = 0; i < n_steps; ++i) {
    xdl::XdlStep step;
    switch (pick(rng)) {
      case 0:
        step.name = "Add";
        step.attributes = {{"vessel", "reactor"},
                           {"reagent", reagents[reagent_pick(rng)]},
                           {"volume", std::to_string(vol(rng)) + " mL"}};
        break;
      case 1:
        step.name = "Stir";
        step.attributes = {{"vessel", "reactor"},
                           {"time", std::to_string(minutes(rng)) + " min"},
                           {"stir_speed", "250 rpm"}};
        break;
      case 2:
        step.name = "HeatChill";
        step.attributes = {{"vessel", "reactor"},
                           {"temp", std::to_string(20 + vol(rng)) + " °C"},
                           {"time", std::to_string(minutes(rng)) + " min"}};
        break;
      case 3:
        step.name = "Transfer";
        step.attributes = {{"from_vessel", "reactor"},
                           {"to_vessel", "separator"},
                           {"volume", std::to_string(vol(rng)) + " mL"}};
        break;
      case 4:
        step.name = "Evaporate";
        step.attributes = {{"vessel", "reactor"},
                           {"volume", std::to_string(vol(rng)) + " mL"}};
        break;
      default:
        step.name = "Wait";
        step.attributes = {{"time", std::to_string(minutes(rng)) + " min"}};
        break;
    }
    doc.procedure.push_back(std::move(step));
  }
  return xdl::serialize_xdl(doc);
}

namespace detail {

inline bool line_has(const std::string& line, const std::string& needle) {
  return line.find(needle) != std::string::npos;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string current;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) lines.push_back(current);
  return lines;
}

inline std::string replace_once(std::string line, const std::string& from,
                                const std::string& to) {
  const auto pos = line.find(from);
  if (pos != std::string::npos) line.replace(pos, from.size(), to);
  return line;
}

}  // namespace detail

/// Injects `defects` independent defects into a valid source, each on its
/// own line, and logs the expected (code, line) pairs.
inline MutatedFixture mutate_source(const std::string& valid_source, int defects,
                                    std::mt19937_64& rng) {
  using detail::line_has;
  auto lines = detail::split_lines(valid_source);

  struct Candidate {
    xdl::ErrorCode code;
    int line_index;  // 0-based
    int variant;
  };
  std::vector<Candidate> candidates;

  for (int i = 0; i < static_cast<int>(lines.size()); ++i) {
    const std::string& line = lines[i];
    const bool is_step = line_has(line, "<Add ") || line_has(line, "<Stir ") ||
                         line_has(line, "<HeatChill ") || line_has(line, "<Transfer ") ||
                         line_has(line, "<Evaporate ") || line_has(line, "<Wait ");
    if (is_step) {
      candidates.push_back({xdl::ErrorCode::UnknownElement, i, 0});
      candidates.push_back({xdl::ErrorCode::UnknownAttribute, i, 0});
      if (line_has(line, "vessel=\"") || line_has(line, "volume=\"") ||
          line_has(line, "time=\"")) {
        candidates.push_back({xdl::ErrorCode::MissingRequiredAttribute, i, 0});
      }
      if (line_has(line, "volume=\"") || line_has(line, "time=\"") ||
          line_has(line, "temp=\"")) {
        candidates.push_back({xdl::ErrorCode::MalformedQuantity, i, 0});
        candidates.push_back({xdl::ErrorCode::WrongDimension, i, 0});
      }
      if (line_has(line, "reagent=\"")) {
        candidates.push_back({xdl::ErrorCode::UndeclaredReagent, i, 0});
      }
      if (line_has(line, "vessel=\"reactor\"") || line_has(line, "from_vessel=\"")) {
        candidates.push_back({xdl::ErrorCode::UndeclaredVessel, i, 0});
      }
    }
    if (line_has(line, "<Reagent ") && i > 0 && line_has(lines[i - 1], "<Reagent ")) {
      candidates.push_back({xdl::ErrorCode::DuplicateDeclaration, i, 0});
    }
    if (line_has(line, "<Component ") && i > 0 && line_has(lines[i - 1], "<Component ")) {
      candidates.push_back({xdl::ErrorCode::DuplicateDeclaration, i, 1});
    }
  }

  std::shuffle(candidates.begin(), candidates.end(), rng);

  MutatedFixture fixture;
  std::set<int> used_lines;
  for (const auto& c : candidates) {
    if (static_cast<int>(fixture.injected.size()) >= defects) break;
    if (used_lines.count(c.line_index)) continue;
    std::string& line = lines[c.line_index];
    using detail::replace_once;
    switch (c.code) {
      case xdl::ErrorCode::UnknownElement: {
        const auto start = line.find('<');
        const auto space = line.find(' ', start);
        line = line.substr(0, start) + "<Zorblify" + line.substr(space);
        break;
      }
      case xdl::ErrorCode::UnknownAttribute:
        line = replace_once(line, " />", " zorp=\"1\" />");
        break;
      case xdl::ErrorCode::MissingRequiredAttribute: {
        for (const char* attr : {"vessel=\"", "volume=\"", "time=\""}) {
          const auto pos = line.find(attr);
          if (pos == std::string::npos) continue;
          const auto endq = line.find('"', pos + std::string(attr).size());
          line.erase(pos, endq - pos + 2);  // attr, value, quote, space
          break;
        }
        break;
      }
      case xdl::ErrorCode::MalformedQuantity: {
        for (const char* attr : {"volume=\"", "time=\"", "temp=\""}) {
          const auto pos = line.find(attr);
          if (pos == std::string::npos) continue;
          const auto vstart = pos + std::string(attr).size();
          const auto vend = line.find('"', vstart);
          line.replace(vstart, vend - vstart, "12 glorp");
          break;
        }
        break;
      }
      case xdl::ErrorCode::WrongDimension: {
        // swap the unit for one from a different dimension
        const std::pair<const char*, const char*> swaps[] = {
            {"volume=\"", "5 rpm"}, {"time=\"", "5 mL"}, {"temp=\"", "5 g"}};
        for (const auto& [attr, value] : swaps) {
          const auto pos = line.find(attr);
          if (pos == std::string::npos) continue;
          const auto vstart = pos + std::string(attr).size();
          const auto vend = line.find('"', vstart);
          line.replace(vstart, vend - vstart, value);
          break;
        }
        break;
      }
      case xdl::ErrorCode::UndeclaredReagent: {
        const auto pos = line.find("reagent=\"");
        const auto vstart = pos + 9;
        const auto vend = line.find('"', vstart);
        line.replace(vstart, vend - vstart, "unobtainium-zz");
        break;
      }
      case xdl::ErrorCode::UndeclaredVessel: {
        auto pos = line.find("vessel=\"reactor\"");
        if (pos != std::string::npos) {
          line = replace_once(line, "vessel=\"reactor\"", "vessel=\"ghost-vessel\"");
        } else {
          pos = line.find("from_vessel=\"");
          const auto vstart = pos + 13;
          const auto vend = line.find('"', vstart);
          line.replace(vstart, vend - vstart, "ghost-vessel");
        }
        break;
      }
      case xdl::ErrorCode::DuplicateDeclaration:
        line = lines[c.line_index - 1];  // duplicate the previous declaration
        break;
      default:
        continue;
    }
    used_lines.insert(c.line_index);
    fixture.injected.push_back({c.code, c.line_index + 1});
  }

  for (const auto& line : lines) fixture.source += line + "\n";
  return fixture;
}

/// True when every injected (code, line) pair appears in the reported
/// errors (multiset inclusion).
inline bool covers_injected(const std::vector<xdl::XdlError>& reported,
                            const std::vector<Injected>& injected) {
  std::multiset<std::pair<int, int>> got;
  for (const auto& e : reported) {
    got.insert({static_cast<int>(e.code), e.location.line});
  }
  for (const auto& inj : injected) {
    const auto key = std::make_pair(static_cast<int>(inj.code), inj.line);
    auto it = got.find(key);
    if (it == got.end()) return false;
    got.erase(it);
  }
  return true;
}

// ===========================================================================
// Path oracle: plain BFS recomputed from the edge list.

inline std::optional<std::size_t> bfs_shortest_length(const hw::HardwareGraph& graph,
                                                      const std::string& src,
                                                      const std::string& dst) {
  if (src == dst) return 1;
  std::map<std::string, std::vector<std::string>> adjacency;
  for (const auto& [a, b] : graph.edges()) adjacency[a].push_back(b);
  std::map<std::string, std::size_t> distance{{src, 1}};
  std::vector<std::string> frontier{src};
  while (!frontier.empty()) {
    std::vector<std::string> next;
    for (const auto& node : frontier) {
      for (const auto& succ : adjacency[node]) {
        if (distance.count(succ)) continue;
        const auto* n = graph.node(succ);
        const bool interior_ok = n != nullptr && (n->node_class == hw::NodeClass::Valve ||
                                                  n->node_class == hw::NodeClass::Pump);
        if (succ != dst && !interior_ok) continue;
        distance[succ] = distance[node] + 1;
        if (succ == dst) return distance[succ];
        next.push_back(succ);
      }
    }
    frontier = std::move(next);
  }
  return std::nullopt;
}

/// Random digraph with the given node count; classes are sampled so that
/// valves/pumps (the only allowed interior nodes) are common.
inline hw::HardwareGraph random_graph(std::mt19937_64& rng, int nodes, double edge_prob) {
  hw::HardwareGraph graph;
  std::uniform_int_distribution<int> cls(0, 5);
  for (int i = 0; i < nodes; ++i) {
    hw::GraphNode node;
    char buf[16];
    std::snprintf(buf, sizeof buf, "n%03d", i);
    node.id = buf;
    switch (cls(rng)) {
      case 0: node.node_class = hw::NodeClass::Reactor; break;
      case 1: node.node_class = hw::NodeClass::Flask; break;
      case 2:
      case 3: node.node_class = hw::NodeClass::Valve; break;
      case 4: node.node_class = hw::NodeClass::Pump; break;
      default: node.node_class = hw::NodeClass::Waste; break;
    }
    graph.add_node(std::move(node));
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j < nodes; ++j) {
      if (i == j) continue;
      if (coin(rng) < edge_prob) {
        char a[16], b[16];
        std::snprintf(a, sizeof a, "n%03d", i);
        std::snprintf(b, sizeof b, "n%03d", j);
        graph.add_edge(a, b);
      }
    }
  }
  return graph;
}

// ===========================================================================
// Volume ledger oracle: re-derives per-node volumes with plain arithmetic,
// mirroring the documented clamp rules but sharing no code with the
// simulator.

struct LedgerResult {
  std::map<std::string, double> volume;  // node id -> mL (all non-waste nodes)
  double removed = 0.0;                  // evaporated or routed to waste
};

inline LedgerResult ledger_oracle(const xdl::XdlDocument& doc,
                                  const hw::HardwareGraph& graph,
                                  const hw::Binding& binding,
                                  double default_flask_volume = 1e6) {
  LedgerResult ledger;
  std::map<std::string, double> capacity;
  for (const auto& node : graph.nodes()) {
    if (node.node_class == hw::NodeClass::Waste) continue;
    const bool flask = node.node_class == hw::NodeClass::Flask;
    const double cap = node.max_volume ? *node.max_volume
                       : flask         ? default_flask_volume
                                       : std::numeric_limits<double>::infinity();
    capacity[node.id] = cap;
    ledger.volume[node.id] = flask ? cap : 0.0;
  }

  auto vessel_of = [&](const xdl::XdlStep& step, const char* attr) -> std::string {
    const std::string* v = step.attr(attr);
    if (v == nullptr) return "";
    auto it = binding.vessel_map.find(*v);
    return it == binding.vessel_map.end() ? "" : it->second;
  };
  auto flask_of = [&](const xdl::XdlStep& step, const char* attr) -> std::string {
    const std::string* v = step.attr(attr);
    if (v == nullptr) return "";
    auto it = binding.reagent_map.find(*v);
    return it == binding.reagent_map.end() ? "" : it->second;
  };
  auto volume_attr = [&](const xdl::XdlStep& step, const char* attr) -> double {
    const std::string* raw = step.attr(attr);
    if (raw == nullptr) return -1.0;
    auto parsed = units::normalize_quantity(*raw, units::Dimension::Volume);
    return parsed.ok() ? parsed.quantity->value : -1.0;
  };
  auto is_waste = [&](const std::string& id) {
    const auto* n = graph.node(id);
    return n != nullptr && n->node_class == hw::NodeClass::Waste;
  };
  // clamp to source volume and destination headroom; empty dst = discard
  auto move = [&](const std::string& src, const std::string& dst, double requested) {
    if (src.empty() || requested <= 0.0) return;
    double amount = std::min(requested, ledger.volume[src]);
    if (dst.empty() || is_waste(dst)) {
      ledger.volume[src] -= amount;
      ledger.removed += amount;
      return;
    }
    amount = std::min(amount, std::max(0.0, capacity[dst] - ledger.volume[dst]));
    ledger.volume[src] -= amount;
    ledger.volume[dst] += amount;
  };

  for (const auto& step : doc.procedure) {
    if (step.name == "Add" || step.name == "Dissolve") {
      const char* reagent_attr = step.name == "Add" ? "reagent" : "solvent";
      const double v = volume_attr(step, "volume");
      if (v >= 0.0) move(flask_of(step, reagent_attr), vessel_of(step, "vessel"), v);
    } else if (step.name == "Transfer") {
      const std::string from = vessel_of(step, "from_vessel");
      const std::string to = vessel_of(step, "to_vessel");
      const double v = volume_attr(step, "volume");
      if (!from.empty() && !to.empty() && v >= 0.0 &&
          hw::find_path(graph, from, to).has_value()) {
        move(from, to, v);
      }
    } else if (step.name == "Evaporate") {
      const std::string vessel = vessel_of(step, "vessel");
      if (vessel.empty()) continue;
      double v = volume_attr(step, "volume");
      if (v < 0.0) v = ledger.volume[vessel];
      v = std::min(v, ledger.volume[vessel]);
      ledger.volume[vessel] -= v;
      ledger.removed += v;
    } else if (step.name == "Filter") {
      const std::string vessel = vessel_of(step, "vessel");
      if (vessel.empty()) continue;
      const std::string filtrate =
          step.attr("filtrate_vessel") ? vessel_of(step, "filtrate_vessel") : "";
      move(vessel, filtrate, ledger.volume[vessel]);
    } else if (step.name == "WashSolid") {
      const std::string vessel = vessel_of(step, "vessel");
      const std::string flask = flask_of(step, "solvent");
      const double v = volume_attr(step, "volume");
      if (vessel.empty() || flask.empty() || v < 0.0) continue;
      const double before = ledger.volume[vessel];
      move(flask, vessel, v);
      move(vessel, "", ledger.volume[vessel] - before);
    } else if (step.name == "Separate") {
      const std::string from = vessel_of(step, "from_vessel");
      const std::string sep = vessel_of(step, "separation_vessel");
      const std::string to = vessel_of(step, "to_vessel");
      if (from.empty() || sep.empty() || to.empty()) continue;
      if (from != sep) move(from, sep, ledger.volume[from]);
      double fraction = 0.5;
      if (const std::string* f = step.attr("organic_fraction")) {
        try {
          const double parsed = std::stod(*f);
          if (parsed >= 0.0 && parsed <= 1.0) fraction = parsed;
        } catch (...) {
        }
      }
      const double total = ledger.volume[sep];
      move(sep, to, total * fraction);
      move(sep, "", ledger.volume[sep]);
    }
    // Stir/StartStir/StopStir/HeatChill*/Dry/Precipitate/Wait: no volume effect
  }
  return ledger;
}

// ===========================================================================
// Exhaustive cosine ranking oracle.

inline std::vector<std::size_t> cosine_rank_oracle(
    const std::vector<std::vector<double>>& stored, const std::vector<double>& probe,
    std::size_t k) {
  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      dot += a[i] * b[i];
    }
    for (double v : a) na += v * v;
    for (double v : b) nb += v * v;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
  };
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < stored.size(); ++i) scored.emplace_back(cosine(stored[i], probe), i);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > k) scored.resize(k);
  std::vector<std::size_t> ids;
  for (const auto& [_, i] : scored) ids.push_back(i);
  return ids;
}

// ===========================================================================
// Random UTF-8 text for chunker properties.

inline std::string random_unicode_text(std::mt19937_64& rng, std::size_t approx_bytes) {
  std::string out;
  std::uniform_int_distribution<int> kind(0, 9);
  std::uniform_int_distribution<int> ascii(32, 126);
  std::uniform_int_distribution<int> latin(0xA1, 0xFF);
  std::uniform_int_distribution<int> cjk(0x4E00, 0x9FFF);
  std::uniform_int_distribution<int> emoji(0x1F300, 0x1F64F);
  auto push_codepoint = [&](int cp) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  };
  while (out.size() < approx_bytes) {
    switch (kind(rng)) {
      case 0: out += ". "; break;
      case 1: out += "\n"; break;
      case 2: out += "\n\n"; break;
      case 3: push_codepoint(latin(rng)); break;
      case 4: push_codepoint(cjk(rng)); break;
      case 5: push_codepoint(emoji(rng)); break;
      default:
        for (int i = 0; i < 8; ++i) push_codepoint(ascii(rng));
        out.push_back(' ');
        break;
    }
  }
  return out;
}

// ===========================================================================
// Constructed embeddings with known group structure.

inline std::vector<llm::EmbeddingVector> grouped_embeddings(std::mt19937_64& rng,
                                                            int groups, int per_group,
                                                            double noise = 0.05) {
  std::vector<llm::EmbeddingVector> vectors;
  const int dim = std::max(8, groups);
  std::normal_distribution<double> gauss(0.0, noise);
  for (int g = 0; g < groups; ++g) {
    for (int i = 0; i < per_group; ++i) {
      llm::EmbeddingVector v;
      v.values.assign(dim, 0.0);
      v.values[static_cast<std::size_t>(g)] = 1.0;
      for (auto& x : v.values) x += gauss(rng);
      double n = v.norm();
      for (auto& x : v.values) x /= n;
      vectors.push_back(std::move(v));
    }
  }
  return vectors;
}

}  // namespace support
