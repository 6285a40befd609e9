#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace xdlate::chem {

struct ChemicalInfo {
  std::string query;  // the name that was looked up
  std::string iupac_name;
  std::optional<double> molar_mass;  // g/mol
  std::vector<std::string> synonyms;
};

/// Offline-first chemical lookup: a committed fixture cache keyed by
/// lowercase name (embedded copy of core/data/chemicals_cache.json), with an
/// optional PubChem-PUG-compatible REST fallback that must be enabled
/// explicitly.
class ChemicalClient {
 public:
  struct Options {
    std::string cache_json;     // empty = embedded cache
    bool allow_network = false;
    std::string base_url = "https://pubchem.ncbi.nlm.nih.gov/rest/pug";
    int max_retries = 2;
    int retry_backoff_ms = 200;
  };

  ChemicalClient();
  explicit ChemicalClient(Options options);

  /// Cache (including synonyms) first; network only when enabled. Not-found
  /// results are remembered so repeats stay off the network.
  std::optional<ChemicalInfo> lookup(const std::string& name);

  std::size_t network_calls() const { return network_calls_; }

  /// Primary names and synonyms currently in the cache, for scanning
  /// procedure texts for known chemicals.
  std::vector<std::string> known_names() const;

 private:
  void load_cache(const std::string& json_text);
  std::optional<ChemicalInfo> lookup_live(const std::string& name);

  Options options_;
  std::map<std::string, ChemicalInfo> cache_;    // by lowercase primary name
  std::map<std::string, std::string> synonyms_;  // lowercase synonym -> primary
  std::set<std::string> not_found_;
  std::size_t network_calls_ = 0;
};

/// Boiling points of common solvents at ambient pressure, loaded from the
/// committed CSV (name, bp °C, semicolon-separated synonyms).
class SolventTable {
 public:
  SolventTable();  // embedded copy of core/data/solvents.csv
  static SolventTable from_csv(const std::string& csv_text);

  std::optional<double> boiling_point(std::string_view name) const;
  std::size_t size() const { return bp_.size(); }

  /// "name: NN °C" lines for names mentioned in `text`; used in prompts.
  std::string mentioned_in(std::string_view text) const;

 private:
  struct raw_tag {};
  explicit SolventTable(raw_tag) {}

  std::map<std::string, double> bp_;             // by lowercase name
  std::map<std::string, std::string> synonyms_;  // lowercase synonym -> name
};

/// mass [g] = amount [mmol] × molar mass [g/mol] / 1000, rounded to 4
/// significant figures. Throws std::invalid_argument on non-positive input.
double amount_to_mass_g(double amount_mmol, double molar_mass_g_mol);

}  // namespace xdlate::chem
