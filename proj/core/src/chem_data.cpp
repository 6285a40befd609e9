#ifdef XDLATE_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif

#include "xdlate/chem_data.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "xdlate/embedded_data.hpp"
#include "xdlate/llm.hpp"
#include "xdlate/util.hpp"

namespace xdlate::chem {

namespace {

// Minimal CSV with double-quote escaping; enough for the shipped tables.
std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace

// ---------------------------------------------------------------------------
// ChemicalClient

ChemicalClient::ChemicalClient() : ChemicalClient(Options{}) {}

ChemicalClient::ChemicalClient(Options options) : options_(std::move(options)) {
  load_cache(options_.cache_json.empty() ? data::kChemicalsCacheJson
                                         : options_.cache_json);
}

void ChemicalClient::load_cache(const std::string& json_text) {
  const nlohmann::json j = nlohmann::json::parse(json_text);
  for (auto it = j.begin(); it != j.end(); ++it) {
    ChemicalInfo info;
    info.query = it.key();
    info.iupac_name = it.value().value("iupac_name", "");
    if (it.value().contains("molar_mass")) {
      info.molar_mass = it.value()["molar_mass"].get<double>();
    }
    for (const auto& s : it.value().value("synonyms", nlohmann::json::array())) {
      info.synonyms.push_back(s.get<std::string>());
    }
    const std::string key = util::to_lower(it.key());
    for (const auto& s : info.synonyms) synonyms_[util::to_lower(s)] = key;
    cache_[key] = std::move(info);
  }
}

std::vector<std::string> ChemicalClient::known_names() const {
  std::vector<std::string> names;
  names.reserve(cache_.size() + synonyms_.size());
  for (const auto& [name, _] : cache_) names.push_back(name);
  for (const auto& [syn, _] : synonyms_) names.push_back(syn);
  return names;
}

std::optional<ChemicalInfo> ChemicalClient::lookup(const std::string& name) {
  const std::string key = util::to_lower(util::trim(name));
  if (key.empty()) return std::nullopt;

  auto direct = cache_.find(key);
  if (direct != cache_.end()) {
    ChemicalInfo info = direct->second;
    info.query = name;
    return info;
  }
  auto syn = synonyms_.find(key);
  if (syn != synonyms_.end()) {
    ChemicalInfo info = cache_.at(syn->second);
    info.query = name;
    return info;
  }
  if (not_found_.count(key)) return std::nullopt;

  if (options_.allow_network) {
    auto live = lookup_live(name);
    if (live) {
      for (const auto& s : live->synonyms) synonyms_[util::to_lower(s)] = key;
      cache_[key] = *live;
      return live;
    }
  }
  not_found_.insert(key);
  return std::nullopt;
}

std::optional<ChemicalInfo> ChemicalClient::lookup_live(const std::string& name) {
  if (std::getenv("XDLATE_FORBID_NETWORK") != nullptr) {
    throw llm::NetworkError("chemical lookup blocked: XDLATE_FORBID_NETWORK is set");
  }

  const std::size_t scheme = options_.base_url.find("://");
  const std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const std::size_t slash = options_.base_url.find('/', host_start);
  const std::string origin =
      slash == std::string::npos ? options_.base_url : options_.base_url.substr(0, slash);
  const std::string prefix =
      slash == std::string::npos ? "" : options_.base_url.substr(slash);

  std::string encoded;
  for (unsigned char c : name) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_') {
      encoded.push_back(static_cast<char>(c));
    } else {
      char buf[8];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      encoded += buf;
    }
  }
  const std::string path =
      prefix + "/compound/name/" + encoded + "/property/IUPACName,MolecularWeight/JSON";

  httplib::Client client(origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(30);
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(options_.retry_backoff_ms * (1 << (attempt - 1))));
    }
    ++network_calls_;
    auto res = client.Get(path);
    if (!res) continue;          // retry on transport failure
    if (res->status == 404) return std::nullopt;
    if (res->status != 200) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(res->body);
      const auto& prop = j.at("PropertyTable").at("Properties").at(0);
      ChemicalInfo info;
      info.query = name;
      info.iupac_name = prop.value("IUPACName", "");
      if (prop.contains("MolecularWeight")) {
        if (prop["MolecularWeight"].is_string()) {
          info.molar_mass = std::stod(prop["MolecularWeight"].get<std::string>());
        } else {
          info.molar_mass = prop["MolecularWeight"].get<double>();
        }
      }
      return info;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;  // degrade to cache-miss after retries
}

// ---------------------------------------------------------------------------
// SolventTable

SolventTable::SolventTable() { *this = from_csv(data::kSolventsCsv); }

SolventTable SolventTable::from_csv(const std::string& csv_text) {
  SolventTable table{raw_tag{}};
  bool header = true;
  for (const std::string& line : util::split(csv_text, '\n')) {
    if (util::trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = parse_csv_line(line);
    if (fields.size() < 2) continue;
    const std::string name = util::trim(fields[0]);
    const double bp = std::stod(fields[1]);
    table.bp_[util::to_lower(name)] = bp;
    if (fields.size() >= 3) {
      for (const auto& syn : util::split(fields[2], ';')) {
        const std::string s = util::trim(syn);
        if (!s.empty()) table.synonyms_[util::to_lower(s)] = util::to_lower(name);
      }
    }
  }
  return table;
}

std::optional<double> SolventTable::boiling_point(std::string_view name) const {
  const std::string key = util::to_lower(util::trim(name));
  auto it = bp_.find(key);
  if (it != bp_.end()) return it->second;
  auto syn = synonyms_.find(key);
  if (syn != synonyms_.end()) return bp_.at(syn->second);
  return std::nullopt;
}

std::string SolventTable::mentioned_in(std::string_view text) const {
  const std::string lower = util::to_lower(text);
  std::string out;
  for (const auto& [name, bp] : bp_) {
    bool mentioned = lower.find(name) != std::string::npos;
    if (!mentioned) {
      for (const auto& [syn, target] : synonyms_) {
        if (target == name && lower.find(syn) != std::string::npos) mentioned = true;
      }
    }
    if (mentioned) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s: %.1f °C\n", name.c_str(), bp);
      out += buf;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double amount_to_mass_g(double amount_mmol, double molar_mass_g_mol) {
  if (!(amount_mmol > 0.0) || !(molar_mass_g_mol > 0.0)) {
    throw std::invalid_argument("amount and molar mass must both be positive");
  }
  const double grams = amount_mmol * molar_mass_g_mol / 1000.0;
  const int exponent = static_cast<int>(std::floor(std::log10(grams)));
  const double scale = std::pow(10.0, 3 - exponent);
  return std::round(grams * scale) / scale;
}

}  // namespace xdlate::chem
