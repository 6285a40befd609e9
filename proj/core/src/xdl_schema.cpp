#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

#include "xdlate/embedded_data.hpp"
#include "xdlate/util.hpp"
#include "xdlate/xdl.hpp"

namespace xdlate::xdl {

namespace {

AttrKind attr_kind_from_string(const std::string& s) {
  if (s == "vessel") return AttrKind::Vessel;
  if (s == "reagent") return AttrKind::Reagent;
  if (s == "quantity") return AttrKind::Quantity;
  if (s == "flag") return AttrKind::Flag;
  if (s == "text") return AttrKind::Text;
  throw std::runtime_error("step schema: unknown attribute kind '" + s + "'");
}

}  // namespace

StepSchema StepSchema::from_json_text(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  StepSchema schema;
  const auto& steps = j.at("steps");
  for (auto it = steps.begin(); it != steps.end(); ++it) {
    StepSpec spec;
    const auto& body = it.value();
    for (const auto& r : body.value("required", nlohmann::json::array())) {
      spec.required.push_back(r.get<std::string>());
    }
    for (const auto& group : body.value("one_of", nlohmann::json::array())) {
      std::vector<std::string> g;
      for (const auto& m : group) g.push_back(m.get<std::string>());
      spec.one_of.push_back(std::move(g));
    }
    const auto& attrs = body.at("attributes");
    for (auto ait = attrs.begin(); ait != attrs.end(); ++ait) {
      AttrSpec aspec;
      aspec.kind = attr_kind_from_string(ait.value().at("kind").get<std::string>());
      if (aspec.kind == AttrKind::Quantity) {
        const std::string dim = ait.value().at("dimension").get<std::string>();
        auto d = units::dimension_from_string(dim);
        if (!d) throw std::runtime_error("step schema: unknown dimension '" + dim + "'");
        aspec.dimension = *d;
      }
      spec.attributes[ait.key()] = aspec;
    }
    // every required / one_of attribute must be declared
    for (const auto& r : spec.required) {
      if (!spec.attributes.count(r)) {
        throw std::runtime_error("step schema: required attribute '" + r +
                                 "' of " + it.key() + " is not declared");
      }
    }
    for (const auto& g : spec.one_of) {
      for (const auto& m : g) {
        if (!spec.attributes.count(m)) {
          throw std::runtime_error("step schema: one_of attribute '" + m +
                                   "' of " + it.key() + " is not declared");
        }
      }
    }
    schema.steps_[it.key()] = std::move(spec);
  }
  if (schema.steps_.empty()) throw std::runtime_error("step schema: no steps defined");
  return schema;
}

StepSchema StepSchema::from_file(const std::string& path) {
  return from_json_text(util::read_file(path));
}

const StepSchema& StepSchema::builtin() {
  static const StepSchema schema = from_json_text(data::kXdlStepsJson);
  return schema;
}

const StepSpec* StepSchema::find(std::string_view step_name) const {
  auto it = steps_.find(std::string(step_name));
  return it == steps_.end() ? nullptr : &it->second;
}

std::vector<std::string> StepSchema::step_names() const {
  std::vector<std::string> names;
  names.reserve(steps_.size());
  for (const auto& [name, _] : steps_) names.push_back(name);
  return names;
}

std::string StepSchema::documentation() const {
  std::ostringstream out;
  for (const auto& [name, spec] : steps_) {
    out << name << ":";
    for (const auto& [attr, aspec] : spec.attributes) {
      bool required = false;
      for (const auto& r : spec.required) {
        if (r == attr) required = true;
      }
      out << " " << attr;
      switch (aspec.kind) {
        case AttrKind::Vessel: out << "=<vessel id>"; break;
        case AttrKind::Reagent: out << "=<reagent name>"; break;
        case AttrKind::Quantity:
          out << "=<" << units::to_string(aspec.dimension) << ">";
          break;
        case AttrKind::Flag: out << "=true|false"; break;
        case AttrKind::Text: out << "=<text>"; break;
      }
      if (required) out << " (required)";
    }
    if (!spec.one_of.empty()) {
      for (const auto& g : spec.one_of) {
        out << "; one of {";
        for (std::size_t i = 0; i < g.size(); ++i) out << (i ? ", " : "") << g[i];
        out << "} required";
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace xdlate::xdl
