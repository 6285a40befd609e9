#include <sstream>
#include <stdexcept>

#include "xdlate/xdl.hpp"

namespace xdlate::xdl {

namespace {

std::string escape(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

void reject_placeholder(std::string_view value, std::string_view context) {
  if (value.find("[[") != std::string_view::npos) {
    throw std::invalid_argument("cannot serialize unresolved placeholder in " +
                                std::string(context) + ": '" + std::string(value) +
                                "'");
  }
}

}  // namespace

std::string serialize_xdl(const XdlDocument& doc) {
  std::ostringstream out;
  out << "<Synthesis>\n";

  out << "  <Hardware>\n";
  for (const auto& v : doc.hardware) {
    reject_placeholder(v.id, "Component id");
    out << "    <Component id=\"" << escape(v.id) << "\"";
    if (!v.class_hint.empty()) out << " type=\"" << escape(v.class_hint) << "\"";
    out << " />\n";
  }
  out << "  </Hardware>\n";

  out << "  <Reagents>\n";
  for (const auto& r : doc.reagents) {
    reject_placeholder(r.name, "Reagent name");
    out << "    <Reagent name=\"" << escape(r.name) << "\"";
    if (!r.role.empty()) out << " role=\"" << escape(r.role) << "\"";
    if (!r.concentration.empty()) {
      out << " concentration=\"" << escape(r.concentration) << "\"";
    }
    out << " />\n";
  }
  out << "  </Reagents>\n";

  out << "  <Procedure>\n";
  for (const auto& step : doc.procedure) {
    out << "    <" << step.name;
    for (const auto& [name, value] : step.attributes) {
      reject_placeholder(value, "<" + step.name + "> attribute '" + name + "'");
      out << " " << name << "=\"" << escape(value) << "\"";
    }
    out << " />\n";
  }
  out << "  </Procedure>\n";

  out << "</Synthesis>\n";
  return out.str();
}

}  // namespace xdlate::xdl
