#include <set>

#include "xdlate/xdl.hpp"

namespace xdlate::xdl {

std::vector<XdlError> validate_document(const XdlDocument& doc, const StepSchema& schema) {
  std::vector<XdlError> errors;
  auto error = [&](ErrorCode code, std::string message, SourceLocation loc) {
    errors.push_back({code, std::move(message), loc, Severity::Error});
  };

  std::set<std::string> vessel_ids;
  for (const auto& v : doc.hardware) {
    if (!vessel_ids.insert(v.id).second) {
      error(ErrorCode::DuplicateDeclaration, "duplicate vessel id '" + v.id + "'",
            v.location);
    }
  }
  std::set<std::string> reagent_names;
  for (const auto& r : doc.reagents) {
    if (!reagent_names.insert(r.name).second) {
      error(ErrorCode::DuplicateDeclaration, "duplicate reagent '" + r.name + "'",
            r.location);
    }
  }

  for (const auto& step : doc.procedure) {
    const StepSpec* spec = schema.find(step.name);
    if (spec == nullptr) {
      error(ErrorCode::UnknownElement, "unknown step <" + step.name + ">",
            step.location);
      continue;
    }

    std::set<std::string> seen;
    for (const auto& [name, value] : step.attributes) {
      if (!seen.insert(name).second) {
        error(ErrorCode::DuplicateDeclaration,
              "duplicate attribute '" + name + "' on <" + step.name + ">",
              step.location);
        continue;
      }
      auto it = spec->attributes.find(name);
      if (it == spec->attributes.end()) {
        error(ErrorCode::UnknownAttribute,
              "unknown attribute '" + name + "' on <" + step.name + ">",
              step.location);
        continue;
      }
      switch (it->second.kind) {
        case AttrKind::Vessel:
          if (!doc.has_vessel(value)) {
            error(ErrorCode::UndeclaredVessel,
                  "step <" + step.name + "> references undeclared vessel '" +
                      value + "'",
                  step.location);
          }
          break;
        case AttrKind::Reagent:
          if (!doc.has_reagent(value)) {
            error(ErrorCode::UndeclaredReagent,
                  "step <" + step.name + "> references undeclared reagent '" +
                      value + "'",
                  step.location);
          }
          break;
        case AttrKind::Quantity: {
          auto parsed = units::normalize_quantity(value, it->second.dimension);
          if (!parsed.ok()) {
            const auto code =
                parsed.error->kind == units::QuantityErrorKind::WrongDimension
                    ? ErrorCode::WrongDimension
                    : ErrorCode::MalformedQuantity;
            error(code, "attribute '" + name + "': " + parsed.error->message,
                  step.location);
          }
          break;
        }
        case AttrKind::Flag:
        case AttrKind::Text:
          break;
      }
    }

    for (const auto& r : spec->required) {
      if (step.attr(r) == nullptr) {
        error(ErrorCode::MissingRequiredAttribute,
              "<" + step.name + "> requires attribute '" + r + "'", step.location);
      }
    }
    for (const auto& group : spec->one_of) {
      bool any = false;
      for (const auto& m : group) {
        if (step.attr(m) != nullptr) any = true;
      }
      if (!any) {
        std::string names;
        for (std::size_t i = 0; i < group.size(); ++i) {
          names += (i ? "/" : "") + group[i];
        }
        error(ErrorCode::MissingRequiredAttribute,
              "<" + step.name + "> requires one of " + names, step.location);
      }
    }
  }
  return errors;
}

}  // namespace xdlate::xdl
