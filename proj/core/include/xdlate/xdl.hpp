#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xdlate/units.hpp"

namespace xdlate::xdl {

struct SourceLocation {
  int line = 0;    // 1-based; 0 = no location (programmatic documents)
  int column = 0;  // 1-based
  bool operator==(const SourceLocation&) const = default;
};

enum class ErrorCode {
  UnknownElement,
  UnknownAttribute,
  MissingRequiredAttribute,
  MalformedQuantity,
  WrongDimension,
  UndeclaredReagent,
  UndeclaredVessel,
  MalformedXml,
  DuplicateDeclaration,
};

enum class Severity { Error, Warning };

std::string_view to_string(ErrorCode code);
std::optional<ErrorCode> error_code_from_string(std::string_view name);

struct XdlError {
  ErrorCode code;
  std::string message;
  SourceLocation location;  // line 0 only for MalformedXml at end-of-input
  Severity severity = Severity::Error;
};

/// One rendered finding per error, "N. [Code] line L: message".
std::string render_findings(const std::vector<XdlError>& errors, std::size_t cap = 40);

struct VesselDecl {
  std::string id;
  std::string class_hint;  // Component "type" attribute, may be empty
  SourceLocation location;
};

struct ReagentDecl {
  std::string name;
  std::string role;           // optional
  std::string concentration;  // optional, free text
  SourceLocation location;
};

struct XdlStep {
  std::string name;
  // insertion-ordered; names unique (enforced by the parser)
  std::vector<std::pair<std::string, std::string>> attributes;
  SourceLocation location;

  const std::string* attr(std::string_view name) const;
};

struct XdlDocument {
  std::vector<VesselDecl> hardware;
  std::vector<ReagentDecl> reagents;
  std::vector<XdlStep> procedure;

  bool has_vessel(std::string_view id) const;
  bool has_reagent(std::string_view name) const;
};

/// Structural equality; source locations are ignored so that
/// parse(serialize(d)) == d holds.
bool structurally_equal(const XdlDocument& a, const XdlDocument& b);

// ---------------------------------------------------------------------------
// Step schema: which steps exist and which attributes they take. Shipped as
// a JSON data file so fixtures can extend the vocabulary; `builtin()` is the
// compiled-in copy of that file.

enum class AttrKind { Vessel, Reagent, Quantity, Flag, Text };

struct AttrSpec {
  AttrKind kind = AttrKind::Text;
  units::Dimension dimension = units::Dimension::Volume;  // Quantity only
};

struct StepSpec {
  std::vector<std::string> required;
  std::vector<std::vector<std::string>> one_of;
  std::map<std::string, AttrSpec> attributes;
};

class StepSchema {
 public:
  static const StepSchema& builtin();
  static StepSchema from_json_text(const std::string& json_text);
  static StepSchema from_file(const std::string& path);

  const StepSpec* find(std::string_view step_name) const;
  std::vector<std::string> step_names() const;  // sorted

  /// Human-readable summary of every step and its attributes, used in
  /// translation prompts.
  std::string documentation() const;

 private:
  std::map<std::string, StepSpec> steps_;
};

// ---------------------------------------------------------------------------

struct ParseResult {
  std::optional<XdlDocument> document;  // best effort; absent only when the
                                        // XML skeleton is unrecoverable
  std::vector<XdlError> errors;
  bool ok() const { return document.has_value() && errors.empty(); }
};

/// Single-pass parse of XDL text. Collects every detectable error instead of
/// stopping at the first one; malformed steps are skipped element-wise so the
/// rest of the document still parses.
ParseResult parse_xdl(std::string_view source,
                      const StepSchema& schema = StepSchema::builtin());

/// Semantic validation of a parsed or programmatically built document:
/// undeclared vessel/reagent references, quantity parse and dimension checks,
/// duplicate declarations. Pure and idempotent.
std::vector<XdlError> validate_document(const XdlDocument& doc,
                                        const StepSchema& schema = StepSchema::builtin());

/// parse_xdl + validate_document with exact-duplicate findings removed; the
/// "stage 1" check of the translation pipeline.
ParseResult check_xdl(std::string_view source,
                      const StepSchema& schema = StepSchema::builtin());

/// Serializes to canonical XDL text (2-space indent, attribute order
/// preserved). Throws std::invalid_argument if any attribute value still
/// contains an unresolved "[[...]]" placeholder.
std::string serialize_xdl(const XdlDocument& doc);

}  // namespace xdlate::xdl
