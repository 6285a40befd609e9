#include <cctype>
#include <optional>
#include <sstream>

#include "xdlate/util.hpp"
#include "xdlate/xdl.hpp"

// A small recovering XML reader specialized for XDL. It never stops at the
// first problem: malformed tags are skipped element-wise, stray or missing
// closing tags are repaired against the open-element stack, and every issue
// is recorded with its source position so one pass yields the complete error
// list.

namespace xdlate::xdl {

namespace {

struct RawAttr {
  std::string name;
  std::string value;
  SourceLocation loc;
};

struct RawElement {
  std::string name;
  std::vector<RawAttr> attrs;
  std::vector<RawElement> children;
  SourceLocation loc;

  const RawAttr* attr(std::string_view n) const {
    for (const auto& a : attrs) {
      if (a.name == n) return &a;
    }
    return nullptr;
  }
};

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         c == '.' || c == ':';
}

class XmlReader {
 public:
  XmlReader(std::string_view src, std::vector<XdlError>& errors)
      : src_(src), errors_(errors) {}

  std::optional<RawElement> read_root() {
    skip_misc();
    while (!at_end()) {
      if (peek() == '<' && pos_ + 1 < src_.size() && is_name_start(src_[pos_ + 1])) {
        auto root = read_element();
        if (root) return root;
        skip_misc();
        continue;  // malformed candidate was skipped; try the next tag
      }
      // stray '<' or text before any root element
      error_here("expected a root element");
      skip_past_tag_or_char();
      skip_misc();
    }
    if (!eof_reported_) {
      errors_.push_back({ErrorCode::MalformedXml, "no root element found",
                         SourceLocation{0, 0}, Severity::Error});
    }
    return std::nullopt;
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  bool startswith(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  SourceLocation here() const { return SourceLocation{line_, col_}; }

  void error_at(SourceLocation loc, std::string message) {
    errors_.push_back({ErrorCode::MalformedXml, std::move(message), loc, Severity::Error});
  }
  void error_here(std::string message) { error_at(here(), std::move(message)); }

  void error_eof(const std::string& context) {
    if (eof_reported_) return;
    eof_reported_ = true;
    errors_.push_back({ErrorCode::MalformedXml,
                       "unexpected end of input " + context, SourceLocation{0, 0},
                       Severity::Error});
  }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  // Skips text content, comments, processing instructions and doctype.
  void skip_misc() {
    while (!at_end()) {
      if (peek() != '<') {
        advance();
        continue;
      }
      if (startswith("<!--")) {
        const SourceLocation open = here();
        const std::size_t end = src_.find("-->", pos_ + 4);
        if (end == std::string_view::npos) {
          error_at(open, "unterminated comment");
          while (!at_end()) advance();
          return;
        }
        while (pos_ < end + 3) advance();
        continue;
      }
      if (startswith("<?") || startswith("<!")) {
        while (!at_end() && peek() != '>') advance();
        if (!at_end()) advance();
        continue;
      }
      return;  // '<' starting a tag
    }
  }

  // Recovery: consume up to and including the next '>' (or stop before the
  // next '<', whichever comes first).
  void skip_past_tag_or_char() {
    if (at_end()) return;
    if (peek() == '<') advance();
    while (!at_end() && peek() != '>' && peek() != '<') advance();
    if (!at_end() && peek() == '>') advance();
  }

  std::string read_name() {
    std::string name;
    if (at_end() || !is_name_start(peek())) return name;
    while (!at_end() && is_name_char(peek())) {
      name.push_back(peek());
      advance();
    }
    return name;
  }

  static void append_entity(std::string& out, std::string_view entity) {
    if (entity == "amp") out.push_back('&');
    else if (entity == "lt") out.push_back('<');
    else if (entity == "gt") out.push_back('>');
    else if (entity == "quot") out.push_back('"');
    else if (entity == "apos") out.push_back('\'');
    else if (!entity.empty() && entity[0] == '#') {
      long code = 0;
      try {
        code = (entity.size() > 1 && (entity[1] == 'x' || entity[1] == 'X'))
                   ? std::stol(std::string(entity.substr(2)), nullptr, 16)
                   : std::stol(std::string(entity.substr(1)));
      } catch (...) {
        code = -1;
      }
      if (code > 0 && code < 128) {
        out.push_back(static_cast<char>(code));
      } else {
        out.append("&").append(entity).append(";");  // keep non-ASCII refs verbatim
      }
    } else {
      out.append("&").append(entity).append(";");
    }
  }

  // Reads a quoted attribute value with entity decoding. Returns nullopt on
  // a missing or unterminated quote.
  std::optional<std::string> read_quoted_value() {
    if (at_end() || (peek() != '"' && peek() != '\'')) return std::nullopt;
    const char quote = peek();
    advance();
    std::string value;
    while (!at_end() && peek() != quote) {
      if (peek() == '<') return std::nullopt;  // quote never closed on this tag
      if (peek() == '&') {
        advance();
        std::string entity;
        while (!at_end() && peek() != ';' && peek() != quote && entity.size() < 8) {
          entity.push_back(peek());
          advance();
        }
        if (!at_end() && peek() == ';') {
          advance();
          append_entity(value, entity);
        } else {
          value.push_back('&');
          value.append(entity);
        }
        continue;
      }
      value.push_back(peek());
      advance();
    }
    if (at_end()) return std::nullopt;
    advance();  // closing quote
    return value;
  }

  // Cursor sits on '<' of a start tag. Returns nullopt when the element was
  // malformed and skipped.
  std::optional<RawElement> read_element() {
    const SourceLocation open_loc = here();
    advance();  // '<'
    RawElement elem;
    elem.loc = open_loc;
    elem.name = read_name();
    if (elem.name.empty()) {
      error_at(open_loc, "malformed tag");
      skip_past_tag_or_char();
      return std::nullopt;
    }

    // attributes
    while (true) {
      skip_ws();
      if (at_end()) {
        error_eof("inside tag <" + elem.name + ">");
        return elem;
      }
      if (startswith("/>")) {
        advance();
        advance();
        return elem;
      }
      if (peek() == '>') {
        advance();
        break;  // children follow
      }
      if (!is_name_start(peek())) {
        error_here("malformed attribute in <" + elem.name + ">");
        skip_past_tag_or_char();
        return std::nullopt;  // element-level recovery: drop the whole tag
      }
      RawAttr attr;
      attr.loc = here();
      attr.name = read_name();
      skip_ws();
      if (at_end() || peek() != '=') {
        error_at(attr.loc, "attribute '" + attr.name + "' has no value");
        skip_past_tag_or_char();
        return std::nullopt;
      }
      advance();  // '='
      skip_ws();
      auto value = read_quoted_value();
      if (!value) {
        error_at(attr.loc, "attribute '" + attr.name + "' value is not quoted");
        skip_past_tag_or_char();
        return std::nullopt;
      }
      attr.value = std::move(*value);
      if (elem.attr(attr.name) != nullptr) {
        error_at(attr.loc,
                 "duplicate attribute '" + attr.name + "' in <" + elem.name + ">");
        continue;  // keep the first occurrence
      }
      elem.attrs.push_back(std::move(attr));
    }

    open_stack_.push_back(elem.name);
    read_children(elem);
    open_stack_.pop_back();
    return elem;
  }

  void read_children(RawElement& elem) {
    while (true) {
      skip_misc();
      if (at_end()) {
        error_eof("while <" + elem.name + "> was still open");
        return;
      }
      if (startswith("</")) {
        const SourceLocation close_loc = here();
        const std::size_t save_pos = pos_;
        const int save_line = line_, save_col = col_;
        advance();
        advance();
        const std::string close_name = read_name();
        skip_ws();
        if (!at_end() && peek() == '>') {
          if (close_name == elem.name) {
            advance();
            return;  // proper close
          }
          bool matches_ancestor = false;
          for (const auto& open : open_stack_) {
            if (open == close_name && open != elem.name) matches_ancestor = true;
          }
          if (matches_ancestor) {
            // missing close for the current element; rewind so the ancestor
            // can consume this tag
            error_at(close_loc, "missing closing tag for <" + elem.name + ">");
            pos_ = save_pos;
            line_ = save_line;
            col_ = save_col;
            return;
          }
          advance();  // consume '>' of the stray closing tag
          error_at(close_loc, "stray closing tag </" + close_name + ">");
          continue;
        }
        error_at(close_loc, "malformed closing tag");
        skip_past_tag_or_char();
        continue;
      }
      if (peek() == '<' && pos_ + 1 < src_.size() && is_name_start(src_[pos_ + 1])) {
        auto child = read_element();
        if (child) elem.children.push_back(std::move(*child));
        continue;
      }
      error_here("unexpected '<'");
      skip_past_tag_or_char();
    }
  }

  std::string_view src_;
  std::vector<XdlError>& errors_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  bool eof_reported_ = false;
  std::vector<std::string> open_stack_;
};

// --------------------------------------------------------------------------
// RawElement tree -> XdlDocument

class DocumentBuilder {
 public:
  DocumentBuilder(const StepSchema& schema, std::vector<XdlError>& errors)
      : schema_(schema), errors_(errors) {}

  XdlDocument build(const RawElement& root) {
    XdlDocument doc;
    if (root.name != "Synthesis") {
      error(ErrorCode::UnknownElement,
            "root element must be <Synthesis>, got <" + root.name + ">", root.loc);
    }
    for (const auto& section : root.children) {
      if (section.name == "Hardware") {
        read_hardware(section, doc);
      } else if (section.name == "Reagents") {
        read_reagents(section, doc);
      } else if (section.name == "Procedure") {
        read_procedure(section, doc);
      } else {
        error(ErrorCode::UnknownElement,
              "unknown section <" + section.name + ">", section.loc);
      }
    }
    return doc;
  }

 private:
  void error(ErrorCode code, std::string message, SourceLocation loc) {
    errors_.push_back({code, std::move(message), loc, Severity::Error});
  }

  void read_hardware(const RawElement& section, XdlDocument& doc) {
    for (const auto& el : section.children) {
      if (el.name != "Component") {
        error(ErrorCode::UnknownElement,
              "unknown element <" + el.name + "> in <Hardware>", el.loc);
        continue;
      }
      const RawAttr* id = el.attr("id");
      for (const auto& a : el.attrs) {
        if (a.name != "id" && a.name != "type") {
          error(ErrorCode::UnknownAttribute,
                "unknown attribute '" + a.name + "' on <Component>", a.loc);
        }
      }
      if (id == nullptr || id->value.empty()) {
        error(ErrorCode::MissingRequiredAttribute,
              "<Component> requires an 'id' attribute", el.loc);
        continue;
      }
      if (doc.has_vessel(id->value)) {
        error(ErrorCode::DuplicateDeclaration,
              "duplicate vessel id '" + id->value + "'", el.loc);
        continue;
      }
      const RawAttr* type = el.attr("type");
      doc.hardware.push_back({id->value, type ? type->value : "", el.loc});
    }
  }

  void read_reagents(const RawElement& section, XdlDocument& doc) {
    for (const auto& el : section.children) {
      if (el.name != "Reagent") {
        error(ErrorCode::UnknownElement,
              "unknown element <" + el.name + "> in <Reagents>", el.loc);
        continue;
      }
      const RawAttr* name = el.attr("name");
      for (const auto& a : el.attrs) {
        if (a.name != "name" && a.name != "role" && a.name != "concentration") {
          error(ErrorCode::UnknownAttribute,
                "unknown attribute '" + a.name + "' on <Reagent>", a.loc);
        }
      }
      if (name == nullptr || name->value.empty()) {
        error(ErrorCode::MissingRequiredAttribute,
              "<Reagent> requires a 'name' attribute", el.loc);
        continue;
      }
      if (doc.has_reagent(name->value)) {
        error(ErrorCode::DuplicateDeclaration,
              "duplicate reagent '" + name->value + "'", el.loc);
        continue;
      }
      const RawAttr* role = el.attr("role");
      const RawAttr* conc = el.attr("concentration");
      doc.reagents.push_back({name->value, role ? role->value : "",
                              conc ? conc->value : "", el.loc});
    }
  }

  void read_procedure(const RawElement& section, XdlDocument& doc) {
    for (const auto& el : section.children) {
      const StepSpec* spec = schema_.find(el.name);
      if (spec == nullptr) {
        error(ErrorCode::UnknownElement, "unknown step <" + el.name + ">", el.loc);
        continue;
      }
      XdlStep step;
      step.name = el.name;
      step.location = el.loc;
      for (const auto& a : el.attrs) {
        auto it = spec->attributes.find(a.name);
        if (it == spec->attributes.end()) {
          error(ErrorCode::UnknownAttribute,
                "unknown attribute '" + a.name + "' on <" + el.name + ">", a.loc);
        } else if (it->second.kind == AttrKind::Quantity) {
          auto parsed = units::normalize_quantity(a.value, it->second.dimension);
          if (!parsed.ok() &&
              parsed.error->kind != units::QuantityErrorKind::WrongDimension) {
            error(ErrorCode::MalformedQuantity,
                  "attribute '" + a.name + "': " + parsed.error->message, a.loc);
          }
        }
        step.attributes.emplace_back(a.name, a.value);
      }
      for (const auto& r : spec->required) {
        if (el.attr(r) == nullptr) {
          error(ErrorCode::MissingRequiredAttribute,
                "<" + el.name + "> requires attribute '" + r + "'", el.loc);
        }
      }
      for (const auto& group : spec->one_of) {
        bool any = false;
        for (const auto& m : group) {
          if (el.attr(m) != nullptr) any = true;
        }
        if (!any) {
          std::string names;
          for (std::size_t i = 0; i < group.size(); ++i) {
            names += (i ? "/" : "") + group[i];
          }
          error(ErrorCode::MissingRequiredAttribute,
                "<" + el.name + "> requires one of " + names, el.loc);
        }
      }
      for (const auto& child : el.children) {
        error(ErrorCode::UnknownElement,
              "step <" + el.name + "> cannot contain <" + child.name + ">",
              child.loc);
      }
      doc.procedure.push_back(std::move(step));
    }
  }

  const StepSchema& schema_;
  std::vector<XdlError>& errors_;
};

}  // namespace

const std::string* XdlStep::attr(std::string_view name) const {
  for (const auto& [k, v] : attributes) {
    if (k == name) return &v;
  }
  return nullptr;
}

bool XdlDocument::has_vessel(std::string_view id) const {
  for (const auto& v : hardware) {
    if (v.id == id) return true;
  }
  return false;
}

bool XdlDocument::has_reagent(std::string_view name) const {
  for (const auto& r : reagents) {
    if (r.name == name) return true;
  }
  return false;
}

bool structurally_equal(const XdlDocument& a, const XdlDocument& b) {
  if (a.hardware.size() != b.hardware.size() ||
      a.reagents.size() != b.reagents.size() ||
      a.procedure.size() != b.procedure.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.hardware.size(); ++i) {
    if (a.hardware[i].id != b.hardware[i].id ||
        a.hardware[i].class_hint != b.hardware[i].class_hint) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.reagents.size(); ++i) {
    if (a.reagents[i].name != b.reagents[i].name ||
        a.reagents[i].role != b.reagents[i].role ||
        a.reagents[i].concentration != b.reagents[i].concentration) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.procedure.size(); ++i) {
    if (a.procedure[i].name != b.procedure[i].name ||
        a.procedure[i].attributes != b.procedure[i].attributes) {
      return false;
    }
  }
  return true;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownElement: return "UnknownElement";
    case ErrorCode::UnknownAttribute: return "UnknownAttribute";
    case ErrorCode::MissingRequiredAttribute: return "MissingRequiredAttribute";
    case ErrorCode::MalformedQuantity: return "MalformedQuantity";
    case ErrorCode::WrongDimension: return "WrongDimension";
    case ErrorCode::UndeclaredReagent: return "UndeclaredReagent";
    case ErrorCode::UndeclaredVessel: return "UndeclaredVessel";
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::DuplicateDeclaration: return "DuplicateDeclaration";
  }
  return "?";
}

std::optional<ErrorCode> error_code_from_string(std::string_view name) {
  for (ErrorCode c : {ErrorCode::UnknownElement, ErrorCode::UnknownAttribute,
                      ErrorCode::MissingRequiredAttribute, ErrorCode::MalformedQuantity,
                      ErrorCode::WrongDimension, ErrorCode::UndeclaredReagent,
                      ErrorCode::UndeclaredVessel, ErrorCode::MalformedXml,
                      ErrorCode::DuplicateDeclaration}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string render_findings(const std::vector<XdlError>& errors, std::size_t cap) {
  std::ostringstream out;
  std::size_t n = 0;
  for (const auto& e : errors) {
    if (n >= cap) {
      out << "... " << (errors.size() - cap) << " further findings omitted\n";
      break;
    }
    ++n;
    out << n << ". [" << to_string(e.code) << "]";
    if (e.location.line > 0) out << " line " << e.location.line;
    out << ": " << e.message << "\n";
  }
  return out.str();
}

ParseResult parse_xdl(std::string_view source, const StepSchema& schema) {
  ParseResult result;
  XmlReader reader(source, result.errors);
  auto root = reader.read_root();
  if (root) {
    DocumentBuilder builder(schema, result.errors);
    result.document = builder.build(*root);
  }
  return result;
}

ParseResult check_xdl(std::string_view source, const StepSchema& schema) {
  ParseResult result = parse_xdl(source, schema);
  if (result.document) {
    auto semantic = validate_document(*result.document, schema);
    // parse and validate overlap on quantity checks; drop exact duplicates
    for (auto& e : semantic) {
      bool dup = false;
      for (const auto& prev : result.errors) {
        if (prev.code == e.code && prev.location.line == e.location.line &&
            prev.message == e.message) {
          dup = true;
        }
      }
      if (!dup) result.errors.push_back(std::move(e));
    }
  }
  return result;
}

}  // namespace xdlate::xdl
