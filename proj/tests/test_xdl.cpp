#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "support/paths.hpp"
#include "xdlate/util.hpp"
#include "xdlate/xdl.hpp"

using namespace xdlate;

namespace {

int count_code(const std::vector<xdl::XdlError>& errors, xdl::ErrorCode code) {
  int n = 0;
  for (const auto& e : errors) {
    if (e.code == code) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("well-formed fixture parses with no errors") {
  const auto source = util::read_file(support::fixture("xdl/valid_3step.xdl"));
  const auto result = xdl::parse_xdl(source);
  REQUIRE(result.document.has_value());
  CHECK(result.errors.empty());
  CHECK(result.document->procedure.size() == 3);
  CHECK(result.document->hardware.size() == 1);
  CHECK(result.document->reagents.size() == 2);
  CHECK(result.document->procedure[0].location.line == 9);
}

TEST_CASE("committed 4-defect fixture reports exactly the injected codes") {
  const auto source = util::read_file(support::fixture("xdl/defects_4.xdl"));
  const auto result = xdl::parse_xdl(source);
  REQUIRE(result.document.has_value());
  REQUIRE(result.errors.size() == 4);
  CHECK(count_code(result.errors, xdl::ErrorCode::MalformedQuantity) == 2);
  CHECK(count_code(result.errors, xdl::ErrorCode::UnknownElement) == 1);
  CHECK(count_code(result.errors, xdl::ErrorCode::MissingRequiredAttribute) == 1);
  // lines as committed in the fixture
  std::multiset<std::pair<int, int>> got;
  for (const auto& e : result.errors) {
    got.insert({static_cast<int>(e.code), e.location.line});
  }
  CHECK(got.count({static_cast<int>(xdl::ErrorCode::MalformedQuantity), 9}) == 1);
  CHECK(got.count({static_cast<int>(xdl::ErrorCode::UnknownElement), 10}) == 1);
  CHECK(got.count({static_cast<int>(xdl::ErrorCode::MissingRequiredAttribute), 11}) == 1);
  CHECK(got.count({static_cast<int>(xdl::ErrorCode::MalformedQuantity), 12}) == 1);
  // the three healthy steps still parsed (element-level recovery)
  CHECK(result.document->procedure.size() == 3);
}

TEST_CASE("malformed quantity points at the attribute") {
  const std::string source = R"(<Synthesis>
  <Hardware><Component id="reactor" /></Hardware>
  <Reagents><Reagent name="methanol" /></Reagents>
  <Procedure>
    <HeatChill vessel="reactor" temp="25 Kelvin-ish" time="5 min" />
  </Procedure>
</Synthesis>)";
  const auto result = xdl::parse_xdl(source);
  REQUIRE(result.errors.size() == 1);
  CHECK(result.errors[0].code == xdl::ErrorCode::MalformedQuantity);
  CHECK(result.errors[0].location.line == 5);
  CHECK(result.errors[0].message.find("temp") != std::string::npos);
}

TEST_CASE("parser survives broken XML and keeps the rest") {
  const std::string source = R"(<Synthesis>
  <Hardware><Component id="reactor" /></Hardware>
  <Reagents><Reagent name="methanol" /></Reagents>
  <Procedure>
    <Add vessel="reactor" reagent="methanol" volume=20 />
    <Stir vessel="reactor" time="5 min" />
  </Procedure>
</Synthesis>)";
  const auto result = xdl::parse_xdl(source);
  REQUIRE(result.document.has_value());
  CHECK(count_code(result.errors, xdl::ErrorCode::MalformedXml) >= 1);
  CHECK(result.document->procedure.size() == 1);  // the Stir survived
}

TEST_CASE("unclosed element reports end-of-input without a location") {
  const auto result = xdl::parse_xdl("<Synthesis><Procedure>");
  REQUIRE_FALSE(result.errors.empty());
  bool eof_error = false;
  for (const auto& e : result.errors) {
    if (e.code == xdl::ErrorCode::MalformedXml && e.location.line == 0) eof_error = true;
  }
  CHECK(eof_error);
}

TEST_CASE("unparseable input yields no document plus MalformedXml") {
  const auto result = xdl::parse_xdl("not xml at all");
  CHECK_FALSE(result.document.has_value());
  CHECK(count_code(result.errors, xdl::ErrorCode::MalformedXml) >= 1);
}

TEST_CASE("single-pass stability: identical error lists on reparse") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto valid = support::make_valid_source(rng, 10);
    const auto fixture = support::mutate_source(valid, 3, rng);
    const auto a = xdl::parse_xdl(fixture.source);
    const auto b = xdl::parse_xdl(fixture.source);
    REQUIRE(a.errors.size() == b.errors.size());
    for (std::size_t i = 0; i < a.errors.size(); ++i) {
      CHECK(a.errors[i].code == b.errors[i].code);
      CHECK(a.errors[i].message == b.errors[i].message);
      CHECK(a.errors[i].location.line == b.errors[i].location.line);
      CHECK(a.errors[i].location.column == b.errors[i].location.column);
    }
  }
}

// -------------------------------------------------------------------------
// validate_document

TEST_CASE("declared references validate clean") {
  const auto source = util::read_file(support::fixture("xdl/valid_3step.xdl"));
  const auto result = xdl::parse_xdl(source);
  REQUIRE(result.ok());
  CHECK(xdl::validate_document(*result.document).empty());
}

TEST_CASE("undeclared vessel reference is reported") {
  auto result = xdl::parse_xdl(util::read_file(support::fixture("xdl/valid_3step.xdl")));
  REQUIRE(result.ok());
  xdl::XdlDocument doc = *result.document;
  doc.procedure[0].attributes[0].second = "reactor2";  // vessel="reactor2"
  const auto errors = xdl::validate_document(doc);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].code == xdl::ErrorCode::UndeclaredVessel);
}

TEST_CASE("volume unit in a temperature slot is WrongDimension") {
  xdl::XdlDocument doc;
  doc.hardware.push_back({"reactor", "reactor", {}});
  doc.reagents.push_back({"methanol", "", "", {}});
  xdl::XdlStep step;
  step.name = "HeatChill";
  step.attributes = {{"vessel", "reactor"}, {"temp", "50 mL"}, {"time", "5 min"}};
  doc.procedure.push_back(step);
  const auto errors = xdl::validate_document(doc);
  REQUIRE(errors.size() == 1);
  CHECK(errors[0].code == xdl::ErrorCode::WrongDimension);
}

TEST_CASE("validation is idempotent") {
  auto result = xdl::parse_xdl(util::read_file(support::fixture("xdl/defects_4.xdl")));
  REQUIRE(result.document.has_value());
  const auto first = xdl::validate_document(*result.document);
  const auto second = xdl::validate_document(*result.document);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].code == second[i].code);
    CHECK(first[i].message == second[i].message);
  }
}

// -------------------------------------------------------------------------
// serialize_xdl

TEST_CASE("round-trip identity on the valid fixtures") {
  for (const char* name : {"xdl/valid_3step.xdl", "xdl/tosylate_23step.xdl",
                           "xdl/overflow.xdl"}) {
    const auto source = util::read_file(support::fixture(name));
    const auto parsed = xdl::parse_xdl(source);
    REQUIRE(parsed.ok());
    const auto serialized = xdl::serialize_xdl(*parsed.document);
    const auto reparsed = xdl::parse_xdl(serialized);
    REQUIRE(reparsed.ok());
    CHECK(xdl::structurally_equal(*parsed.document, *reparsed.document));
  }
}

TEST_CASE("23-step fixture keeps its 23 steps through serialization") {
  const auto source = util::read_file(support::fixture("xdl/tosylate_23step.xdl"));
  const auto parsed = xdl::parse_xdl(source);
  REQUIRE(parsed.ok());
  REQUIRE(parsed.document->procedure.size() == 23);
  const auto reparsed = xdl::parse_xdl(xdl::serialize_xdl(*parsed.document));
  REQUIRE(reparsed.ok());
  CHECK(reparsed.document->procedure.size() == 23);
}

TEST_CASE("empty procedure serializes to valid XDL") {
  xdl::XdlDocument doc;
  doc.hardware.push_back({"reactor", "reactor", {}});
  doc.reagents.push_back({"methanol", "solvent", "", {}});
  const auto text = xdl::serialize_xdl(doc);
  const auto reparsed = xdl::parse_xdl(text);
  REQUIRE(reparsed.ok());
  CHECK(reparsed.document->procedure.empty());
  CHECK(xdl::structurally_equal(doc, *reparsed.document));
}

TEST_CASE("attribute order is preserved") {
  xdl::XdlDocument doc;
  doc.hardware.push_back({"reactor", "reactor", {}});
  doc.reagents.push_back({"methanol", "", "", {}});
  xdl::XdlStep step;
  step.name = "Add";
  step.attributes = {{"volume", "5 mL"}, {"vessel", "reactor"}, {"reagent", "methanol"}};
  doc.procedure.push_back(step);
  const auto reparsed = xdl::parse_xdl(xdl::serialize_xdl(doc));
  REQUIRE(reparsed.ok());
  REQUIRE(reparsed.document->procedure.size() == 1);
  CHECK(reparsed.document->procedure[0].attributes[0].first == "volume");
  CHECK(reparsed.document->procedure[0].attributes[1].first == "vessel");
  CHECK(reparsed.document->procedure[0].attributes[2].first == "reagent");
}

TEST_CASE("unresolved placeholders are rejected") {
  xdl::XdlDocument doc;
  doc.hardware.push_back({"reactor", "reactor", {}});
  doc.reagents.push_back({"methanol", "", "", {}});
  xdl::XdlStep step;
  step.name = "Add";
  step.attributes = {{"vessel", "reactor"},
                     {"reagent", "methanol"},
                     {"volume", "[[missing: volume]]"}};
  doc.procedure.push_back(step);
  CHECK_THROWS_AS((void)xdl::serialize_xdl(doc), std::invalid_argument);
}

TEST_CASE("escaped characters survive the round trip") {
  xdl::XdlDocument doc;
  doc.hardware.push_back({"reactor", "reactor", {}});
  doc.reagents.push_back({"salt <aq> & \"brine\"", "", "", {}});
  const auto reparsed = xdl::parse_xdl(xdl::serialize_xdl(doc));
  REQUIRE(reparsed.ok());
  CHECK(reparsed.document->reagents[0].name == "salt <aq> & \"brine\"");
}

// -------------------------------------------------------------------------
// error completeness over scripted mutations (oracle: the mutation log)

TEST_CASE("mutated fixtures report at least the injected (code, line) multiset") {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> defect_count(1, 6);
  for (int trial = 0; trial < 60; ++trial) {
    const auto valid = support::make_valid_source(rng, 12);
    REQUIRE(xdl::check_xdl(valid).ok());
    const auto fixture = support::mutate_source(valid, defect_count(rng), rng);
    REQUIRE_FALSE(fixture.injected.empty());
    const auto checked = xdl::check_xdl(fixture.source);
    const bool covered = support::covers_injected(checked.errors, fixture.injected);
    if (!covered) {
      MESSAGE("fixture:\n" << fixture.source);
      for (const auto& inj : fixture.injected) {
        MESSAGE("injected " << std::string(xdl::to_string(inj.code)) << " at line "
                            << inj.line);
      }
      for (const auto& e : checked.errors) {
        MESSAGE("got " << std::string(xdl::to_string(e.code)) << " at line "
                       << e.location.line << ": " << e.message);
      }
    }
    REQUIRE(covered);
  }
}

TEST_CASE("step schema can be extended from a file") {
  const std::string extended = R"({
    "steps": {
      "Sonicate": {
        "required": ["vessel", "time"],
        "attributes": {
          "vessel": {"kind": "vessel"},
          "time": {"kind": "quantity", "dimension": "time"}
        }
      }
    }
  })";
  const auto schema = xdl::StepSchema::from_json_text(extended);
  CHECK(schema.find("Sonicate") != nullptr);
  CHECK(schema.find("Add") == nullptr);

  const std::string source = R"(<Synthesis>
  <Hardware><Component id="reactor" /></Hardware>
  <Reagents></Reagents>
  <Procedure><Sonicate vessel="reactor" time="5 min" /></Procedure>
</Synthesis>)";
  CHECK(xdl::parse_xdl(source, schema).ok());
  CHECK_FALSE(xdl::parse_xdl(source).ok());  // builtin vocabulary rejects it
}
