#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "xdlate/units.hpp"

using namespace xdlate::units;

TEST_CASE("time conversion to canonical seconds") {
  auto r = normalize_quantity("2 h", Dimension::Time);
  REQUIRE(r.ok());
  CHECK(r.quantity->value == doctest::Approx(7200.0));
  CHECK(r.quantity->canonical_unit() == "s");
}

TEST_CASE("volume conversion to canonical millilitres") {
  auto r = normalize_quantity("0.5 L", Dimension::Volume);
  REQUIRE(r.ok());
  CHECK(r.quantity->value == doctest::Approx(500.0));
}

TEST_CASE("unit match is case-insensitive") {
  auto r = normalize_quantity("20 ml", Dimension::Volume);
  REQUIRE(r.ok());
  CHECK(r.quantity->value == doctest::Approx(20.0));
}

TEST_CASE("temperature accepts °C only") {
  CHECK(normalize_quantity("25 °C", Dimension::Temperature).ok());
  CHECK(normalize_quantity("25 C", Dimension::Temperature).ok());
  CHECK(normalize_quantity("-10 °C", Dimension::Temperature).ok());

  auto kelvin = normalize_quantity("298 K", Dimension::Temperature);
  REQUIRE_FALSE(kelvin.ok());
  CHECK(kelvin.error->kind == QuantityErrorKind::UnknownUnit);

  auto odd = normalize_quantity("25 Kelvin-ish", Dimension::Temperature);
  REQUIRE_FALSE(odd.ok());
  CHECK(odd.error->kind == QuantityErrorKind::UnknownUnit);
}

TEST_CASE("wrong dimension is distinguished from malformed") {
  auto wrong = normalize_quantity("50 mL", Dimension::Temperature);
  REQUIRE_FALSE(wrong.ok());
  CHECK(wrong.error->kind == QuantityErrorKind::WrongDimension);

  auto malformed = normalize_quantity("fifty mL", Dimension::Volume);
  REQUIRE_FALSE(malformed.ok());
  CHECK(malformed.error->kind == QuantityErrorKind::MalformedNumber);

  auto missing_unit = normalize_quantity("50", Dimension::Volume);
  REQUIRE_FALSE(missing_unit.ok());
}

TEST_CASE("negative values rejected outside temperature") {
  CHECK_FALSE(normalize_quantity("-5 mL", Dimension::Volume).ok());
  CHECK_FALSE(normalize_quantity("-2 g", Dimension::Mass).ok());
  CHECK(normalize_quantity("-5 °C", Dimension::Temperature).ok());
}

TEST_CASE("round-trip through canonical units within 1e-9 relative error") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> value(0.001, 5000.0);
  for (Dimension d : {Dimension::Volume, Dimension::Mass, Dimension::Amount,
                      Dimension::Temperature, Dimension::Time, Dimension::RotationRate,
                      Dimension::Pressure}) {
    for (auto unit : units_of(d)) {
      for (int i = 0; i < 50; ++i) {
        const double v = value(rng);
        char raw[64];
        std::snprintf(raw, sizeof raw, "%.10g %s", v, std::string(unit).c_str());
        auto parsed = normalize_quantity(raw, d);
        REQUIRE(parsed.ok());
        auto back = convert_to_unit(*parsed.quantity, unit);
        REQUIRE(back.has_value());
        CHECK(std::abs(*back - v) <= 1e-9 * std::abs(v));
      }
    }
  }
}

TEST_CASE("conversion to a foreign unit is refused") {
  auto q = normalize_quantity("10 mL", Dimension::Volume);
  REQUIRE(q.ok());
  CHECK_FALSE(convert_to_unit(*q.quantity, "g").has_value());
  CHECK(convert_to_unit(*q.quantity, "L").has_value());
}
