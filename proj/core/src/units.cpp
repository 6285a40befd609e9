#include "xdlate/units.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace xdlate::units {

namespace {

struct UnitDef {
  std::string_view symbol;  // canonical spelling
  Dimension dimension;
  double to_canonical;  // multiplicative factor into the canonical unit
};

// Canonical units are the first entry per dimension: mL, g, mmol, °C, s,
// rpm, mbar. Temperatures are °C-only; K and F are deliberately absent.
constexpr std::array<UnitDef, 17> kUnits{{
    {"mL", Dimension::Volume, 1.0},
    {"L", Dimension::Volume, 1000.0},
    {"uL", Dimension::Volume, 0.001},
    {"g", Dimension::Mass, 1.0},
    {"mg", Dimension::Mass, 0.001},
    {"kg", Dimension::Mass, 1000.0},
    {"mmol", Dimension::Amount, 1.0},
    {"mol", Dimension::Amount, 1000.0},
    {"°C", Dimension::Temperature, 1.0},
    {"s", Dimension::Time, 1.0},
    {"min", Dimension::Time, 60.0},
    {"h", Dimension::Time, 3600.0},
    {"rpm", Dimension::RotationRate, 1.0},
    {"mbar", Dimension::Pressure, 1.0},
    {"bar", Dimension::Pressure, 1000.0},
    // accepted alternate spellings, normalized before lookup
    {"C", Dimension::Temperature, 1.0},
    {"µL", Dimension::Volume, 0.001},
}};

std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

const UnitDef* find_unit(std::string_view symbol) {
  const std::string needle = fold(symbol);
  for (const auto& u : kUnits) {
    if (fold(u.symbol) == needle) return &u;
  }
  return nullptr;
}

bool allows_negative(Dimension d) { return d == Dimension::Temperature; }

}  // namespace

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::Volume: return "volume";
    case Dimension::Mass: return "mass";
    case Dimension::Amount: return "amount";
    case Dimension::Temperature: return "temperature";
    case Dimension::Time: return "time";
    case Dimension::RotationRate: return "rotation_rate";
    case Dimension::Pressure: return "pressure";
  }
  return "?";
}

std::optional<Dimension> dimension_from_string(std::string_view name) {
  for (Dimension d : {Dimension::Volume, Dimension::Mass, Dimension::Amount,
                      Dimension::Temperature, Dimension::Time,
                      Dimension::RotationRate, Dimension::Pressure}) {
    if (to_string(d) == name) return d;
  }
  return std::nullopt;
}

std::string_view Quantity::canonical_unit() const {
  switch (dimension) {
    case Dimension::Volume: return "mL";
    case Dimension::Mass: return "g";
    case Dimension::Amount: return "mmol";
    case Dimension::Temperature: return "°C";
    case Dimension::Time: return "s";
    case Dimension::RotationRate: return "rpm";
    case Dimension::Pressure: return "mbar";
  }
  return "?";
}

ParsedQuantity normalize_quantity(std::string_view raw, Dimension expected) {
  auto fail = [](QuantityErrorKind kind, std::string message) {
    ParsedQuantity r;
    r.error = QuantityError{kind, std::move(message)};
    return r;
  };

  std::size_t pos = 0;
  while (pos < raw.size() && std::isspace(static_cast<unsigned char>(raw[pos]))) ++pos;

  double value = 0.0;
  const char* begin = raw.data() + pos;
  const char* end = raw.data() + raw.size();
  auto [num_end, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || num_end == begin || !std::isfinite(value)) {
    return fail(QuantityErrorKind::MalformedNumber,
                "expected '<number> <unit>', got '" + std::string(raw) + "'");
  }

  std::string_view rest(num_end, static_cast<std::size_t>(end - num_end));
  std::size_t u0 = 0;
  while (u0 < rest.size() && std::isspace(static_cast<unsigned char>(rest[u0]))) ++u0;
  std::size_t u1 = rest.size();
  while (u1 > u0 && std::isspace(static_cast<unsigned char>(rest[u1 - 1]))) --u1;
  std::string_view unit = rest.substr(u0, u1 - u0);

  if (unit.empty()) {
    return fail(QuantityErrorKind::MalformedNumber,
                "missing unit in '" + std::string(raw) + "'");
  }

  const UnitDef* def = find_unit(unit);
  if (def == nullptr) {
    return fail(QuantityErrorKind::UnknownUnit,
                "unknown unit '" + std::string(unit) + "' (expected a " +
                    std::string(to_string(expected)) + " unit)");
  }
  if (def->dimension != expected) {
    return fail(QuantityErrorKind::WrongDimension,
                "unit '" + std::string(unit) + "' is a " +
                    std::string(to_string(def->dimension)) + " unit, expected " +
                    std::string(to_string(expected)));
  }
  if (value < 0.0 && !allows_negative(expected)) {
    return fail(QuantityErrorKind::NegativeValue,
                std::string(to_string(expected)) + " cannot be negative: '" +
                    std::string(raw) + "'");
  }

  ParsedQuantity r;
  r.quantity = Quantity{value * def->to_canonical, expected};
  return r;
}

std::optional<double> convert_to_unit(const Quantity& q, std::string_view unit) {
  const UnitDef* def = find_unit(unit);
  if (def == nullptr || def->dimension != q.dimension) return std::nullopt;
  return q.value / def->to_canonical;
}

std::vector<std::string_view> units_of(Dimension d) {
  std::vector<std::string_view> out;
  for (const auto& u : kUnits) {
    if (u.dimension == d) out.push_back(u.symbol);
  }
  return out;
}

}  // namespace xdlate::units
