#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xdlate::units {

enum class Dimension {
  Volume,
  Mass,
  Amount,
  Temperature,
  Time,
  RotationRate,
  Pressure,
};

std::string_view to_string(Dimension d);
std::optional<Dimension> dimension_from_string(std::string_view name);

/// A parsed physical quantity held in the canonical unit of its dimension
/// (mL, g, mmol, °C, s, rpm, mbar).
struct Quantity {
  double value = 0.0;  // in canonical unit
  Dimension dimension = Dimension::Volume;

  std::string_view canonical_unit() const;
  bool operator==(const Quantity&) const = default;
};

enum class QuantityErrorKind {
  MalformedNumber,   // no finite number at the front of the string
  UnknownUnit,       // unit symbol not in any dimension's table
  WrongDimension,    // unit parses but belongs to another dimension
  NegativeValue,     // negative value for a dimension that cannot be negative
};

struct QuantityError {
  QuantityErrorKind kind;
  std::string message;
};

struct ParsedQuantity {
  std::optional<Quantity> quantity;
  std::optional<QuantityError> error;
  bool ok() const { return quantity.has_value(); }
};

/// Parses "<number> <unit>" and converts to the canonical unit of
/// `expected`. Unit match is case-insensitive; temperatures are accepted in
/// °C only. Never throws; failures are reported in the result.
ParsedQuantity normalize_quantity(std::string_view raw, Dimension expected);

/// Converts a canonical-unit quantity back into `unit` (which must belong
/// to the quantity's dimension). Returns nullopt for foreign units.
std::optional<double> convert_to_unit(const Quantity& q, std::string_view unit);

/// All unit symbols accepted for a dimension, canonical symbol first.
std::vector<std::string_view> units_of(Dimension d);

}  // namespace xdlate::units
