#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace raisesql {

struct BlobDigest {
  std::string sha256_hex;
  std::size_t size = 0;
  bool operator==(const BlobDigest&) const = default;
};

/// A cell as it comes out of the database engine.
using RawCell = std::variant<std::monostate, std::int64_t, double, std::string, std::vector<std::uint8_t>>;

/// Canonical cell value. Reals are rounded half-even to 6 decimals, blobs are
/// replaced by a digest. Built only through canonicalize_value() or the
/// named constructors, which canonicalize too.
class CellValue {
 public:
  using Storage = std::variant<std::monostate, std::int64_t, double, std::string, BlobDigest>;

  CellValue() = default;

  static CellValue null() { return CellValue(); }
  static CellValue integer(std::int64_t v);
  static CellValue real(double v);
  static CellValue text(std::string v);
  static CellValue blob(const std::vector<std::uint8_t>& bytes);

  bool is_null() const noexcept { return std::holds_alternative<std::monostate>(value_); }
  const Storage& storage() const noexcept { return value_; }

  // Structural equality: same alternative and same payload.
  bool operator==(const CellValue&) const = default;

 private:
  explicit CellValue(Storage v) : value_(std::move(v)) {}
  Storage value_;
};

CellValue canonicalize_value(const RawCell& raw);
CellValue canonicalize_value(const CellValue& v);

/// Round half-even to 6 decimal places, applied to the exact binary value.
/// Negative zero becomes zero; non-finite inputs are returned unchanged.
double round_real6(double v);

/// Result-comparison order. Integers and reals compare by numeric value
/// (3 == 3.0), NULL equals NULL, text compares byte-wise. Classes order as
/// null < numeric < text < blob.
std::weak_ordering compare_cells(const CellValue& a, const CellValue& b);
inline bool cells_match(const CellValue& a, const CellValue& b) { return compare_cells(a, b) == 0; }

/// Text shown to the model and written to reports.
std::string render_cell(const CellValue& v);

}  // namespace raisesql
