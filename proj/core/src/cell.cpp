#include "raise/cell.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include <fmt/format.h>

#include "raise/digest.hpp"

namespace raisesql {

double round_real6(double v) {
  if (!std::isfinite(v)) return v;
  // printf performs an exact binary-to-decimal conversion and rounds ties to
  // even under the default rounding mode.
  char buf[400];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

CellValue CellValue::integer(std::int64_t v) { return CellValue(Storage{v}); }

CellValue CellValue::real(double v) {
  if (std::isnan(v)) return CellValue();
  return CellValue(Storage{round_real6(v)});
}

CellValue CellValue::text(std::string v) { return CellValue(Storage{std::move(v)}); }

CellValue CellValue::blob(const std::vector<std::uint8_t>& bytes) {
  return CellValue(Storage{BlobDigest{sha256_hex(std::span<const std::uint8_t>(bytes)), bytes.size()}});
}

CellValue canonicalize_value(const RawCell& raw) {
  struct Visitor {
    CellValue operator()(std::monostate) const { return CellValue::null(); }
    CellValue operator()(std::int64_t v) const { return CellValue::integer(v); }
    CellValue operator()(double v) const { return CellValue::real(v); }
    CellValue operator()(const std::string& v) const { return CellValue::text(v); }
    CellValue operator()(const std::vector<std::uint8_t>& v) const { return CellValue::blob(v); }
  };
  return std::visit(Visitor{}, raw);
}

CellValue canonicalize_value(const CellValue& v) {
  if (const auto* d = std::get_if<double>(&v.storage())) return CellValue::real(*d);
  return v;
}

namespace {

int cell_class(const CellValue::Storage& s) {
  switch (s.index()) {
    case 0: return 0;
    case 1:
    case 2: return 1;
    case 3: return 2;
    default: return 3;
  }
}

std::weak_ordering compare_numeric(const CellValue::Storage& a, const CellValue::Storage& b) {
  // long double holds every int64 and every double exactly on x86-64.
  auto as_ld = [](const CellValue::Storage& s) -> long double {
    if (const auto* i = std::get_if<std::int64_t>(&s)) return static_cast<long double>(*i);
    return static_cast<long double>(std::get<double>(s));
  };
  if (a.index() == 1 && b.index() == 1) return std::get<std::int64_t>(a) <=> std::get<std::int64_t>(b);
  long double x = as_ld(a);
  long double y = as_ld(b);
  if (x < y) return std::weak_ordering::less;
  if (y < x) return std::weak_ordering::greater;
  return std::weak_ordering::equivalent;
}

}  // namespace

std::weak_ordering compare_cells(const CellValue& a, const CellValue& b) {
  const auto& sa = a.storage();
  const auto& sb = b.storage();
  int ca = cell_class(sa);
  int cb = cell_class(sb);
  if (ca != cb) return ca <=> cb;
  switch (ca) {
    case 0: return std::weak_ordering::equivalent;
    case 1: return compare_numeric(sa, sb);
    case 2: {
      int c = std::get<std::string>(sa).compare(std::get<std::string>(sb));
      return c < 0 ? std::weak_ordering::less : c > 0 ? std::weak_ordering::greater : std::weak_ordering::equivalent;
    }
    default: {
      const auto& x = std::get<BlobDigest>(sa);
      const auto& y = std::get<BlobDigest>(sb);
      if (auto c = x.sha256_hex <=> y.sha256_hex; c != 0) return c;
      return x.size <=> y.size;
    }
  }
}

std::string render_cell(const CellValue& v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "NULL"; }
    std::string operator()(std::int64_t i) const { return fmt::format("{}", i); }
    std::string operator()(double d) const {
      std::string s = fmt::format("{}", d);
      if (s.find_first_of(".eEn") == std::string::npos) s += ".0";  // keep reals recognisable
      return s;
    }
    std::string operator()(const std::string& s) const { return s; }
    std::string operator()(const BlobDigest& b) const {
      return fmt::format("<blob {} bytes sha256:{}>", b.size, b.sha256_hex.substr(0, 16));
    }
  };
  return std::visit(Visitor{}, v.storage());
}

}  // namespace raisesql
