#include "relbench/value.hpp"

#include "relbench/error.hpp"
#include "relbench/text.hpp"

#include <charconv>
#include <cmath>

namespace relbench {

std::string_view to_string(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::text: return "text";
    case AttributeKind::integer: return "integer";
    case AttributeKind::real: return "real";
    case AttributeKind::year: return "year";
    case AttributeKind::date: return "date";
  }
  return "text";
}

AttributeKind parse_attribute_kind(std::string_view name) {
  if (name == "text") return AttributeKind::text;
  if (name == "integer") return AttributeKind::integer;
  if (name == "real") return AttributeKind::real;
  if (name == "year") return AttributeKind::year;
  if (name == "date") return AttributeKind::date;
  throw SchemaError("unknown attribute kind '" + std::string(name) + "'");
}

namespace {

std::optional<std::int64_t> parse_int(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

bool valid_iso_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  auto y = parse_int(s.substr(0, 4));
  auto m = parse_int(s.substr(5, 2));
  auto d = parse_int(s.substr(8, 2));
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int limit = kDays[*m - 1];
  if (*m == 2 && is_leap(static_cast<int>(*y))) limit = 29;
  return *d <= limit;
}

[[noreturn]] void fail(AttributeKind kind, std::string_view raw) {
  throw ParseError("cannot parse '" + std::string(raw) + "' as " + std::string(to_string(kind)));
}

}  // namespace

Value Value::parse(AttributeKind kind, std::string_view raw) {
  std::string txt = text::canonical(raw);
  if (txt.empty()) return Value::null();

  Value v;
  v.null_ = false;
  v.kind_ = kind;
  switch (kind) {
    case AttributeKind::text:
      v.key_ = txt;
      break;
    case AttributeKind::integer: {
      auto i = parse_int(txt);
      if (!i) fail(kind, raw);
      v.integer_ = *i;
      v.key_ = std::to_string(*i);
      break;
    }
    case AttributeKind::year: {
      auto i = parse_int(txt);
      if (!i || *i < 0 || *i > 9999) fail(kind, raw);
      v.integer_ = *i;
      v.key_ = std::to_string(*i);
      break;
    }
    case AttributeKind::real: {
      auto r = parse_real(txt);
      if (!r) fail(kind, raw);
      char buf[64];
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, *r == 0.0 ? 0.0 : *r);
      v.key_ = std::string(buf, ptr);
      break;
    }
    case AttributeKind::date:
      if (!valid_iso_date(txt)) fail(kind, raw);
      v.key_ = txt;
      break;
  }
  v.text_ = std::move(txt);
  return v;
}

}  // namespace relbench
