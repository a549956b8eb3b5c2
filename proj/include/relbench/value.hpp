#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace relbench {

enum class AttributeKind { text, integer, real, year, date };

std::string_view to_string(AttributeKind kind);
/// Throws SchemaError for an unknown kind name.
AttributeKind parse_attribute_kind(std::string_view name);

/// A single cell. Either the distinguished NULL or a value parsed under an
/// attribute kind. Display text keeps the source spelling (after NFC and
/// trimming) so rendered questions reproduce the data verbatim; equality uses
/// a kind-aware key (numbers compare numerically, text exactly).
class Value {
public:
  Value() = default;

  static Value null() { return Value{}; }
  /// Empty input yields NULL. Throws ParseError when the text does not parse
  /// under `kind`.
  static Value parse(AttributeKind kind, std::string_view raw);

  bool is_null() const noexcept { return null_; }
  AttributeKind kind() const noexcept { return kind_; }
  const std::string& text() const noexcept { return text_; }
  const std::string& key() const noexcept { return key_; }
  std::optional<std::int64_t> as_integer() const noexcept { return integer_; }

  friend bool operator==(const Value& a, const Value& b) {
    return a.null_ == b.null_ && a.key_ == b.key_;
  }

private:
  bool null_ = true;
  AttributeKind kind_ = AttributeKind::text;
  std::string text_;
  std::string key_;
  std::optional<std::int64_t> integer_;
};

}  // namespace relbench
