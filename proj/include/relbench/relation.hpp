#pragma once

#include "relbench/value.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relbench {

struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::text;
  /// Marks person-name columns; the question generator adds name-order
  /// variants to their gold keywords.
  bool person_name = false;
};

/// Ordered, uniquely named attributes of one relation.
class Schema {
public:
  Schema() = default;
  /// Throws SchemaError on duplicate names or an empty attribute list.
  Schema(std::string relation_name, std::vector<Attribute> attributes);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Attribute>& attributes() const noexcept { return attributes_; }
  std::size_t size() const noexcept { return attributes_.size(); }

  std::optional<std::size_t> index_of(std::string_view attribute) const;
  /// Like index_of() but throws SchemaError naming the relation.
  std::size_t require(std::string_view attribute) const;
  std::vector<std::size_t> require_all(const std::vector<std::string>& attributes) const;

  friend bool operator==(const Schema&, const Schema&) = default;

private:
  std::string name_;
  std::vector<Attribute> attributes_;
};

inline bool operator==(const Attribute& a, const Attribute& b) {
  return a.name == b.name && a.kind == b.kind && a.person_name == b.person_name;
}

using Record = std::vector<Value>;

class Relation {
public:
  Relation() = default;
  /// Throws SchemaError when a record's arity or value kinds disagree with
  /// the schema.
  Relation(Schema schema, std::vector<Record> records);

  const Schema& schema() const noexcept { return schema_; }
  const std::vector<Record>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const std::string& name() const noexcept { return schema_.name(); }

  friend bool operator==(const Relation& a, const Relation& b) {
    return a.schema_ == b.schema_ && a.records_ == b.records_;
  }

private:
  Schema schema_;
  std::vector<Record> records_;
};

/// A record paired with its schema for by-name access.
class RecordView {
public:
  RecordView(const Schema& schema, const Record& record) : schema_(&schema), record_(&record) {}

  const Value& operator[](std::string_view attribute) const {
    return (*record_)[schema_->require(attribute)];
  }
  const Schema& schema() const noexcept { return *schema_; }
  const Record& record() const noexcept { return *record_; }

private:
  const Schema* schema_;
  const Record* record_;
};

/// Reads a UTF-8 CSV (comma separated, double-quote escaping, mandatory
/// header). The header must name the schema attributes exactly and in order;
/// empty cells become NULL.
Relation load_relation(const std::filesystem::path& path, const Schema& schema);

/// Same as load_relation() over in-memory CSV text. `source` names the input
/// in diagnostics.
Relation parse_relation(std::string_view csv, const Schema& schema, std::string_view source = "<memory>");

/// Splits CSV text into rows of raw cells. Throws ParseError on an
/// unterminated quoted field.
std::vector<std::vector<std::string>> parse_csv(std::string_view csv);

}  // namespace relbench
