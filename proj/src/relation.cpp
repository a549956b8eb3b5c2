#include "relbench/relation.hpp"

#include "relbench/error.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

namespace relbench {

Schema::Schema(std::string relation_name, std::vector<Attribute> attributes)
    : name_(std::move(relation_name)), attributes_(std::move(attributes)) {
  if (attributes_.empty()) {
    throw SchemaError("relation '" + name_ + "' has no attributes");
  }
  std::unordered_set<std::string> seen;
  for (const auto& a : attributes_) {
    if (a.name.empty()) throw SchemaError("relation '" + name_ + "' has an unnamed attribute");
    if (!seen.insert(a.name).second) {
      throw SchemaError("relation '" + name_ + "' declares attribute '" + a.name + "' twice");
    }
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view attribute) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].name == attribute) return i;
  }
  return std::nullopt;
}

std::size_t Schema::require(std::string_view attribute) const {
  if (auto i = index_of(attribute)) return *i;
  throw SchemaError("relation '" + name_ + "' has no attribute '" + std::string(attribute) + "'");
}

std::vector<std::size_t> Schema::require_all(const std::vector<std::string>& attributes) const {
  std::vector<std::size_t> out;
  out.reserve(attributes.size());
  for (const auto& a : attributes) out.push_back(require(a));
  return out;
}

Relation::Relation(Schema schema, std::vector<Record> records)
    : schema_(std::move(schema)), records_(std::move(records)) {
  for (std::size_t r = 0; r < records_.size(); ++r) {
    const auto& rec = records_[r];
    if (rec.size() != schema_.size()) {
      throw SchemaError("relation '" + schema_.name() + "' record " + std::to_string(r) + " has " +
                        std::to_string(rec.size()) + " values, expected " +
                        std::to_string(schema_.size()));
    }
    for (std::size_t c = 0; c < rec.size(); ++c) {
      if (!rec[c].is_null() && rec[c].kind() != schema_.attributes()[c].kind) {
        throw SchemaError("relation '" + schema_.name() + "' record " + std::to_string(r) +
                          " attribute '" + schema_.attributes()[c].name + "' holds a " +
                          std::string(to_string(rec[c].kind())) + " value");
      }
    }
  }
}

std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
  if (csv.starts_with("\xEF\xBB\xBF")) csv.remove_prefix(3);

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool in_quotes = false;
  bool row_has_content = false;

  for (std::size_t i = 0; i < csv.size(); ++i) {
    const char c = csv[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < csv.size() && csv[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_content = true;
        break;
      case ',':
        row.push_back(std::move(cell));
        cell.clear();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        if (row_has_content || !cell.empty()) {
          row.push_back(std::move(cell));
          rows.push_back(std::move(row));
        }
        row.clear();
        cell.clear();
        row_has_content = false;
        break;
      default:
        cell.push_back(c);
        row_has_content = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field at end of input");
  if (row_has_content || !cell.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

Relation parse_relation(std::string_view csv, const Schema& schema, std::string_view source) {
  auto rows = parse_csv(csv);
  const std::string where(source);
  if (rows.empty()) throw SchemaError(where + ": missing header row");

  const auto& header = rows.front();
  bool header_ok = header.size() == schema.size();
  for (std::size_t i = 0; header_ok && i < header.size(); ++i) {
    header_ok = header[i] == schema.attributes()[i].name;
  }
  if (!header_ok) {
    std::string expected;
    for (const auto& a : schema.attributes()) expected += (expected.empty() ? "" : ",") + a.name;
    throw SchemaError(where + ": header does not match schema of '" + schema.name() +
                      "' (expected " + expected + ")");
  }

  std::vector<Record> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    if (cells.size() != schema.size()) {
      throw ParseError(where + ": row " + std::to_string(r + 1) + " has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(schema.size()));
    }
    Record rec;
    rec.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        rec.push_back(Value::parse(schema.attributes()[c].kind, cells[c]));
      } catch (const ParseError& e) {
        throw ParseError(where + ": row " + std::to_string(r + 1) + ", column '" +
                         schema.attributes()[c].name + "': " + e.what());
      }
    }
    records.push_back(std::move(rec));
  }
  return Relation(schema, std::move(records));
}

Relation load_relation(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_relation(buf.str(), schema, path.string());
}

}  // namespace relbench
