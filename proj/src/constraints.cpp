#include "relbench/constraints.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace relbench {

namespace {

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ",") + n;
  return out;
}

// Returns nullopt when any of the values is NULL.
std::optional<std::string> tuple_key(const Record& rec, const std::vector<std::size_t>& idx) {
  std::string key;
  for (std::size_t i : idx) {
    if (rec[i].is_null()) return std::nullopt;
    key += rec[i].key();
    key.push_back('\x1f');
  }
  return key;
}

std::vector<std::string> tuple_text(const Record& rec, const std::vector<std::size_t>& idx) {
  std::vector<std::string> out;
  for (std::size_t i : idx) out.push_back(rec[i].text());
  return out;
}

void check_fkc_shape(const Relation& child, const Relation& parent,
                     const ForeignKeyConstraint& fkc) {
  if (fkc.child_attrs.empty() || fkc.child_attrs.size() != fkc.parent_key_attrs.size()) {
    throw ConstraintError("foreign key " + fkc.child_relation + "(" + join_names(fkc.child_attrs) +
                          ") -> " + fkc.parent_relation + "(" + join_names(fkc.parent_key_attrs) +
                          ") has mismatched arity");
  }
  if (fkc.child_relation != child.name() || fkc.parent_relation != parent.name()) {
    throw ConstraintError("foreign key " + fkc.child_relation + " -> " + fkc.parent_relation +
                          " applied to relations " + child.name() + " and " + parent.name());
  }
}

}  // namespace

void FunctionalDependency::validate(const Schema& schema) const {
  if (lhs.empty() || rhs.empty()) {
    throw SchemaError("FD " + to_string(*this) + " on '" + schema.name() + "' has an empty side");
  }
  std::unordered_set<std::string> seen;
  for (const auto& a : lhs) {
    schema.require(a);
    if (!seen.insert(a).second) throw SchemaError("FD " + to_string(*this) + " repeats '" + a + "'");
  }
  for (const auto& a : rhs) {
    schema.require(a);
    if (!seen.insert(a).second) {
      throw SchemaError("FD " + to_string(*this) + " lists '" + a + "' on both sides or twice");
    }
  }
}

std::string to_string(const FunctionalDependency& fd) {
  return join_names(fd.lhs) + " -> " + join_names(fd.rhs);
}

std::string ViolationReport::summary(std::size_t max_items) const {
  std::ostringstream out;
  out << violations.size() << " violation(s)";
  std::size_t shown = 0;
  for (const auto& v : violations) {
    if (shown++ == max_items) {
      out << "; ...";
      break;
    }
    out << "; ";
    std::visit(
        [&out](const auto& item) {
          using T = std::decay_t<decltype(item)>;
          if constexpr (std::is_same_v<T, FdConflict>) {
            out << "records " << item.record_a << " and " << item.record_b << " disagree on "
                << item.attribute;
          } else if constexpr (std::is_same_v<T, DanglingReference>) {
            out << "child record " << item.child_record << " references missing key ("
                << join_names(item.missing_key) << ")";
          } else {
            out << "parent records " << item.record_a << " and " << item.record_b
                << " share key (" << join_names(item.key) << ")";
          }
        },
        v);
  }
  return out.str();
}

ViolationReport check_fd(const Relation& relation, const FunctionalDependency& fd) {
  fd.validate(relation.schema());
  const auto lhs = relation.schema().require_all(fd.lhs);
  const auto rhs = relation.schema().require_all(fd.rhs);

  std::unordered_map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < relation.size(); ++r) {
    if (auto key = tuple_key(relation.records()[r], lhs)) groups[*key].push_back(r);
  }

  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> found;
  for (const auto& [key, members] : groups) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        const auto& a = relation.records()[members[i]];
        const auto& b = relation.records()[members[j]];
        for (std::size_t k = 0; k < rhs.size(); ++k) {
          if (!(a[rhs[k]] == b[rhs[k]])) found.emplace_back(members[i], members[j], k);
        }
      }
    }
  }
  std::sort(found.begin(), found.end());

  ViolationReport report;
  report.violations.reserve(found.size());
  for (const auto& [a, b, k] : found) report.violations.emplace_back(FdConflict{a, b, fd.rhs[k]});
  return report;
}

ViolationReport check_fkc(const Relation& child, const Relation& parent,
                          const ForeignKeyConstraint& fkc) {
  check_fkc_shape(child, parent, fkc);
  const auto child_idx = child.schema().require_all(fkc.child_attrs);
  const auto parent_idx = parent.schema().require_all(fkc.parent_key_attrs);

  ViolationReport report;
  std::unordered_map<std::string, std::size_t> first_with_key;
  std::vector<DuplicateParentKey> duplicates;
  for (std::size_t p = 0; p < parent.size(); ++p) {
    auto key = tuple_key(parent.records()[p], parent_idx);
    if (!key) continue;
    auto [it, inserted] = first_with_key.emplace(*key, p);
    if (!inserted) {
      duplicates.push_back({it->second, p, tuple_text(parent.records()[p], parent_idx)});
    }
  }

  for (std::size_t c = 0; c < child.size(); ++c) {
    auto key = tuple_key(child.records()[c], child_idx);
    if (!key) continue;
    if (!first_with_key.contains(*key)) {
      report.violations.emplace_back(
          DanglingReference{c, tuple_text(child.records()[c], child_idx)});
    }
  }
  for (auto& d : duplicates) report.violations.emplace_back(std::move(d));
  return report;
}

std::string joined_attribute_name(const Schema& child, const Schema& parent,
                                  const ForeignKeyConstraint& fkc, std::string_view parent_attr) {
  parent.require(parent_attr);
  for (std::size_t i = 0; i < fkc.parent_key_attrs.size(); ++i) {
    if (fkc.parent_key_attrs[i] == parent_attr) return fkc.child_attrs.at(i);
  }
  if (child.index_of(parent_attr)) return parent.name() + "." + std::string(parent_attr);
  return std::string(parent_attr);
}

Relation join_fkc(const Relation& child, const Relation& parent, const ForeignKeyConstraint& fkc) {
  auto report = check_fkc(child, parent, fkc);
  if (!report.empty()) {
    throw JoinRefused("join " + child.name() + " with " + parent.name() + " refused: " +
                          report.summary(),
                      std::move(report));
  }
  const auto child_idx = child.schema().require_all(fkc.child_attrs);
  const auto parent_idx = parent.schema().require_all(fkc.parent_key_attrs);

  std::vector<Attribute> attrs = child.schema().attributes();
  std::vector<std::size_t> carried;
  for (std::size_t i = 0; i < parent.schema().size(); ++i) {
    if (std::find(parent_idx.begin(), parent_idx.end(), i) != parent_idx.end()) continue;
    Attribute a = parent.schema().attributes()[i];
    a.name = joined_attribute_name(child.schema(), parent.schema(), fkc, a.name);
    attrs.push_back(std::move(a));
    carried.push_back(i);
  }
  Schema joined(child.name() + "_" + parent.name(), std::move(attrs));

  std::unordered_map<std::string, std::size_t> by_key;
  for (std::size_t p = 0; p < parent.size(); ++p) {
    if (auto key = tuple_key(parent.records()[p], parent_idx)) by_key.emplace(*key, p);
  }

  std::vector<Record> out;
  out.reserve(child.size());
  for (const auto& rec : child.records()) {
    auto key = tuple_key(rec, child_idx);
    if (!key) continue;
    const auto& match = parent.records()[by_key.at(*key)];
    Record joined_rec = rec;
    for (std::size_t i : carried) joined_rec.push_back(match[i]);
    out.push_back(std::move(joined_rec));
  }
  return Relation(std::move(joined), std::move(out));
}

FunctionalDependency compose_fds(const FunctionalDependency& fd_child,
                                 const FunctionalDependency& fd_parent,
                                 const ForeignKeyConstraint& fkc) {
  if (fd_child.rhs != fkc.child_attrs) {
    throw CompositionError("FD " + to_string(fd_child) + " does not determine foreign key (" +
                           join_names(fkc.child_attrs) + ")");
  }
  if (fd_parent.lhs != fkc.parent_key_attrs) {
    throw CompositionError("FD " + to_string(fd_parent) + " is not keyed on (" +
                           join_names(fkc.parent_key_attrs) + ")");
  }
  return FunctionalDependency{fd_child.lhs, fd_parent.rhs};
}

FunctionalDependency compose_fds(const Schema& child, const Schema& parent,
                                 const FunctionalDependency& fd_child,
                                 const FunctionalDependency& fd_parent,
                                 const ForeignKeyConstraint& fkc) {
  FunctionalDependency composed = compose_fds(fd_child, fd_parent, fkc);
  for (auto& name : composed.rhs) name = joined_attribute_name(child, parent, fkc, name);
  return composed;
}

std::vector<Assignment> infer_values(const Relation& relation, const FunctionalDependency& fd,
                                     const std::map<std::string, std::string>& lhs_assignment) {
  fd.validate(relation.schema());
  if (lhs_assignment.size() != fd.lhs.size()) {
    throw SchemaError("assignment must cover exactly the lhs of " + to_string(fd));
  }
  for (const auto& a : fd.lhs) {
    if (!lhs_assignment.contains(a)) {
      throw SchemaError("assignment is missing lhs attribute '" + a + "'");
    }
  }
  if (auto report = check_fd(relation, fd); !report.empty()) {
    throw IntegrityError("FD " + to_string(fd) + " does not hold on '" + relation.name() +
                         "': " + report.summary());
  }

  const auto lhs = relation.schema().require_all(fd.lhs);
  const auto rhs = relation.schema().require_all(fd.rhs);
  std::vector<Value> wanted;
  for (std::size_t i = 0; i < fd.lhs.size(); ++i) {
    const auto kind = relation.schema().attributes()[lhs[i]].kind;
    wanted.push_back(Value::parse(kind, lhs_assignment.at(fd.lhs[i])));
  }

  for (const auto& rec : relation.records()) {
    bool match = true;
    for (std::size_t i = 0; match && i < lhs.size(); ++i) {
      match = !rec[lhs[i]].is_null() && rec[lhs[i]] == wanted[i];
    }
    if (!match) continue;
    Assignment out;
    for (std::size_t k = 0; k < rhs.size(); ++k) out.emplace_back(fd.rhs[k], rec[rhs[k]]);
    return {out};
  }
  return {};
}

}  // namespace relbench
