// Independent brute-force oracles and random data generators shared by the
// unit and acceptance suites. Nothing here calls into the implementation
// paths it is used to check.
#pragma once

#include "relbench/constraints.hpp"

#include <random>
#include <string>
#include <vector>

namespace relbench::testing {

// O(n^2) pairwise scan in (i, j, rhs position) order.
inline ViolationReport brute_force_check_fd(const Relation& r, const FunctionalDependency& fd) {
  ViolationReport out;
  const auto& attrs = r.schema().attributes();
  auto idx = [&](const std::string& name) {
    for (std::size_t i = 0; i < attrs.size(); ++i)
      if (attrs[i].name == name) return i;
    return attrs.size();
  };
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = i + 1; j < r.size(); ++j) {
      const auto& a = r.records()[i];
      const auto& b = r.records()[j];
      bool agree = true;
      for (const auto& x : fd.lhs) {
        const auto k = idx(x);
        if (a[k].is_null() || b[k].is_null() || a[k].key() != b[k].key()) {
          agree = false;
          break;
        }
      }
      if (!agree) continue;
      for (const auto& y : fd.rhs) {
        const auto k = idx(y);
        const bool same = a[k].is_null() == b[k].is_null() && a[k].key() == b[k].key();
        if (!same) out.violations.emplace_back(FdConflict{i, j, y});
      }
    }
  }
  return out;
}

// Nested-loop equi-join. Builds the output schema by hand: child attributes,
// then parent attributes that are not part of the referenced key, prefixed
// with the parent relation name on a collision.
inline Relation nested_loop_join(const Relation& child, const Relation& parent,
                                 const ForeignKeyConstraint& fkc) {
  std::vector<std::size_t> ck, pk, carried;
  for (const auto& n : fkc.child_attrs) ck.push_back(*child.schema().index_of(n));
  for (const auto& n : fkc.parent_key_attrs) pk.push_back(*parent.schema().index_of(n));

  std::vector<Attribute> attrs = child.schema().attributes();
  for (std::size_t i = 0; i < parent.schema().size(); ++i) {
    bool is_key = false;
    for (auto k : pk) is_key = is_key || k == i;
    if (is_key) continue;
    Attribute a = parent.schema().attributes()[i];
    bool collides = false;
    for (const auto& c : child.schema().attributes()) collides = collides || c.name == a.name;
    if (collides) a.name = parent.name() + "." + a.name;
    attrs.push_back(a);
    carried.push_back(i);
  }

  std::vector<Record> out;
  for (const auto& c : child.records()) {
    bool has_null = false;
    for (auto k : ck) has_null = has_null || c[k].is_null();
    if (has_null) continue;
    for (const auto& p : parent.records()) {
      bool eq = true;
      for (std::size_t m = 0; m < ck.size(); ++m) {
        eq = eq && !p[pk[m]].is_null() && p[pk[m]].key() == c[ck[m]].key();
      }
      if (!eq) continue;
      Record rec = c;
      for (auto i : carried) rec.push_back(p[i]);
      out.push_back(rec);
    }
  }
  return Relation(Schema(child.name() + "_" + parent.name(), attrs), out);
}

inline Value int_value(long v) { return Value::parse(AttributeKind::integer, std::to_string(v)); }
inline Value text_value(const std::string& s) { return Value::parse(AttributeKind::text, s); }

// Random relation of integer/text columns named c0..c{n-1}. Small domains make
// FD conflicts likely; null_rate sprinkles NULLs.
inline Relation random_relation(std::mt19937_64& rng, const std::string& name, std::size_t rows,
                                std::size_t cols, int domain, double null_rate) {
  std::vector<Attribute> attrs;
  for (std::size_t c = 0; c < cols; ++c) {
    attrs.push_back({"c" + std::to_string(c), c % 2 ? AttributeKind::text : AttributeKind::integer});
  }
  std::uniform_int_distribution<int> pick(0, domain - 1);
  std::bernoulli_distribution is_null(null_rate);
  std::vector<Record> recs;
  for (std::size_t r = 0; r < rows; ++r) {
    Record rec;
    for (std::size_t c = 0; c < cols; ++c) {
      if (is_null(rng)) {
        rec.push_back(Value::null());
      } else if (c % 2) {
        rec.push_back(text_value("v" + std::to_string(pick(rng))));
      } else {
        rec.push_back(int_value(pick(rng)));
      }
    }
    recs.push_back(rec);
  }
  return Relation(Schema(name, attrs), recs);
}

}  // namespace relbench::testing
