#pragma once

#include "relbench/error.hpp"
#include "relbench/relation.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace relbench {

/// X -> Y: records agreeing on every lhs attribute agree on every rhs one.
struct FunctionalDependency {
  std::vector<std::string> lhs;
  std::vector<std::string> rhs;

  /// Throws SchemaError unless both sides are nonempty, disjoint,
  /// duplicate-free and present in `schema`.
  void validate(const Schema& schema) const;

  friend bool operator==(const FunctionalDependency&, const FunctionalDependency&) = default;
};

std::string to_string(const FunctionalDependency& fd);

struct ForeignKeyConstraint {
  std::string child_relation;
  std::vector<std::string> child_attrs;
  std::string parent_relation;
  std::vector<std::string> parent_key_attrs;

  friend bool operator==(const ForeignKeyConstraint&, const ForeignKeyConstraint&) = default;
};

/// Two records agree on the FD's lhs but differ on `attribute`.
struct FdConflict {
  std::size_t record_a = 0;
  std::size_t record_b = 0;
  std::string attribute;
  friend bool operator==(const FdConflict&, const FdConflict&) = default;
};

/// A child record whose foreign-key tuple matches no parent record.
struct DanglingReference {
  std::size_t child_record = 0;
  std::vector<std::string> missing_key;
  friend bool operator==(const DanglingReference&, const DanglingReference&) = default;
};

/// Two parent records share the referenced key.
struct DuplicateParentKey {
  std::size_t record_a = 0;
  std::size_t record_b = 0;
  std::vector<std::string> key;
  friend bool operator==(const DuplicateParentKey&, const DuplicateParentKey&) = default;
};

using Violation = std::variant<FdConflict, DanglingReference, DuplicateParentKey>;

struct ViolationReport {
  std::vector<Violation> violations;

  bool empty() const noexcept { return violations.empty(); }
  std::size_t size() const noexcept { return violations.size(); }
  std::string summary(std::size_t max_items = 5) const;
};

/// Thrown when a join is attempted over a violated foreign key.
class JoinRefused : public ConstraintError {
public:
  JoinRefused(const std::string& message, ViolationReport report)
      : ConstraintError(message), report_(std::move(report)) {}
  const ViolationReport& report() const noexcept { return report_; }

private:
  ViolationReport report_;
};

/// Every conflicting record pair, ordered by (record_a, record_b, rhs
/// position). Records with NULL in an lhs attribute are skipped.
ViolationReport check_fd(const Relation& relation, const FunctionalDependency& fd);

/// Dangling child references (children with a NULL in the key tuple are
/// skipped) followed by duplicated parent keys.
ViolationReport check_fkc(const Relation& child, const Relation& parent,
                          const ForeignKeyConstraint& fkc);

/// Name a parent attribute takes in join_fkc() output: key attributes map to
/// the child's foreign-key names; other attributes keep their name unless it
/// collides with a child attribute, in which case it becomes
/// "<parent_relation>.<name>".
std::string joined_attribute_name(const Schema& child, const Schema& parent,
                                  const ForeignKeyConstraint& fkc, std::string_view parent_attr);

/// Equi-join over the foreign key. Output schema is the child attributes
/// followed by the parent's non-key attributes; one output record per child
/// record with a NULL-free foreign-key tuple, in child order. Throws
/// JoinRefused when check_fkc() reports anything.
Relation join_fkc(const Relation& child, const Relation& parent, const ForeignKeyConstraint& fkc);

/// Transitivity through a foreign key: (X -> Y) and (Y' -> Z) with the FK
/// mapping Y onto Y' yields X -> Z. Throws CompositionError when the chain
/// does not line up.
FunctionalDependency compose_fds(const FunctionalDependency& fd_child,
                                 const FunctionalDependency& fd_parent,
                                 const ForeignKeyConstraint& fkc);

/// compose_fds() with the rhs renamed to the attribute names of the joined
/// schema produced by join_fkc().
FunctionalDependency compose_fds(const Schema& child, const Schema& parent,
                                 const FunctionalDependency& fd_child,
                                 const FunctionalDependency& fd_parent,
                                 const ForeignKeyConstraint& fkc);

using Assignment = std::vector<std::pair<std::string, Value>>;

/// Looks up the rhs values determined by an lhs assignment. Returns zero or
/// one assignment. Throws IntegrityError when the FD does not hold on the
/// data, SchemaError when the assignment does not cover exactly fd.lhs.
std::vector<Assignment> infer_values(const Relation& relation, const FunctionalDependency& fd,
                                     const std::map<std::string, std::string>& lhs_assignment);

}  // namespace relbench
