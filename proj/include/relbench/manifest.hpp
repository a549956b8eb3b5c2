#pragma once

#include "relbench/constraints.hpp"
#include "relbench/knowledge_probe.hpp"
#include "relbench/prompting.hpp"
#include "relbench/question_gen.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace relbench {

struct NamedFd {
  std::string name;
  std::string relation;
  FunctionalDependency fd;
};

struct BinarySpec {
  std::string fd;
  std::string basic;
  std::string negated;
};

struct McSpec {
  std::vector<std::string> fds;
  QuestionTemplate tmpl;  // qtype multiple_choice, stems and options
};

struct ChainLinkSpec {
  std::string fd;
  std::optional<std::string> fkc;
};

struct ChainSpec {
  std::string name;
  std::vector<ChainLinkSpec> links;
  std::string basic;
  std::string negated;
};

struct ProbeSpec {
  std::string relation;
  std::string fd;
  ProbeTemplate tmpl;
};

/// One dataset: relations, constraints, templates and defaults. Paths in
/// the file are relative to the manifest's directory.
struct DatasetManifest {
  std::string dataset;
  std::filesystem::path path;
  std::map<std::string, Relation> relations;
  std::map<std::string, NamedFd> fds;
  std::map<std::string, ForeignKeyConstraint> fkcs;
  std::optional<BinarySpec> binary;
  std::optional<McSpec> multiple_choice;
  std::vector<ChainSpec> chains;
  std::optional<ProbeSpec> probe;
  std::map<DemoStyle, std::filesystem::path> demonstrations;
  std::string endpoint;
  std::string api_key_env;
  ViolationPolicy on_violation = ViolationPolicy::refuse;
  /// SHA-256 over the manifest text and every CSV it loads.
  std::string content_hash;

  const Relation& relation(const std::string& name) const;
  const NamedFd& fd(const std::string& name) const;
  const ForeignKeyConstraint& fkc(const std::string& name) const;
  const ChainSpec& chain(const std::string& name) const;
  /// Resolved links for gen_multihop().
  std::vector<ChainLink> chain_links(const ChainSpec& spec) const;
};

/// Throws IoError, ParseError, ConfigError or SchemaError.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// A dataset manifest, or an index {"datasets": [paths]} of them.
std::vector<DatasetManifest> load_manifests(const std::filesystem::path& path);

struct ConstraintCheck {
  std::string kind;  // "fd" or "fkc"
  std::string name;
  std::string description;
  ViolationReport report;
};

/// Every named FD and FKC of the manifest, in name order.
std::vector<ConstraintCheck> check_constraints(const DatasetManifest& manifest);

}  // namespace relbench
