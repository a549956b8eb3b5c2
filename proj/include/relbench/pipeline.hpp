#pragma once

#include "relbench/llm_gateway.hpp"
#include "relbench/manifest.hpp"
#include "relbench/report.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace relbench {

struct RunConfig {
  std::filesystem::path manifest;
  /// Empty selects every dataset of the manifest.
  std::vector<std::string> datasets;
  /// Empty selects every question type.
  std::vector<QuestionType> qtypes;
  /// Empty selects every chain of the selected datasets.
  std::vector<std::string> chains;

  ProviderKind provider = ProviderKind::mock_oracle;
  /// Empty means one model named after the provider.
  std::vector<std::string> models;
  /// Overrides the manifest's endpoint and key variable when nonempty.
  std::string endpoint;
  std::string api_key_env;
  std::filesystem::path script;
  int max_tokens = 512;

  FilterMode filter = FilterMode::all;
  std::size_t min_known = kMinKnownEntities;
  /// Each fraction adds a copy of the MC questions with NOTA injected; the
  /// plain MC questions are then not asked.
  std::vector<double> nota_fractions;

  bool few_shot = false;
  bool cot = false;
  std::optional<std::filesystem::path> augment;

  std::optional<std::uint64_t> seed;
  int concurrency = 4;
  /// Defaults to <out_dir>/cache.
  std::optional<std::filesystem::path> cache_dir;
  std::filesystem::path out_dir;
  std::optional<ViolationPolicy> on_violation;

  /// Throws ConfigError: missing seed for MC or NOTA, fraction outside
  /// [0,1], clashing prompt wrappers, nonpositive concurrency.
  void validate() const;
  std::vector<std::string> effective_models() const;
};

/// Counters of the last run, for callers and tests.
struct RunSummary {
  std::size_t questions = 0;
  std::size_t skipped = 0;
  std::size_t knowledge_records = 0;
  std::size_t responses = 0;
  std::size_t new_responses = 0;
  std::size_t verified = 0;
  GatewayStats probe_stats;
  GatewayStats ask_stats;
};

/// validate, generate, probe, ask, verify and report over JSONL files in
/// the output directory. Each stage reads its predecessor's files, so any
/// stage can run on its own. Every JSONL file starts with a header line
/// {"_header": {stage, config_hash, input_hash}}; a stage refuses inputs
/// or existing outputs written under another configuration. Failures are
/// rethrown as StageError naming the stage; earlier files stay in place.
class Pipeline {
public:
  /// Loads the manifests. Throws ConfigError, IoError or ParseError.
  explicit Pipeline(RunConfig config);

  void validate();
  void generate();
  void probe();
  void ask();
  void verify();
  void report();
  /// Every stage in order. probe runs only when the filter needs it.
  void run_all();

  const RunSummary& summary() const noexcept { return summary_; }
  const RunConfig& config() const noexcept { return config_; }
  const std::vector<DatasetManifest>& manifests() const noexcept { return manifests_; }

  /// Configuration hash recorded by a stage ("generate", "probe", "ask",
  /// "verify", "report").
  std::string config_hash(const std::string& stage) const;

private:
  ViolationPolicy policy_for(const DatasetManifest& m) const;
  std::unique_ptr<Gateway> make_gateway() const;
  template <typename F>
  void run_stage(const std::string& stage, F&& body);

  RunConfig config_;
  std::vector<DatasetManifest> manifests_;
  RunSummary summary_;
};

/// First line of a JSONL stage file.
Json stage_header(const std::string& stage, const std::string& config_hash, const std::string& input_hash);

struct JsonlFile {
  Json header;
  std::vector<Json> rows;
};

/// Throws IoError when unreadable, ParseError on a malformed line or a
/// missing header.
JsonlFile read_jsonl(const std::filesystem::path& path);
/// Header plus rows, written to a temporary file and renamed into place.
void write_jsonl(const std::filesystem::path& path, const Json& header, const std::vector<Json>& rows);

}  // namespace relbench
