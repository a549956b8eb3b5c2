#pragma once

#include "relbench/constraints.hpp"
#include "relbench/verifier.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relbench {

inline constexpr std::string_view kProbeSystemPrompt = "Answer the following question in yes or no. Be concise.";

/// Probe wording for one relation. Templates use `{attribute}` placeholders
/// over the probed record.
struct ProbeTemplate {
  /// "Do you know about the movie {title} released in {year}?"
  std::string entity;
  /// Per rhs attribute, the clause appended to the single binary probe:
  /// "If yes, is the movie directed by {director}?"
  std::vector<std::pair<std::string, std::string>> chained;
  /// Per rhs attribute, a self-contained question repeating the lhs:
  /// "Is the movie {title} released in {year} directed by {director}?"
  std::vector<std::pair<std::string, std::string>> standalone;
};

enum class ProbeMode { binary, mc };

/// One concatenated prompt: the entity question followed by one chained
/// question per rhs attribute of `fd`. Throws PreconditionError when the
/// record has a NULL in an FD attribute, ConfigError when a clause is
/// missing.
std::string build_binary_probe(const Schema& schema, const Record& record, const FunctionalDependency& fd,
                               const ProbeTemplate& tmpl);

/// 1 + |rhs| separate prompts: the entity question, then one standalone
/// question per rhs attribute.
std::vector<std::string> build_mc_probes(const Schema& schema, const Record& record, const FunctionalDependency& fd,
                                         const ProbeTemplate& tmpl);

/// Known iff every answered segment is Yes and at least `questions` segments
/// answered. Binary mode reads one concatenated reply sentence by sentence;
/// mc mode needs one reply per question, each starting with Yes. Throws
/// PreconditionError on an empty response list.
bool evaluate_probe(const std::vector<std::string>& responses, ProbeMode mode, std::size_t questions);

struct KnowledgeRecord {
  std::string model;
  std::string dataset;
  std::string family;
  EntityKey entity_key;
  bool known = false;
  std::string probe_prompts_hash;

  friend bool operator==(const KnowledgeRecord&, const KnowledgeRecord&) = default;
};

Json to_json(const KnowledgeRecord& k);
KnowledgeRecord knowledge_from_json(const Json& j);

enum class FilterMode { per_model, common, all };

std::string_view to_string(FilterMode m);
/// Accepts "per_model"/"per-model", "common", "all".
FilterMode parse_filter_mode(std::string_view s);

inline constexpr std::size_t kMinKnownEntities = 20;

/// Indexed knowledge with last-write-wins per (model, dataset, family,
/// entity).
class KnowledgeBase {
public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(const std::vector<KnowledgeRecord>& records);

  void add(const KnowledgeRecord& record);
  /// nullopt when no record covers the key.
  std::optional<bool> known(std::string_view model, std::string_view dataset, std::string_view family,
                            const EntityKey& key) const;
  /// Known entities of a model within a dataset, over all families.
  std::size_t known_count(std::string_view model, std::string_view dataset) const;
  std::vector<KnowledgeRecord> records() const;

private:
  static std::string index_key(std::string_view model, std::string_view dataset, std::string_view family,
                               const EntityKey& key);
  std::map<std::string, KnowledgeRecord> records_;
};

/// per_model keeps responses whose entity the responding model knows;
/// common keeps entities known by every model in `verified` that knows at
/// least `min_known` entities of the dataset (smaller models do not vote);
/// all keeps everything. Throws CoverageError when a needed record is
/// missing.
std::vector<VerifiedResponse> knowledge_filter(const std::vector<VerifiedResponse>& verified, FilterMode mode,
                                               const KnowledgeBase& knowledge,
                                               std::size_t min_known = kMinKnownEntities);

}  // namespace relbench
