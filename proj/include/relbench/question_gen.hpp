#pragma once

#include "relbench/constraints.hpp"
#include "relbench/question.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relbench {

inline constexpr std::string_view kBinarySystemPrompt =
    "Answer the following question in yes or no, and then explain why. "
    "Say unsure if you don't know and then explain why.";
inline constexpr std::string_view kMcSystemPrompt = "Choose the correct option and explain why.";

/// Phrasings for one multiple-choice option attribute. Each phrasing uses
/// `{value}` (optionally `{value|article}`).
struct OptionPhrasing {
  std::string attribute;
  std::vector<std::string> phrasings;  // exactly 3
};

struct QuestionTemplate {
  QuestionType qtype = QuestionType::binary_basic;
  std::string text;                     // binary and multihop
  std::vector<std::string> stems;       // multiple choice, exactly 3
  std::vector<OptionPhrasing> options;  // multiple choice, in listing order
};

/// What to do when an FD does not hold on the data.
enum class ViolationPolicy { refuse, warn };

struct SkippedRecord {
  std::string dataset;
  std::string family;
  EntityKey entity_key;
  std::size_t record_index = 0;
  std::string reason;
};

struct Generated {
  std::vector<Question> questions;  // sorted by id
  std::vector<SkippedRecord> skipped;
};

/// Acceptable spellings of a value in a rationale: the display text; for
/// years also the decade ("1958", "1950s") unless `with_decade` is false;
/// for person names written "Family, Given" also "Given Family".
KeywordForms surface_forms(const Attribute& attribute, const Value& value, bool with_decade = true);

/// One question per record with a NULL-free lhs and rhs. The template must
/// match the polarity (binary_basic or binary_negated) and may only
/// reference lhs attributes.
Generated gen_binary(std::string_view dataset, const Relation& relation, const FunctionalDependency& fd,
                     const QuestionTemplate& tmpl, Polarity polarity,
                     ViolationPolicy policy = ViolationPolicy::refuse);

/// Three rephrased variants per eligible record. Exactly one option per
/// question carries a value taken from another record; the falsified
/// attribute rotates over the options in entity-key order.
Generated gen_multiple_choice(std::string_view dataset, const Relation& relation,
                              const std::vector<FunctionalDependency>& option_fds, const QuestionTemplate& tmpl,
                              std::uint64_t seed, ViolationPolicy policy = ViolationPolicy::refuse);

/// Appends "None of the above." to every question and turns a seeded
/// subset of round(fraction * n) questions into all-true ones whose expected
/// answer is NoneOfTheAbove.
std::vector<Question> inject_nota(std::vector<Question> questions, double fraction, std::uint64_t seed);

/// One link of a multi-hop chain. Every link but the last carries the
/// foreign key into the next link's relation.
struct ChainLink {
  Relation relation;
  FunctionalDependency fd;
  std::optional<ForeignKeyConstraint> fkc;
};

/// Joins the chain, composes its FDs and renders one question per joined
/// record. hop_keywords[i] holds the value revealed at hop i+1. A chain of
/// length one yields gen_binary() output.
Generated gen_multihop(std::string_view dataset, std::string_view chain_name, const std::vector<ChainLink>& chain,
                       const QuestionTemplate& tmpl, Polarity polarity,
                       ViolationPolicy policy = ViolationPolicy::refuse);

}  // namespace relbench
