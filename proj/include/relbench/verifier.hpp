#pragma once

#include "relbench/question.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace relbench {

struct RationaleCheck {
  std::vector<bool> hop_hits;
  /// Per hop, the gold surface form that matched; empty on a miss.
  std::vector<std::string> matched_forms;

  bool all_hit() const;
  friend bool operator==(const RationaleCheck&, const RationaleCheck&) = default;
};

struct VerifiedResponse {
  std::string question_id;
  std::string model;
  Answer answer;
  bool answer_correct = false;
  RationaleCheck rationale;
  bool abstained = false;

  // Grouping context copied from the question.
  std::string dataset;
  QuestionType qtype = QuestionType::binary_basic;
  int hop_count = 1;
  std::string family;
  std::string column;  // report column, e.g. "BN(Y)" or "MH(Y)[movie_director]"
  EntityKey entity_key;

  friend bool operator==(const VerifiedResponse&, const VerifiedResponse&) = default;
};

/// Sentences of a reply. A sentence ends at '.', '!' or '?' followed by
/// whitespace or the end of text, or at a newline. Empty pieces are dropped.
std::vector<std::string> split_sentences(std::string_view text);

/// First standalone yes / no / unsure token of a sentence ("not sure" and
/// "I don't know" count as unsure), case-insensitive.
std::optional<AnswerKind> first_polar_token(std::string_view sentence);

/// Binary and multi-hop questions: the first polar token of the first
/// sentence, else a trailing "the answer is yes/no". Multiple choice: the
/// earliest "option k" or "none of the above" in the first sentence, else a
/// unique best content match against the listed options. Never throws;
/// anything else is Unparseable.
Answer parse_answer(std::string_view text, const Question& question);

struct KeywordMatch {
  bool hit = false;
  std::string form;
};

/// Matches any surface form against the text after folding (NFKC, case,
/// diacritics, punctuation, whitespace). Multi-token forms match as an
/// ordered token subsequence with at most two interleaved tokens between
/// consecutive form tokens, and a single-letter initial stands in for a
/// name token with the same first letter when another token matches fully.
KeywordMatch match_keyword(std::string_view text, const KeywordForms& forms);

/// Report column for a question: short qtype label, plus "[chain]" for
/// multi-hop questions and "@nota=<f>" for NOTA sweep copies.
std::string report_column(const Question& question);

/// Throws IntegrityError when the gold keywords do not line up with the
/// question's hop count.
VerifiedResponse verify(const Question& question, std::string_view response_text, std::string_view model);

Json to_json(const VerifiedResponse& v);
VerifiedResponse verified_from_json(const Json& j);

}  // namespace relbench
