#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace relbench {

using Json = nlohmann::ordered_json;

enum class QuestionType { binary_basic, binary_negated, multiple_choice, multihop_basic, multihop_negated };

std::string_view to_string(QuestionType t);
/// Accepts the enum spelling ("binary_basic") and the CLI spelling
/// ("bn-basic", "mc", ...). Throws ConfigError otherwise.
QuestionType parse_question_type(std::string_view s);
/// Short column label used in reports: BN(Y), BN(N), MC, MH(Y), MH(N).
std::string_view short_label(QuestionType t);

inline bool is_binary(QuestionType t) {
  return t == QuestionType::binary_basic || t == QuestionType::binary_negated;
}
inline bool is_multihop(QuestionType t) {
  return t == QuestionType::multihop_basic || t == QuestionType::multihop_negated;
}

enum class Polarity { basic, negated };

enum class AnswerKind { yes, no, unsure, option, none_of_the_above, unparseable };

/// Expected or parsed answer. `option` is 1-based and meaningful only for
/// AnswerKind::option.
struct Answer {
  AnswerKind kind = AnswerKind::unparseable;
  int option = 0;

  static Answer yes() { return {AnswerKind::yes, 0}; }
  static Answer no() { return {AnswerKind::no, 0}; }
  static Answer unsure() { return {AnswerKind::unsure, 0}; }
  static Answer nota() { return {AnswerKind::none_of_the_above, 0}; }
  static Answer unparseable() { return {AnswerKind::unparseable, 0}; }
  static Answer nth(int k) { return {AnswerKind::option, k}; }

  friend bool operator==(const Answer&, const Answer&) = default;
};

/// "Yes", "No", "Unsure", "Option 3", "NoneOfTheAbove", "Unparseable".
std::string to_string(const Answer& a);
Answer parse_answer_label(std::string_view s);

using KeywordForms = std::vector<std::string>;

struct GoldLabel {
  Answer expected;
  /// One entry per hop, each a nonempty list of acceptable surface forms.
  std::vector<KeywordForms> hop_keywords;
  std::optional<std::string> falsified_attribute;
  std::optional<std::string> true_value;

  friend bool operator==(const GoldLabel&, const GoldLabel&) = default;
};

struct McOption {
  std::string attribute;
  std::string phrasing;  // template with {value}
  std::string value;
  std::string text;      // rendered phrasing
  bool fabricated = false;

  friend bool operator==(const McOption&, const McOption&) = default;
};

struct McBody {
  std::string stem;
  std::vector<McOption> options;
  bool has_nota = false;

  /// 1-based index of the appended "None of the above." option, or 0.
  int nota_index() const { return has_nota ? static_cast<int>(options.size()) + 1 : 0; }
  int option_count() const { return static_cast<int>(options.size()) + (has_nota ? 1 : 0); }

  friend bool operator==(const McBody&, const McBody&) = default;
};

inline constexpr std::string_view kNotaText = "None of the above.";

/// "Q: <stem>\nOption 1: ...\n...\n\nA:"
std::string render_mc_prompt(const McBody& body);

using EntityKey = std::vector<std::pair<std::string, std::string>>;

/// "title=Avatar; year=2009"
std::string to_string(const EntityKey& key);

struct Question {
  std::string id;
  std::string dataset;
  QuestionType qtype = QuestionType::binary_basic;
  int hop_count = 1;
  int variant_index = 0;
  std::string prompt;
  std::string system_prompt;
  GoldLabel gold;
  EntityKey entity_key;
  std::optional<McBody> mc;
  std::string chain;     // multihop chain name
  std::string wrapping;  // "", "few_shot", "cot" or "augment"
  std::optional<double> nota_fraction;

  friend bool operator==(const Question&, const Question&) = default;
};

/// Family used to pair questions with knowledge probes: "binary", "mc" or
/// "multihop/<chain>".
std::string question_family(const Question& q);

Json to_json(const Question& q);
/// Throws ParseError on missing or ill-typed fields.
Question question_from_json(const Json& j);

/// Structural GoldLabel and Question invariants. Throws IntegrityError
/// naming the question and the broken rule.
void check_invariants(const Question& q);

}  // namespace relbench
