#pragma once

#include "relbench/question.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace relbench {

enum class DemoStyle { few_shot_binary, few_shot_mc, cot_multihop };

std::string_view to_string(DemoStyle s);
DemoStyle parse_demo_style(std::string_view s);

struct Demonstration {
  std::string question;
  std::string answer;
  friend bool operator==(const Demonstration&, const Demonstration&) = default;
};

struct DemonstrationSet {
  std::string dataset;
  DemoStyle style = DemoStyle::few_shot_binary;
  std::vector<Demonstration> items;

  /// Binary and chain-of-thought sets need as many Yes as No answers; MC
  /// sets need pairwise distinct "Option k" answers. Throws ConfigError.
  void validate() const;
};

/// {"dataset", "style", "items": [{"question", "answer"}]}. Throws IoError
/// or ParseError; the set is validated.
DemonstrationSet load_demonstrations(const std::filesystem::path& path);
Json to_json(const DemonstrationSet& set);

inline constexpr std::string_view kAugmentationSystemPrompt =
    "The first few passages are hints, that may not contain all relevant information. Answer the following "
    "question with your own knowledge getting help from the first few passages if possible.";

/// Prefixes the demonstrations as "Q: ...\nA: ...\n\n" blocks. Binary demos
/// serve binary and multihop questions, MC demos serve MC questions.
/// Throws ConfigError on a style or dataset mismatch and PreconditionError
/// when the question is already wrapped. An empty set is a no-op.
Question with_few_shot(Question question, const DemonstrationSet& demos);

/// Same assembly with step-by-step demonstrations; multihop questions only.
Question with_cot(Question question, const DemonstrationSet& demos);

/// Replaces the system prompt and prepends the passages, each followed by a
/// blank line. Throws ConfigError when there are no passages or one is
/// blank.
Question with_augmentation(Question question, const std::vector<std::string>& passages);

class PassageSource {
public:
  virtual ~PassageSource() = default;
  /// Empty when nothing is known about the question.
  virtual std::vector<std::string> passages_for(const Question& question) const = 0;
};

/// Passages from a JSON file: {"<question id>" | "<entity key>": [passages]}
/// where the entity key is written "attr=value; attr=value". Question ids
/// take precedence.
class FilePassageSource : public PassageSource {
public:
  explicit FilePassageSource(const std::filesystem::path& path);
  std::vector<std::string> passages_for(const Question& question) const override;

private:
  std::map<std::string, std::vector<std::string>> passages_;
};

}  // namespace relbench
