#include "relbench/prompting.hpp"

#include "relbench/error.hpp"
#include "relbench/text.hpp"
#include "relbench/verifier.hpp"

#include <fstream>
#include <regex>
#include <set>

namespace relbench {

std::string_view to_string(DemoStyle s) {
  switch (s) {
    case DemoStyle::few_shot_binary: return "few_shot_binary";
    case DemoStyle::few_shot_mc: return "few_shot_mc";
    case DemoStyle::cot_multihop: return "cot_multihop";
  }
  return "?";
}

DemoStyle parse_demo_style(std::string_view s) {
  for (auto d : {DemoStyle::few_shot_binary, DemoStyle::few_shot_mc, DemoStyle::cot_multihop}) {
    if (s == to_string(d)) return d;
  }
  throw ParseError("unknown demonstration style '" + std::string(s) + "'");
}

void DemonstrationSet::validate() const {
  auto where = [&] { return dataset + "/" + std::string(to_string(style)); };
  if (style == DemoStyle::few_shot_mc) {
    static const std::regex option(R"(^\s*option\s+(\d+))", std::regex::icase);
    std::set<int> seen;
    for (const auto& d : items) {
      std::smatch m;
      if (!std::regex_search(d.answer, m, option)) {
        throw ConfigError(where() + ": demonstration answer does not name an option: " + d.answer.substr(0, 40));
      }
      if (!seen.insert(std::stoi(m[1].str())).second) {
        throw ConfigError(where() + ": option " + m[1].str() + " answered twice");
      }
    }
    return;
  }
  int yes = 0, no = 0;
  for (const auto& d : items) {
    auto sentences = split_sentences(d.answer);
    auto tok = sentences.empty() ? std::nullopt : first_polar_token(sentences.front());
    if (tok == AnswerKind::yes) ++yes;
    else if (tok == AnswerKind::no) ++no;
    else throw ConfigError(where() + ": demonstration answer is neither yes nor no: " + d.answer.substr(0, 40));
  }
  if (yes != no) {
    throw ConfigError(where() + ": unbalanced answers (" + std::to_string(yes) + " yes, " + std::to_string(no) + " no)");
  }
}

DemonstrationSet load_demonstrations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read demonstrations " + path.string());
  DemonstrationSet set;
  try {
    auto j = Json::parse(in);
    set.dataset = j.at("dataset").get<std::string>();
    set.style = parse_demo_style(j.at("style").get<std::string>());
    for (const auto& item : j.at("items")) {
      set.items.push_back({item.at("question").get<std::string>(), item.at("answer").get<std::string>()});
    }
  } catch (const Json::exception& e) {
    throw ParseError("malformed demonstrations " + path.string() + ": " + e.what());
  }
  set.validate();
  return set;
}

Json to_json(const DemonstrationSet& set) {
  Json items = Json::array();
  for (const auto& d : set.items) items.push_back(Json{{"question", d.question}, {"answer", d.answer}});
  return Json{{"dataset", set.dataset}, {"style", std::string(to_string(set.style))}, {"items", items}};
}

namespace {

void require_unwrapped(const Question& q) {
  if (!q.wrapping.empty()) throw PreconditionError("question " + q.id + " is already wrapped (" + q.wrapping + ")");
}

std::string as_block(const std::string& prompt) {
  return prompt.rfind("Q: ", 0) == 0 ? prompt : "Q: " + prompt + "\nA:";
}

Question prefix_demos(Question q, const DemonstrationSet& demos, std::string_view wrapping) {
  // MC demos have an option block, so a blank line precedes the answer as
  // in the generated target.
  const char* gap = demos.style == DemoStyle::few_shot_mc ? "\n\n" : "\n";
  std::string out;
  for (const auto& d : demos.items) out += "Q: " + d.question + gap + "A: " + d.answer + "\n\n";
  q.prompt = out + as_block(q.prompt);
  q.wrapping = std::string(wrapping);
  return q;
}

void require_dataset(const Question& q, const DemonstrationSet& demos) {
  if (demos.dataset != q.dataset) {
    throw ConfigError("demonstrations for " + demos.dataset + " cannot wrap a " + q.dataset + " question");
  }
}

}  // namespace

Question with_few_shot(Question question, const DemonstrationSet& demos) {
  bool mc = question.qtype == QuestionType::multiple_choice;
  if (demos.style == DemoStyle::cot_multihop || (demos.style == DemoStyle::few_shot_mc) != mc) {
    throw ConfigError(std::string(to_string(demos.style)) + " demonstrations do not fit a " +
                      std::string(short_label(question.qtype)) + " question");
  }
  require_dataset(question, demos);
  require_unwrapped(question);
  if (demos.items.empty()) return question;
  return prefix_demos(std::move(question), demos, "few_shot");
}

Question with_cot(Question question, const DemonstrationSet& demos) {
  if (demos.style != DemoStyle::cot_multihop) {
    throw ConfigError(std::string(to_string(demos.style)) + " demonstrations are not chain-of-thought");
  }
  if (!is_multihop(question.qtype)) {
    throw ConfigError("chain-of-thought demonstrations need a multihop question, got " +
                      std::string(short_label(question.qtype)));
  }
  require_dataset(question, demos);
  require_unwrapped(question);
  if (demos.items.empty()) return question;
  return prefix_demos(std::move(question), demos, "cot");
}

Question with_augmentation(Question question, const std::vector<std::string>& passages) {
  if (passages.empty()) throw ConfigError("augmentation needs at least one passage");
  for (const auto& p : passages) {
    if (text::trim(p).empty()) throw ConfigError("augmentation passage is blank");
  }
  require_unwrapped(question);
  std::string prefix;
  for (const auto& p : passages) prefix += p + "\n\n";
  question.prompt = prefix + question.prompt;
  question.system_prompt = std::string(kAugmentationSystemPrompt);
  question.wrapping = "augment";
  return question;
}

FilePassageSource::FilePassageSource(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read passages " + path.string());
  try {
    const Json j = Json::parse(in);
    for (const auto& [key, list] : j.items()) passages_[key] = list.get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw ParseError("malformed passages " + path.string() + ": " + e.what());
  }
}

std::vector<std::string> FilePassageSource::passages_for(const Question& q) const {
  if (auto it = passages_.find(q.id); it != passages_.end()) return it->second;
  if (auto it = passages_.find(to_string(q.entity_key)); it != passages_.end()) return it->second;
  return {};
}

}  // namespace relbench
