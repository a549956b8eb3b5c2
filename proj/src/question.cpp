#include "relbench/question.hpp"

#include "relbench/error.hpp"
#include "relbench/template.hpp"

#include <charconv>

namespace relbench {

std::string_view to_string(QuestionType t) {
  switch (t) {
    case QuestionType::binary_basic: return "binary_basic";
    case QuestionType::binary_negated: return "binary_negated";
    case QuestionType::multiple_choice: return "multiple_choice";
    case QuestionType::multihop_basic: return "multihop_basic";
    case QuestionType::multihop_negated: return "multihop_negated";
  }
  return "?";
}

QuestionType parse_question_type(std::string_view s) {
  if (s == "binary_basic" || s == "bn-basic") return QuestionType::binary_basic;
  if (s == "binary_negated" || s == "bn-negated") return QuestionType::binary_negated;
  if (s == "multiple_choice" || s == "mc") return QuestionType::multiple_choice;
  if (s == "multihop_basic" || s == "mh-basic") return QuestionType::multihop_basic;
  if (s == "multihop_negated" || s == "mh-negated") return QuestionType::multihop_negated;
  throw ConfigError("unknown question type '" + std::string(s) + "'");
}

std::string_view short_label(QuestionType t) {
  switch (t) {
    case QuestionType::binary_basic: return "BN(Y)";
    case QuestionType::binary_negated: return "BN(N)";
    case QuestionType::multiple_choice: return "MC";
    case QuestionType::multihop_basic: return "MH(Y)";
    case QuestionType::multihop_negated: return "MH(N)";
  }
  return "?";
}

std::string to_string(const Answer& a) {
  switch (a.kind) {
    case AnswerKind::yes: return "Yes";
    case AnswerKind::no: return "No";
    case AnswerKind::unsure: return "Unsure";
    case AnswerKind::option: return "Option " + std::to_string(a.option);
    case AnswerKind::none_of_the_above: return "NoneOfTheAbove";
    case AnswerKind::unparseable: return "Unparseable";
  }
  return "?";
}

Answer parse_answer_label(std::string_view s) {
  if (s == "Yes") return Answer::yes();
  if (s == "No") return Answer::no();
  if (s == "Unsure") return Answer::unsure();
  if (s == "NoneOfTheAbove") return Answer::nota();
  if (s == "Unparseable") return Answer::unparseable();
  constexpr std::string_view prefix = "Option ";
  if (s.substr(0, prefix.size()) == prefix) {
    int k = 0;
    auto rest = s.substr(prefix.size());
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), k);
    if (ec == std::errc{} && ptr == rest.data() + rest.size() && k >= 1) return Answer::nth(k);
  }
  throw ParseError("unknown answer label '" + std::string(s) + "'");
}

std::string render_mc_prompt(const McBody& body) {
  std::string out = "Q: " + body.stem + "\n";
  int k = 1;
  for (const auto& opt : body.options) out += "Option " + std::to_string(k++) + ": " + opt.text + "\n";
  if (body.has_nota) out += "Option " + std::to_string(k) + ": " + std::string(kNotaText) + "\n";
  out += "\nA:";
  return out;
}

std::string to_string(const EntityKey& key) {
  std::string out;
  for (const auto& [attr, value] : key) {
    if (!out.empty()) out += "; ";
    out += attr + "=" + value;
  }
  return out;
}

std::string question_family(const Question& q) {
  if (is_binary(q.qtype)) return "binary";
  if (q.qtype == QuestionType::multiple_choice) return "mc";
  return "multihop/" + q.chain;
}

Json to_json(const Question& q) {
  Json j;
  j["id"] = q.id;
  j["dataset"] = q.dataset;
  j["qtype"] = to_string(q.qtype);
  j["hop_count"] = q.hop_count;
  j["variant_index"] = q.variant_index;
  j["prompt"] = q.prompt;
  j["system_prompt"] = q.system_prompt;
  j["expected_answer"] = to_string(q.gold.expected);
  j["hop_keywords"] = q.gold.hop_keywords;
  Json key = Json::object();
  for (const auto& [attr, value] : q.entity_key) key[attr] = value;
  j["entity_key"] = key;
  j["falsified_attribute"] = q.gold.falsified_attribute ? Json(*q.gold.falsified_attribute) : Json();
  j["true_value"] = q.gold.true_value ? Json(*q.gold.true_value) : Json();
  if (q.mc) {
    Json mc;
    mc["stem"] = q.mc->stem;
    Json opts = Json::array();
    for (const auto& o : q.mc->options) {
      opts.push_back({{"attribute", o.attribute},
                      {"phrasing", o.phrasing},
                      {"value", o.value},
                      {"text", o.text},
                      {"fabricated", o.fabricated}});
    }
    mc["options"] = opts;
    mc["has_nota"] = q.mc->has_nota;
    j["mc"] = mc;
  }
  if (!q.chain.empty()) j["chain"] = q.chain;
  if (!q.wrapping.empty()) j["wrapping"] = q.wrapping;
  if (q.nota_fraction) j["nota_fraction"] = *q.nota_fraction;
  return j;
}

Question question_from_json(const Json& j) {
  try {
    Question q;
    q.id = j.at("id").get<std::string>();
    q.dataset = j.at("dataset").get<std::string>();
    q.qtype = parse_question_type(j.at("qtype").get<std::string>());
    q.hop_count = j.at("hop_count").get<int>();
    q.variant_index = j.at("variant_index").get<int>();
    q.prompt = j.at("prompt").get<std::string>();
    q.system_prompt = j.at("system_prompt").get<std::string>();
    q.gold.expected = parse_answer_label(j.at("expected_answer").get<std::string>());
    q.gold.hop_keywords = j.at("hop_keywords").get<std::vector<KeywordForms>>();
    for (const auto& [attr, value] : j.at("entity_key").items()) {
      q.entity_key.emplace_back(attr, value.get<std::string>());
    }
    if (auto it = j.find("falsified_attribute"); it != j.end() && !it->is_null()) {
      q.gold.falsified_attribute = it->get<std::string>();
    }
    if (auto it = j.find("true_value"); it != j.end() && !it->is_null()) q.gold.true_value = it->get<std::string>();
    if (auto it = j.find("mc"); it != j.end()) {
      McBody mc;
      mc.stem = it->at("stem").get<std::string>();
      mc.has_nota = it->at("has_nota").get<bool>();
      for (const auto& o : it->at("options")) {
        mc.options.push_back({o.at("attribute").get<std::string>(), o.at("phrasing").get<std::string>(),
                              o.at("value").get<std::string>(), o.at("text").get<std::string>(),
                              o.at("fabricated").get<bool>()});
      }
      q.mc = std::move(mc);
    }
    q.chain = j.value("chain", "");
    q.wrapping = j.value("wrapping", "");
    if (auto it = j.find("nota_fraction"); it != j.end()) q.nota_fraction = it->get<double>();
    return q;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed question record: ") + e.what());
  }
}

void check_invariants(const Question& q) {
  auto fail = [&](const std::string& why) { throw IntegrityError("question " + q.id + ": " + why); };
  if (q.id.empty()) fail("empty id");
  if (is_multihop(q.qtype)) {
    if (q.hop_count < 2) fail("multihop question with hop_count < 2");
  } else if (q.hop_count != 1) {
    fail("single-hop question with hop_count != 1");
  }
  if (static_cast<int>(q.gold.hop_keywords.size()) != q.hop_count) fail("hop_keywords length != hop_count");
  for (const auto& forms : q.gold.hop_keywords) {
    if (forms.empty()) fail("empty hop keyword set");
    for (const auto& f : forms) {
      if (f.empty()) fail("empty keyword surface form");
    }
  }
  const auto expected = q.gold.expected.kind;
  switch (q.qtype) {
    case QuestionType::binary_basic:
    case QuestionType::multihop_basic:
      if (expected != AnswerKind::yes) fail("basic question must expect Yes");
      break;
    case QuestionType::binary_negated:
    case QuestionType::multihop_negated:
      if (expected != AnswerKind::no) fail("negated question must expect No");
      break;
    case QuestionType::multiple_choice: {
      if (!q.mc) fail("multiple-choice question without options");
      int fabricated = 0;
      int fabricated_index = 0;
      for (std::size_t i = 0; i < q.mc->options.size(); ++i) {
        if (q.mc->options[i].fabricated) {
          ++fabricated;
          fabricated_index = static_cast<int>(i) + 1;
        }
      }
      if (expected == AnswerKind::none_of_the_above) {
        if (!q.mc->has_nota || fabricated != 0) fail("NOTA-correct question must list only true options");
      } else if (expected == AnswerKind::option) {
        if (fabricated != 1 || q.gold.expected.option != fabricated_index) {
          fail("expected option must be the single fabricated option");
        }
      } else {
        fail("multiple-choice question must expect an option");
      }
      if (!q.gold.falsified_attribute || !q.gold.true_value) fail("missing falsified attribute or true value");
      if (q.wrapping.empty() && q.prompt != render_mc_prompt(*q.mc)) fail("prompt does not match option block");
      break;
    }
  }
  if (q.qtype != QuestionType::multiple_choice && q.variant_index != 0) fail("variant_index must be 0");
  if (q.variant_index < 0 || q.variant_index > 2) fail("variant_index out of range");
  // A leftover `{name}` means rendering missed a placeholder.
  for (std::size_t open = q.prompt.find('{'); open != std::string::npos; open = q.prompt.find('{', open + 1)) {
    const auto close = q.prompt.find('}', open);
    if (close == std::string::npos) break;
    const auto body = std::string_view(q.prompt).substr(open + 1, close - open - 1);
    if (!body.empty() && body.find_first_of(" \n{") == std::string_view::npos) fail("unresolved placeholder");
  }
}

}  // namespace relbench
