#include "relbench/verifier.hpp"

#include "relbench/error.hpp"
#include "relbench/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace relbench {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '\'' || c >= 0x80; }

// Lowercase ASCII word tokens with their byte offsets.
struct Token {
  std::string text;
  std::size_t pos;
};

std::vector<Token> words(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !is_word_char(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && is_word_char(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back({text::to_lower_ascii(s.substr(start, i - start)), start});
  }
  return out;
}

std::optional<Answer> find_option_reference(std::string_view sentence, const McBody& mc) {
  const auto toks = words(sentence);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].text == "option" && i + 1 < toks.size()) {
      const auto& num = toks[i + 1].text;
      if (!num.empty() && std::all_of(num.begin(), num.end(), [](unsigned char c) { return std::isdigit(c); }) &&
          num.size() < 4) {
        const int k = std::stoi(num);
        if (k < 1 || k > mc.option_count()) return Answer::unparseable();
        if (k == mc.nota_index()) return Answer::nota();
        return Answer::nth(k);
      }
    }
    if (mc.has_nota && toks[i].text == "none" && i + 3 < toks.size() && toks[i + 1].text == "of" &&
        toks[i + 2].text == "the" && toks[i + 3].text == "above") {
      return Answer::nota();
    }
  }
  return std::nullopt;
}

// Option whose value is restated in the sentence and whose phrasing overlaps
// best. Ties give nothing.
std::optional<Answer> match_option_content(std::string_view sentence, const McBody& mc) {
  const auto said = text::match_tokens(sentence);
  const std::multiset<std::string> said_set(said.begin(), said.end());
  double best = 0.0;
  int best_k = 0;
  bool tie = false;
  for (std::size_t i = 0; i < mc.options.size(); ++i) {
    const auto value = text::match_tokens(mc.options[i].value);
    if (value.empty()) continue;
    const bool value_present =
        std::all_of(value.begin(), value.end(), [&](const std::string& t) { return said_set.count(t) > 0; });
    if (!value_present) continue;
    const auto phrase = text::match_tokens(mc.options[i].text);
    std::size_t overlap = 0;
    for (const auto& t : phrase) overlap += said_set.count(t) > 0;
    const double score = phrase.empty() ? 0.0 : static_cast<double>(overlap) / static_cast<double>(phrase.size());
    if (score > best) {
      best = score;
      best_k = static_cast<int>(i) + 1;
      tie = false;
    } else if (score == best && score > 0.0) {
      tie = true;
    }
  }
  if (best_k == 0 || tie || best < 0.5) return std::nullopt;
  return Answer::nth(best_k);
}

std::optional<AnswerKind> answer_is_phrase(std::string_view text) {
  const auto toks = words(text);
  std::optional<AnswerKind> last;
  for (std::size_t i = 0; i + 3 < toks.size(); ++i) {
    if (toks[i].text == "the" && toks[i + 1].text == "answer" && toks[i + 2].text == "is") {
      if (toks[i + 3].text == "yes") last = AnswerKind::yes;
      if (toks[i + 3].text == "no") last = AnswerKind::no;
    }
  }
  return last;
}

// Position of a form token in the text tokens, allowing initials.
bool token_matches(const std::string& text_tok, const std::string& form_tok, bool& full) {
  if (text_tok == form_tok) {
    full = true;
    return true;
  }
  const bool text_initial = text_tok.size() == 1 && std::isalpha(static_cast<unsigned char>(text_tok[0]));
  const bool form_initial = form_tok.size() == 1 && std::isalpha(static_cast<unsigned char>(form_tok[0]));
  if ((text_initial || form_initial) && !text_tok.empty() && !form_tok.empty() && text_tok[0] == form_tok[0]) {
    return true;
  }
  return false;
}

bool matches_from(const std::vector<std::string>& text, const std::vector<std::string>& form, std::size_t ti,
                  std::size_t fi, bool any_full) {
  if (fi == form.size()) return any_full;
  const std::size_t limit = fi == 0 ? text.size() : std::min(text.size(), ti + 3);
  for (std::size_t t = ti; t < limit; ++t) {
    bool full = false;
    if (token_matches(text[t], form[fi], full) && matches_from(text, form, t + 1, fi + 1, any_full || full)) {
      return true;
    }
  }
  return false;
}

}  // namespace

bool RationaleCheck::all_hit() const {
  return std::all_of(hop_hits.begin(), hop_hits.end(), [](bool b) { return b; });
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    auto t = text::trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n' || c == '\r') {
      flush();
      continue;
    }
    cur.push_back(c);
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
      flush();
    }
  }
  flush();
  return out;
}

std::optional<AnswerKind> first_polar_token(std::string_view sentence) {
  // Curly apostrophes ("don\u2019t") are common in model output.
  std::string plain(sentence);
  for (auto pos = plain.find("\xE2\x80\x99"); pos != std::string::npos; pos = plain.find("\xE2\x80\x99", pos)) {
    plain.replace(pos, 3, "'");
  }
  const auto toks = words(plain);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i].text;
    if (t == "yes") return AnswerKind::yes;
    if (t == "unsure") return AnswerKind::unsure;
    if (t == "not" && i + 1 < toks.size() && toks[i + 1].text == "sure") return AnswerKind::unsure;
    if ((t == "don't" || t == "dont") && i + 1 < toks.size() && toks[i + 1].text == "know") {
      return AnswerKind::unsure;
    }
    if (t == "do" && i + 2 < toks.size() && toks[i + 1].text == "not" && toks[i + 2].text == "know") {
      return AnswerKind::unsure;
    }
    if (t == "no") return AnswerKind::no;
  }
  return std::nullopt;
}

Answer parse_answer(std::string_view text, const Question& question) {
  const auto sentences = split_sentences(text);
  if (sentences.empty()) return Answer::unparseable();
  const std::string& first = sentences.front();

  if (question.qtype == QuestionType::multiple_choice && question.mc) {
    if (auto ref = find_option_reference(first, *question.mc)) return *ref;
    if (auto polar = first_polar_token(first); polar == AnswerKind::unsure) return Answer::unsure();
    if (auto content = match_option_content(first, *question.mc)) return *content;
    return Answer::unparseable();
  }

  if (auto polar = first_polar_token(first)) return Answer{*polar, 0};
  if (auto phrase = answer_is_phrase(text)) return Answer{*phrase, 0};
  return Answer::unparseable();
}

KeywordMatch match_keyword(std::string_view text, const KeywordForms& forms) {
  const auto toks = text::match_tokens(text);
  for (const auto& form : forms) {
    const auto ft = text::match_tokens(form);
    if (ft.empty()) continue;
    if (matches_from(toks, ft, 0, 0, false)) return {true, form};
  }
  return {};
}

std::string report_column(const Question& question) {
  std::string col(short_label(question.qtype));
  if (is_multihop(question.qtype) && !question.chain.empty()) col += "[" + question.chain + "]";
  const auto at = question.id.rfind("@nota=");
  if (at != std::string::npos) col += question.id.substr(at);
  return col;
}

VerifiedResponse verify(const Question& question, std::string_view response_text, std::string_view model) {
  if (static_cast<int>(question.gold.hop_keywords.size()) != question.hop_count) {
    throw IntegrityError("question " + question.id + " has " + std::to_string(question.gold.hop_keywords.size()) +
                         " keyword sets for " + std::to_string(question.hop_count) + " hops");
  }
  VerifiedResponse v;
  v.question_id = question.id;
  v.model = model;
  v.answer = parse_answer(response_text, question);
  v.abstained = v.answer.kind == AnswerKind::unsure || v.answer.kind == AnswerKind::unparseable;
  v.answer_correct = !v.abstained && v.answer == question.gold.expected;
  for (const auto& forms : question.gold.hop_keywords) {
    auto m = match_keyword(response_text, forms);
    v.rationale.hop_hits.push_back(m.hit);
    v.rationale.matched_forms.push_back(m.form);
  }
  v.dataset = question.dataset;
  v.qtype = question.qtype;
  v.hop_count = question.hop_count;
  v.family = question_family(question);
  v.column = report_column(question);
  v.entity_key = question.entity_key;
  return v;
}

Json to_json(const VerifiedResponse& v) {
  Json key = Json::object();
  for (const auto& [attr, value] : v.entity_key) key[attr] = value;
  return Json{{"question_id", v.question_id},
              {"model", v.model},
              {"answer_kind", to_string(v.answer)},
              {"answer_correct", v.answer_correct},
              {"abstained", v.abstained},
              {"hop_hits", v.rationale.hop_hits},
              {"matched_forms", v.rationale.matched_forms},
              {"dataset", v.dataset},
              {"qtype", to_string(v.qtype)},
              {"hop_count", v.hop_count},
              {"family", v.family},
              {"column", v.column},
              {"entity_key", key}};
}

VerifiedResponse verified_from_json(const Json& j) {
  try {
    VerifiedResponse v;
    v.question_id = j.at("question_id").get<std::string>();
    v.model = j.at("model").get<std::string>();
    v.answer = parse_answer_label(j.at("answer_kind").get<std::string>());
    v.answer_correct = j.at("answer_correct").get<bool>();
    v.abstained = j.at("abstained").get<bool>();
    v.rationale.hop_hits = j.at("hop_hits").get<std::vector<bool>>();
    v.rationale.matched_forms = j.at("matched_forms").get<std::vector<std::string>>();
    v.dataset = j.at("dataset").get<std::string>();
    v.qtype = parse_question_type(j.at("qtype").get<std::string>());
    v.hop_count = j.at("hop_count").get<int>();
    v.family = j.at("family").get<std::string>();
    v.column = j.at("column").get<std::string>();
    for (const auto& [attr, value] : j.at("entity_key").items()) v.entity_key.emplace_back(attr, value.get<std::string>());
    return v;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed verified record: ") + e.what());
  }
}

}  // namespace relbench
