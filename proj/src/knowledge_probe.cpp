#include "relbench/knowledge_probe.hpp"

#include "relbench/error.hpp"
#include "relbench/template.hpp"

#include <algorithm>
#include <set>

namespace relbench {

namespace {

const std::string& clause_for(const std::vector<std::pair<std::string, std::string>>& clauses,
                              const std::string& attribute, std::string_view kind) {
  for (const auto& [attr, text] : clauses) {
    if (attr == attribute) return text;
  }
  throw ConfigError("probe template has no " + std::string(kind) + " clause for '" + attribute + "'");
}

void require_complete(const Schema& schema, const Record& record, const FunctionalDependency& fd) {
  fd.validate(schema);
  for (const auto* side : {&fd.lhs, &fd.rhs}) {
    for (const auto& a : *side) {
      if (record[schema.require(a)].is_null()) {
        throw PreconditionError("cannot probe a record with NULL " + a);
      }
    }
  }
}

std::string render(const std::string& text, const Schema& schema, const Record& record) {
  return render_template(text, [&](std::string_view name) -> std::optional<std::string> {
    auto i = schema.index_of(name);
    if (!i || record[*i].is_null()) return std::nullopt;
    return record[*i].text();
  });
}

}  // namespace

std::string build_binary_probe(const Schema& schema, const Record& record, const FunctionalDependency& fd,
                               const ProbeTemplate& tmpl) {
  require_complete(schema, record, fd);
  std::string out = render(tmpl.entity, schema, record);
  for (const auto& a : fd.rhs) out += " " + render(clause_for(tmpl.chained, a, "chained"), schema, record);
  return out;
}

std::vector<std::string> build_mc_probes(const Schema& schema, const Record& record, const FunctionalDependency& fd,
                                         const ProbeTemplate& tmpl) {
  require_complete(schema, record, fd);
  std::vector<std::string> out{render(tmpl.entity, schema, record)};
  for (const auto& a : fd.rhs) out.push_back(render(clause_for(tmpl.standalone, a, "standalone"), schema, record));
  return out;
}

bool evaluate_probe(const std::vector<std::string>& responses, ProbeMode mode, std::size_t questions) {
  if (responses.empty()) throw PreconditionError("evaluate_probe needs at least one response");
  if (mode == ProbeMode::mc) {
    if (responses.size() < questions) return false;
    return std::all_of(responses.begin(), responses.end(), [](const std::string& r) {
      auto sentences = split_sentences(r);
      return !sentences.empty() && first_polar_token(sentences.front()) == AnswerKind::yes;
    });
  }
  // Segments that carry no polar token (filler such as "Sure.") are ignored;
  // the i-th answered segment answers the i-th chained question.
  std::size_t answered = 0;
  for (const auto& r : responses) {
    for (const auto& s : split_sentences(r)) {
      auto tok = first_polar_token(s);
      if (!tok) continue;
      if (*tok != AnswerKind::yes) return false;
      ++answered;
    }
  }
  return answered >= questions;
}

Json to_json(const KnowledgeRecord& k) {
  Json key = Json::object();
  for (const auto& [attr, value] : k.entity_key) key[attr] = value;
  return Json{{"model", k.model},     {"dataset", k.dataset}, {"family", k.family},
              {"entity_key", key},    {"known", k.known},     {"probe_prompts_hash", k.probe_prompts_hash}};
}

KnowledgeRecord knowledge_from_json(const Json& j) {
  try {
    KnowledgeRecord k;
    k.model = j.at("model").get<std::string>();
    k.dataset = j.at("dataset").get<std::string>();
    k.family = j.at("family").get<std::string>();
    for (const auto& [attr, value] : j.at("entity_key").items()) k.entity_key.emplace_back(attr, value.get<std::string>());
    k.known = j.at("known").get<bool>();
    k.probe_prompts_hash = j.value("probe_prompts_hash", "");
    return k;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed knowledge record: ") + e.what());
  }
}

std::string_view to_string(FilterMode m) {
  switch (m) {
    case FilterMode::per_model: return "per_model";
    case FilterMode::common: return "common";
    case FilterMode::all: return "all";
  }
  return "?";
}

FilterMode parse_filter_mode(std::string_view s) {
  if (s == "per_model" || s == "per-model") return FilterMode::per_model;
  if (s == "common") return FilterMode::common;
  if (s == "all") return FilterMode::all;
  throw ConfigError("unknown filter mode '" + std::string(s) + "'");
}

KnowledgeBase::KnowledgeBase(const std::vector<KnowledgeRecord>& records) {
  for (const auto& r : records) add(r);
}

std::string KnowledgeBase::index_key(std::string_view model, std::string_view dataset, std::string_view family,
                                     const EntityKey& key) {
  std::string out;
  for (auto part : {model, dataset, family}) {
    out.append(part);
    out.push_back('\x1e');
  }
  for (const auto& [attr, value] : key) {
    out += attr;
    out.push_back('\x1f');
    out += value;
    out.push_back('\x1f');
  }
  return out;
}

void KnowledgeBase::add(const KnowledgeRecord& record) {
  records_[index_key(record.model, record.dataset, record.family, record.entity_key)] = record;
}

std::optional<bool> KnowledgeBase::known(std::string_view model, std::string_view dataset, std::string_view family,
                                         const EntityKey& key) const {
  auto it = records_.find(index_key(model, dataset, family, key));
  if (it == records_.end()) return std::nullopt;
  return it->second.known;
}

std::size_t KnowledgeBase::known_count(std::string_view model, std::string_view dataset) const {
  std::set<std::string> entities;
  for (const auto& [k, r] : records_) {
    if (r.known && r.model == model && r.dataset == dataset) entities.insert(r.family + "\x1e" + to_string(r.entity_key));
  }
  return entities.size();
}

std::vector<KnowledgeRecord> KnowledgeBase::records() const {
  std::vector<KnowledgeRecord> out;
  for (const auto& [k, r] : records_) out.push_back(r);
  return out;
}

std::vector<VerifiedResponse> knowledge_filter(const std::vector<VerifiedResponse>& verified, FilterMode mode,
                                               const KnowledgeBase& knowledge, std::size_t min_known) {
  if (mode == FilterMode::all) return verified;
  auto lookup = [&](const std::string& model, const VerifiedResponse& v) {
    auto k = knowledge.known(model, v.dataset, v.family, v.entity_key);
    if (!k) {
      throw CoverageError("no knowledge record for model " + model + ", dataset " + v.dataset + ", " + v.family +
                          " entity " + to_string(v.entity_key));
    }
    return *k;
  };

  std::vector<VerifiedResponse> out;
  if (mode == FilterMode::per_model) {
    for (const auto& v : verified) {
      if (lookup(v.model, v)) out.push_back(v);
    }
    return out;
  }

  // Voting models per dataset: those present in the responses that know
  // enough entities for their numbers to mean anything.
  std::map<std::string, std::vector<std::string>> voters;
  {
    std::map<std::string, std::set<std::string>> models;
    for (const auto& v : verified) models[v.dataset].insert(v.model);
    for (const auto& [dataset, ms] : models) {
      for (const auto& m : ms) {
        if (knowledge.known_count(m, dataset) >= min_known) voters[dataset].push_back(m);
      }
    }
  }
  for (const auto& v : verified) {
    const auto& vs = voters[v.dataset];
    if (vs.empty()) continue;
    if (std::all_of(vs.begin(), vs.end(), [&](const std::string& m) { return lookup(m, v); })) out.push_back(v);
  }
  return out;
}

}  // namespace relbench
