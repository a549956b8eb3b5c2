#include "relbench/question_gen.hpp"

#include "relbench/hash.hpp"
#include "relbench/template.hpp"
#include "relbench/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace relbench {

namespace {

std::string_view qtype_slug(QuestionType t) {
  switch (t) {
    case QuestionType::binary_basic: return "bn-basic";
    case QuestionType::binary_negated: return "bn-negated";
    case QuestionType::multiple_choice: return "mc";
    case QuestionType::multihop_basic: return "mh-basic";
    case QuestionType::multihop_negated: return "mh-negated";
  }
  return "?";
}

EntityKey entity_key_of(const Schema& schema, const Record& rec, const std::vector<std::string>& attrs) {
  EntityKey key;
  for (const auto& a : attrs) key.emplace_back(a, rec[schema.require(a)].text());
  return key;
}

std::string key_values(const EntityKey& key) {
  std::string out;
  for (const auto& [attr, value] : key) {
    if (!out.empty()) out += " | ";
    out += value;
  }
  return out;
}

bool any_null(const Record& rec, const std::vector<std::size_t>& idx) {
  return std::any_of(idx.begin(), idx.end(), [&](std::size_t i) { return rec[i].is_null(); });
}

// Records taking part in an FD conflict. Empty when the FD holds.
std::unordered_set<std::size_t> conflicting_records(const Relation& relation, const FunctionalDependency& fd,
                                                    ViolationPolicy policy) {
  auto report = check_fd(relation, fd);
  std::unordered_set<std::size_t> out;
  if (report.empty()) return out;
  if (policy == ViolationPolicy::refuse) {
    throw IntegrityError("FD " + to_string(fd) + " does not hold on " + relation.name() + ": " + report.summary());
  }
  spdlog::warn("FD {} does not hold on {} ({} conflicts); conflicting records are skipped", to_string(fd),
               relation.name(), report.size());
  for (const auto& v : report.violations) {
    const auto& c = std::get<FdConflict>(v);
    out.insert(c.record_a);
    out.insert(c.record_b);
  }
  return out;
}

std::set<std::string> decade_rendered(const std::string& text) {
  std::set<std::string> out;
  for (const auto& p : placeholders(text)) {
    if (p.filter == "decade") out.insert(p.name);
  }
  return out;
}

void require_placeholders_within(const std::string& text, const std::set<std::string>& allowed,
                                 std::string_view what) {
  for (const auto& p : placeholders(text)) {
    if (!allowed.count(p.name)) {
      throw ConfigError("template placeholder '{" + p.name + "}' is not " + std::string(what) + ": " + text);
    }
  }
}

std::string render_from_record(const std::string& text, const Schema& schema, const Record& rec) {
  return render_template(text, [&](std::string_view name) -> std::optional<std::string> {
    auto i = schema.index_of(name);
    if (!i || rec[*i].is_null()) return std::nullopt;
    return rec[*i].text();
  });
}

// Assigns "#k" suffixes to repeated base ids, then sorts by id.
void finalize(std::vector<Question>& qs, std::vector<std::string>& bases) {
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const int n = ++seen[bases[i] + "\x1f" + std::to_string(qs[i].variant_index)];
    if (n > 1) {
      auto& id = qs[i].id;
      const auto slash = id.rfind("/v");
      const bool has_variant = qs[i].qtype == QuestionType::multiple_choice && slash != std::string::npos;
      const std::string suffix = "#" + std::to_string(n);
      if (has_variant) id.insert(slash, suffix);
      else id += suffix;
    }
  }
  std::sort(qs.begin(), qs.end(), [](const Question& a, const Question& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < qs.size(); ++i) {
    if (qs[i].id == qs[i - 1].id) throw IntegrityError("duplicate question id " + qs[i].id);
  }
}

void append_forms(KeywordForms& into, const KeywordForms& forms) {
  for (const auto& f : forms) {
    if (std::find(into.begin(), into.end(), f) == into.end()) into.push_back(f);
  }
}

}  // namespace

KeywordForms surface_forms(const Attribute& attribute, const Value& value, bool with_decade) {
  KeywordForms out{value.text()};
  if (attribute.kind == AttributeKind::year && with_decade) {
    if (auto d = decade_of(value.text())) out.push_back(*d);
  }
  if (attribute.person_name && attribute.kind == AttributeKind::text) {
    const auto& t = value.text();
    const auto comma = t.find(',');
    if (comma != std::string::npos && t.find(',', comma + 1) == std::string::npos) {
      auto family = text::trim(std::string_view(t).substr(0, comma));
      auto given = text::trim(std::string_view(t).substr(comma + 1));
      if (!family.empty() && !given.empty()) out.push_back(given + " " + family);
    }
  }
  return out;
}

Generated gen_binary(std::string_view dataset, const Relation& relation, const FunctionalDependency& fd,
                     const QuestionTemplate& tmpl, Polarity polarity, ViolationPolicy policy) {
  const QuestionType want =
      polarity == Polarity::basic ? QuestionType::binary_basic : QuestionType::binary_negated;
  if (tmpl.qtype != want || tmpl.text.empty()) {
    throw ConfigError("no " + std::string(to_string(want)) + " template for dataset " + std::string(dataset));
  }
  const Schema& schema = relation.schema();
  fd.validate(schema);
  require_placeholders_within(tmpl.text, std::set<std::string>(fd.lhs.begin(), fd.lhs.end()),
                              "an lhs attribute");
  const auto conflicts = conflicting_records(relation, fd, policy);
  const auto lhs = schema.require_all(fd.lhs);
  const auto rhs = schema.require_all(fd.rhs);

  Generated out;
  std::vector<std::string> bases;
  for (std::size_t r = 0; r < relation.size(); ++r) {
    const Record& rec = relation.records()[r];
    EntityKey key = entity_key_of(schema, rec, fd.lhs);
    auto skip = [&](std::string reason) {
      out.skipped.push_back({std::string(dataset), "binary", key, r, std::move(reason)});
    };
    if (any_null(rec, lhs)) { skip("NULL in lhs"); continue; }
    if (any_null(rec, rhs)) { skip("NULL in rhs"); continue; }
    if (conflicts.count(r)) { skip("record violates " + to_string(fd)); continue; }

    Question q;
    q.id = std::string(dataset) + "/" + std::string(qtype_slug(want)) + "/" + key_values(key);
    q.dataset = dataset;
    q.qtype = want;
    q.prompt = render_from_record(tmpl.text, schema, rec);
    q.system_prompt = kBinarySystemPrompt;
    q.gold.expected = polarity == Polarity::basic ? Answer::yes() : Answer::no();
    KeywordForms forms;
    for (std::size_t i : rhs) append_forms(forms, surface_forms(schema.attributes()[i], rec[i]));
    q.gold.hop_keywords = {forms};
    q.entity_key = std::move(key);
    bases.push_back(q.id);
    out.questions.push_back(std::move(q));
  }
  finalize(out.questions, bases);
  return out;
}

Generated gen_multiple_choice(std::string_view dataset, const Relation& relation,
                              const std::vector<FunctionalDependency>& option_fds, const QuestionTemplate& tmpl,
                              std::uint64_t seed, ViolationPolicy policy) {
  if (tmpl.qtype != QuestionType::multiple_choice) {
    throw ConfigError("no multiple_choice template for dataset " + std::string(dataset));
  }
  if (option_fds.empty()) throw ConfigError("multiple-choice generation needs at least one option FD");
  if (tmpl.stems.size() != 3) throw ConfigError("multiple-choice template needs exactly 3 stems");
  const Schema& schema = relation.schema();

  std::vector<std::string> lhs_names;
  std::vector<std::string> option_attrs;
  std::unordered_set<std::size_t> conflicts;
  for (const auto& fd : option_fds) {
    fd.validate(schema);
    for (const auto& a : fd.lhs) {
      if (std::find(lhs_names.begin(), lhs_names.end(), a) == lhs_names.end()) lhs_names.push_back(a);
    }
    for (const auto& a : fd.rhs) option_attrs.push_back(a);
    auto c = conflicting_records(relation, fd, policy);
    conflicts.insert(c.begin(), c.end());
  }
  std::vector<std::string> listed;
  for (const auto& o : tmpl.options) {
    if (o.phrasings.size() != 3) throw ConfigError("option '" + o.attribute + "' needs exactly 3 phrasings");
    for (const auto& p : o.phrasings) require_placeholders_within(p, {"value"}, "{value}");
    listed.push_back(o.attribute);
  }
  {
    auto a = listed, b = option_attrs;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b || std::adjacent_find(a.begin(), a.end()) != a.end()) {
      throw ConfigError("multiple-choice options must list each option-FD rhs attribute exactly once");
    }
  }
  const std::set<std::string> lhs_set(lhs_names.begin(), lhs_names.end());
  for (const auto& s : tmpl.stems) require_placeholders_within(s, lhs_set, "an option-FD lhs attribute");

  const auto lhs_idx = schema.require_all(lhs_names);
  const auto opt_idx = schema.require_all(listed);
  const std::size_t k = opt_idx.size();

  // Distinct non-NULL values per option attribute, ordered by key.
  std::vector<std::map<std::string, Value>> distinct(k);
  for (const auto& rec : relation.records()) {
    for (std::size_t o = 0; o < k; ++o) {
      const Value& v = rec[opt_idx[o]];
      if (!v.is_null()) distinct[o].emplace(v.key(), v);
    }
  }

  Generated out;
  struct Eligible {
    std::size_t record;
    EntityKey key;
    std::string base;
  };
  std::vector<Eligible> eligible;
  for (std::size_t r = 0; r < relation.size(); ++r) {
    const Record& rec = relation.records()[r];
    EntityKey key = entity_key_of(schema, rec, lhs_names);
    auto skip = [&](std::string reason) {
      out.skipped.push_back({std::string(dataset), "mc", key, r, std::move(reason)});
    };
    if (any_null(rec, lhs_idx)) { skip("NULL in lhs"); continue; }
    if (any_null(rec, opt_idx)) { skip("NULL in an option attribute"); continue; }
    if (conflicts.count(r)) { skip("record violates an option FD"); continue; }
    std::string base = std::string(dataset) + "/mc/" + key_values(key);
    eligible.push_back({r, std::move(key), std::move(base)});
  }
  // Rank by entity key (stable for duplicates) so the rotation does not
  // depend on file order.
  std::stable_sort(eligible.begin(), eligible.end(),
                   [](const Eligible& a, const Eligible& b) { return a.base < b.base; });

  std::map<std::string, int> occurrence;
  std::vector<std::string> bases;
  const std::size_t offset = static_cast<std::size_t>(seed % k);
  for (std::size_t rank = 0; rank < eligible.size(); ++rank) {
    const auto& e = eligible[rank];
    const Record& rec = relation.records()[e.record];
    const int occ = ++occurrence[e.base];
    const std::string draw_label = e.base + "#" + std::to_string(occ);

    std::optional<std::size_t> falsified;
    std::vector<const Value*> donors;
    for (std::size_t t = 0; t < k && !falsified; ++t) {
      const std::size_t o = (rank + offset + t) % k;
      donors.clear();
      for (const auto& [key, v] : distinct[o]) {
        if (key != rec[opt_idx[o]].key()) donors.push_back(&v);
      }
      if (!donors.empty()) falsified = o;
    }
    if (!falsified) {
      out.skipped.push_back({std::string(dataset), "mc", e.key, e.record, "no donor value for any option"});
      continue;
    }
    SeededRng rng(derive_seed(seed, draw_label));
    const Value& fake = *donors[rng.below(donors.size())];
    const std::size_t fo = *falsified;
    const Attribute& fattr = schema.attributes()[opt_idx[fo]];

    for (int variant = 0; variant < 3; ++variant) {
      McBody body;
      body.stem = render_from_record(tmpl.stems[static_cast<std::size_t>(variant)], schema, rec);
      for (std::size_t o = 0; o < k; ++o) {
        McOption opt;
        opt.attribute = listed[o];
        opt.phrasing = tmpl.options[o].phrasings[static_cast<std::size_t>(variant)];
        opt.fabricated = o == fo;
        opt.value = opt.fabricated ? fake.text() : rec[opt_idx[o]].text();
        opt.text = render_template(opt.phrasing, [&](std::string_view) { return std::optional(opt.value); });
        body.options.push_back(std::move(opt));
      }
      Question q;
      q.id = e.base + "/v" + std::to_string(variant);
      q.dataset = dataset;
      q.qtype = QuestionType::multiple_choice;
      q.variant_index = variant;
      q.prompt = render_mc_prompt(body);
      q.system_prompt = kMcSystemPrompt;
      q.gold.expected = Answer::nth(static_cast<int>(fo) + 1);
      q.gold.hop_keywords = {surface_forms(fattr, rec[opt_idx[fo]])};
      q.gold.falsified_attribute = fattr.name;
      q.gold.true_value = rec[opt_idx[fo]].text();
      q.entity_key = e.key;
      q.mc = std::move(body);
      bases.push_back(e.base);
      out.questions.push_back(std::move(q));
    }
  }
  finalize(out.questions, bases);
  return out;
}

std::vector<Question> inject_nota(std::vector<Question> questions, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("NOTA fraction must lie in [0, 1]");
  for (const auto& q : questions) {
    if (q.qtype != QuestionType::multiple_choice || !q.mc) {
      throw QuestionTypeError("inject_nota needs multiple-choice questions, got " + q.id);
    }
    if (q.mc->has_nota) throw PreconditionError("question " + q.id + " already lists None of the above");
    if (!q.wrapping.empty()) throw PreconditionError("question " + q.id + " is already wrapped");
  }
  const std::size_t n = questions.size();
  const auto m = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return questions[a].id < questions[b].id; });
  SeededRng rng(derive_seed(seed, "nota"));
  rng.shuffle(order.begin(), order.end());

  std::vector<bool> relabel(n, false);
  for (std::size_t i = 0; i < m; ++i) relabel[order[i]] = true;

  for (std::size_t i = 0; i < n; ++i) {
    Question& q = questions[i];
    McBody& body = *q.mc;
    body.has_nota = true;
    if (relabel[i]) {
      for (auto& opt : body.options) {
        if (!opt.fabricated) continue;
        opt.fabricated = false;
        opt.value = *q.gold.true_value;
        opt.text = render_template(opt.phrasing, [&](std::string_view) { return std::optional(opt.value); });
      }
      q.gold.expected = Answer::nota();
    }
    q.prompt = render_mc_prompt(body);
    q.nota_fraction = fraction;
  }
  return questions;
}

Generated gen_multihop(std::string_view dataset, std::string_view chain_name, const std::vector<ChainLink>& chain,
                       const QuestionTemplate& tmpl, Polarity polarity, ViolationPolicy policy) {
  if (chain.empty()) throw CompositionError("empty multi-hop chain");
  const QuestionType want =
      polarity == Polarity::basic ? QuestionType::multihop_basic : QuestionType::multihop_negated;
  if (tmpl.qtype != want || tmpl.text.empty()) {
    throw ConfigError("no " + std::string(to_string(want)) + " template for chain " + std::string(chain_name));
  }
  if (chain.size() == 1) {
    QuestionTemplate single = tmpl;
    single.qtype = polarity == Polarity::basic ? QuestionType::binary_basic : QuestionType::binary_negated;
    return gen_binary(dataset, chain[0].relation, chain[0].fd, single, polarity, policy);
  }

  const std::string family = "multihop/" + std::string(chain_name);
  const auto& first = chain[0];
  first.fd.validate(first.relation.schema());

  Generated out;
  // Records of the first relation that cannot reach the end of the chain are
  // logged here, keyed by their position in the first relation.
  Relation current = first.relation;
  std::vector<std::size_t> origin(current.size());
  for (std::size_t i = 0; i < origin.size(); ++i) origin[i] = i;
  auto skip_rows = [&](const std::vector<std::size_t>& rows, const std::string& reason) {
    for (std::size_t r : rows) {
      const std::size_t src = origin[r];
      out.skipped.push_back({std::string(dataset), family,
                             entity_key_of(first.relation.schema(), first.relation.records()[src], first.fd.lhs),
                             src, reason});
    }
  };
  auto keep_rows = [&](const std::vector<std::size_t>& rows) {
    std::vector<Record> recs;
    std::vector<std::size_t> org;
    for (std::size_t r : rows) {
      recs.push_back(current.records()[r]);
      org.push_back(origin[r]);
    }
    current = Relation(current.schema(), std::move(recs));
    origin = std::move(org);
  };
  auto filter = [&](const std::vector<std::string>& attrs, const std::string& reason) {
    const auto idx = current.schema().require_all(attrs);
    std::vector<std::size_t> keep, drop;
    for (std::size_t r = 0; r < current.size(); ++r) {
      (any_null(current.records()[r], idx) ? drop : keep).push_back(r);
    }
    skip_rows(drop, reason);
    keep_rows(keep);
  };

  // Per-link FD conflicts.
  std::vector<std::unordered_set<std::size_t>> link_conflicts;
  for (const auto& link : chain) {
    link.fd.validate(link.relation.schema());
    link_conflicts.push_back(conflicting_records(link.relation, link.fd, policy));
  }
  if (!link_conflicts[0].empty()) {
    std::vector<std::size_t> keep, drop;
    for (std::size_t r = 0; r < current.size(); ++r) (link_conflicts[0].count(r) ? drop : keep).push_back(r);
    skip_rows(drop, "record violates " + to_string(first.fd));
    keep_rows(keep);
  }
  filter(first.fd.lhs, "NULL in lhs");

  // Joined names of every link's attributes.
  std::vector<std::map<std::string, std::string>> names(chain.size());
  for (const auto& a : first.relation.schema().attributes()) names[0][a.name] = a.name;
  std::vector<std::vector<std::string>> hop_attrs{first.fd.rhs};
  FunctionalDependency composed = first.fd;

  for (std::size_t i = 1; i < chain.size(); ++i) {
    const auto& prev = chain[i - 1];
    const auto& link = chain[i];
    if (!prev.fkc) throw CompositionError("chain link " + prev.relation.name() + " has no foreign key");
    const auto& fk = *prev.fkc;
    if (fk.child_relation != prev.relation.name() || fk.parent_relation != link.relation.name()) {
      throw CompositionError("foreign key " + fk.child_relation + " -> " + fk.parent_relation +
                             " does not connect " + prev.relation.name() + " to " + link.relation.name());
    }
    ForeignKeyConstraint joined_fk = fk;
    joined_fk.child_relation = current.name();
    for (auto& a : joined_fk.child_attrs) {
      auto it = names[i - 1].find(a);
      if (it == names[i - 1].end()) throw SchemaError("unknown attribute " + a + " in " + prev.relation.name());
      a = it->second;
    }
    Relation parent = link.relation;
    if (!link_conflicts[i].empty()) {
      // Parent records in conflict are dropped, which turns their children
      // into dangling references; filter those children first.
      std::vector<Record> recs;
      for (std::size_t r = 0; r < parent.size(); ++r) {
        if (!link_conflicts[i].count(r)) recs.push_back(parent.records()[r]);
      }
      parent = Relation(parent.schema(), std::move(recs));
    }
    composed = compose_fds(current.schema(), parent.schema(), composed, link.fd, joined_fk);
    for (const auto& a : parent.schema().attributes()) {
      names[i][a.name] = joined_attribute_name(current.schema(), parent.schema(), joined_fk, a.name);
    }
    filter(joined_fk.child_attrs, "NULL foreign key at hop " + std::to_string(i));
    if (!link_conflicts[i].empty()) {
      const auto fidx = current.schema().require_all(joined_fk.child_attrs);
      const auto pidx = parent.schema().require_all(joined_fk.parent_key_attrs);
      std::set<std::vector<std::string>> present;
      for (const auto& rec : parent.records()) {
        std::vector<std::string> k;
        for (auto p : pidx) k.push_back(rec[p].key());
        present.insert(k);
      }
      std::vector<std::size_t> keep, drop;
      for (std::size_t r = 0; r < current.size(); ++r) {
        std::vector<std::string> k;
        for (auto f : fidx) k.push_back(current.records()[r][f].key());
        (present.count(k) ? keep : drop).push_back(r);
      }
      skip_rows(drop, "referenced " + link.relation.name() + " record violates " + to_string(link.fd));
      keep_rows(keep);
    }
    std::vector<std::size_t> org = origin;
    current = join_fkc(current, parent, joined_fk);
    origin = std::move(org);  // joins keep child order and every row here has a non-NULL FK
    std::vector<std::string> hop;
    for (const auto& a : link.fd.rhs) hop.push_back(names[i].at(a));
    hop_attrs.push_back(std::move(hop));
  }
  filter(hop_attrs.back(), "NULL terminal value");

  std::set<std::string> allowed(first.fd.lhs.begin(), first.fd.lhs.end());
  allowed.insert(composed.rhs.begin(), composed.rhs.end());
  require_placeholders_within(tmpl.text, allowed, "a first-hop lhs or terminal attribute");
  const auto decade = decade_rendered(tmpl.text);

  const Schema& schema = current.schema();
  std::vector<std::string> bases;
  for (std::size_t r = 0; r < current.size(); ++r) {
    const Record& rec = current.records()[r];
    Question q;
    q.entity_key = entity_key_of(schema, rec, first.fd.lhs);
    q.id = std::string(dataset) + "/" + std::string(qtype_slug(want)) + "/" + std::string(chain_name) + "/" +
           key_values(q.entity_key);
    q.dataset = dataset;
    q.qtype = want;
    q.hop_count = static_cast<int>(chain.size());
    q.chain = chain_name;
    q.prompt = render_from_record(tmpl.text, schema, rec);
    q.system_prompt = kBinarySystemPrompt;
    q.gold.expected = polarity == Polarity::basic ? Answer::yes() : Answer::no();
    for (const auto& hop : hop_attrs) {
      KeywordForms forms;
      for (const auto& a : hop) {
        const auto idx = schema.require(a);
        append_forms(forms, surface_forms(schema.attributes()[idx], rec[idx], !decade.count(a)));
      }
      q.gold.hop_keywords.push_back(std::move(forms));
    }
    bases.push_back(q.id);
    out.questions.push_back(std::move(q));
  }
  finalize(out.questions, bases);
  return out;
}

}  // namespace relbench
