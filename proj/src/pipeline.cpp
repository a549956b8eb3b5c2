#include "relbench/pipeline.hpp"

#include "relbench/error.hpp"
#include "relbench/hash.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace relbench {

namespace fs = std::filesystem;

namespace {

constexpr QuestionType kAllTypes[] = {QuestionType::binary_basic, QuestionType::binary_negated,
                                      QuestionType::multiple_choice, QuestionType::multihop_basic,
                                      QuestionType::multihop_negated};

const char* const kQuestions = "questions.jsonl";
const char* const kSkipped = "skipped.jsonl";
const char* const kKnowledge = "knowledge.jsonl";
const char* const kResponses = "responses.jsonl";
const char* const kVerified = "verified.jsonl";

std::string fmt_g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_hash(const fs::path& path) { return sha256_hex(read_bytes(path)); }

std::string short_provider_name(ProviderKind k) {
  std::string s(to_string(k));
  if (s.starts_with("mock_")) s.erase(0, 5);
  if (s == "http_chat") s = "http";
  return s;
}

Json entity_json(const EntityKey& key) {
  Json j = Json::object();
  for (const auto& [attr, value] : key) j[attr] = value;
  return j;
}

Json to_json(const SkippedRecord& s) {
  return {{"dataset", s.dataset},
          {"family", s.family},
          {"entity_key", entity_json(s.entity_key)},
          {"record_index", s.record_index},
          {"reason", s.reason}};
}

Json read_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  try {
    Json j = Json::parse(line);
    if (!j.contains("_header")) throw ParseError(path.string() + " has no header line");
    return j.at("_header");
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": malformed header: " + e.what());
  }
}

// The input a stage reads must come from the same configuration.
JsonlFile read_input(const std::string& stage, const fs::path& path, const std::string& producer,
                     const std::string& expected_hash) {
  if (!fs::exists(path)) {
    throw StageError(stage, "missing " + path.filename().string() + "; run '" + producer + "' first");
  }
  JsonlFile f = read_jsonl(path);
  if (f.header.value("stage", "") != producer || f.header.value("config_hash", "") != expected_hash) {
    throw StageError(stage, path.filename().string() +
                                " was written under a different configuration; refusing to mix outputs "
                                "(use a fresh --out directory)");
  }
  return f;
}

// An existing output may only be replaced or extended by the same
// configuration.
void guard_output(const std::string& stage, const fs::path& path, const std::string& expected_hash) {
  if (!fs::exists(path)) return;
  const Json h = read_header(path);
  if (h.value("stage", "") != stage || h.value("config_hash", "") != expected_hash) {
    throw StageError(stage, "existing " + path.filename().string() +
                                " was written under a different configuration; refusing to mix outputs "
                                "(use a fresh --out directory)");
  }
}

// Content of the responses that verification depends on. Timestamps and
// latencies are left out so that a rerun from cache verifies identically.
std::string responses_hash(const std::vector<Json>& rows) {
  std::vector<std::string> parts;
  for (const auto& r : rows) {
    parts.push_back(sha256_fields({r.at("question_id").get<std::string>(), r.at("model").get<std::string>(),
                                   r.at("text").get<std::string>()}));
  }
  std::sort(parts.begin(), parts.end());
  std::string joined;
  for (const auto& p : parts) joined += p;
  return sha256_hex(joined);
}

bool row_less(const Json& a, const Json& b) {
  return std::forward_as_tuple(a.at("question_id").get_ref<const std::string&>(),
                               a.at("model").get_ref<const std::string&>()) <
         std::forward_as_tuple(b.at("question_id").get_ref<const std::string&>(),
                               b.at("model").get_ref<const std::string&>());
}

Json response_row(const std::string& id, const std::string& model, const ChatResponse& r) {
  return {{"question_id", id},          {"model", model},
          {"text", r.text},             {"cached", r.cached},
          {"latency_ms", r.latency_ms}, {"timestamp", r.timestamp}};
}

// First probe-relation record agreeing with every key attribute the
// relation has.
const Record* find_record(const Relation& rel, const EntityKey& key) {
  std::vector<std::pair<std::size_t, std::string>> wanted;
  for (const auto& [attr, value] : key) {
    if (auto i = rel.schema().index_of(attr)) wanted.emplace_back(*i, value);
  }
  if (wanted.empty()) return nullptr;
  for (const auto& rec : rel.records()) {
    bool ok = true;
    for (const auto& [i, value] : wanted) {
      if (rec[i].is_null() || rec[i].text() != value) {
        ok = false;
        break;
      }
    }
    if (ok) return &rec;
  }
  return nullptr;
}

}  // namespace

// RunConfig

void RunConfig::validate() const {
  if (manifest.empty()) throw ConfigError("a manifest is required");
  if (out_dir.empty()) throw ConfigError("an output directory is required");
  if (concurrency < 1) throw ConfigError("concurrency must be at least 1");
  if (max_tokens < 1) throw ConfigError("max_tokens must be at least 1");
  std::set<double> seen;
  for (double f : nota_fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("NOTA fraction " + fmt_g(f) + " lies outside [0, 1]");
    if (!seen.insert(f).second) throw ConfigError("NOTA fraction " + fmt_g(f) + " given twice");
  }
  const bool mc = qtypes.empty() ||
                  std::find(qtypes.begin(), qtypes.end(), QuestionType::multiple_choice) != qtypes.end();
  if (!nota_fractions.empty() && !mc) throw ConfigError("NOTA fractions need multiple-choice questions");
  // An implicit MC selection is checked against the manifests by Pipeline.
  if (!qtypes.empty() && mc && !seed) throw ConfigError("--seed is required for multiple-choice generation");
  if (!nota_fractions.empty() && !seed) throw ConfigError("--seed is required for NOTA injection");
  if (augment && (few_shot || cot)) throw ConfigError("--augment cannot be combined with --few-shot or --cot");
  if (provider == ProviderKind::http_chat && models.empty()) {
    throw ConfigError("the http provider needs at least one --model");
  }
  std::set<std::string> names(models.begin(), models.end());
  if (names.size() != models.size()) throw ConfigError("a model is listed twice");
}

std::vector<std::string> RunConfig::effective_models() const {
  if (!models.empty()) return models;
  return {short_provider_name(provider)};
}

// JSONL files

Json stage_header(const std::string& stage, const std::string& config_hash, const std::string& input_hash) {
  return {{"stage", stage}, {"config_hash", config_hash}, {"input_hash", input_hash}};
}

JsonlFile read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  JsonlFile f;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (lineno == 1) {
      if (!j.is_object() || !j.contains("_header")) throw ParseError(path.string() + " has no header line");
      f.header = j.at("_header");
    } else {
      f.rows.push_back(std::move(j));
    }
  }
  if (lineno == 0) throw ParseError(path.string() + " is empty");
  return f;
}

void write_jsonl(const fs::path& path, const Json& header, const std::vector<Json>& rows) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << Json{{"_header", header}}.dump() << "\n";
    for (const auto& r : rows) out << r.dump() << "\n";
    out.flush();
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

// Pipeline

Pipeline::Pipeline(RunConfig config) : config_(std::move(config)) {
  config_.validate();
  auto all = load_manifests(config_.manifest);
  if (config_.datasets.empty()) {
    manifests_ = std::move(all);
  } else {
    for (const auto& name : config_.datasets) {
      auto it = std::find_if(all.begin(), all.end(), [&](const auto& m) { return m.dataset == name; });
      if (it == all.end()) throw ConfigError("dataset '" + name + "' is not in " + config_.manifest.string());
      manifests_.push_back(*it);
    }
  }
  const bool mc = config_.qtypes.empty() || std::find(config_.qtypes.begin(), config_.qtypes.end(),
                                                      QuestionType::multiple_choice) != config_.qtypes.end();
  for (const auto& m : manifests_) {
    if (mc && m.multiple_choice && !config_.seed) {
      throw ConfigError("--seed is required: " + m.dataset + " generates multiple-choice questions");
    }
  }
  for (const auto& c : config_.chains) {
    bool found = false;
    for (const auto& m : manifests_) {
      for (const auto& spec : m.chains) found = found || spec.name == c;
    }
    if (!found) throw ConfigError("chain '" + c + "' is not defined by any selected dataset");
  }
}

ViolationPolicy Pipeline::policy_for(const DatasetManifest& m) const {
  return config_.on_violation.value_or(m.on_violation);
}

std::string Pipeline::config_hash(const std::string& stage) const {
  if (stage == "generate") {
    Json j;
    Json ms = Json::array();
    for (const auto& m : manifests_) {
      Json demos = Json::object();
      if (config_.few_shot || config_.cot) {
        for (const auto& [style, path] : m.demonstrations) {
          demos[std::string(to_string(style))] = fs::exists(path) ? file_hash(path) : "";
        }
      }
      ms.push_back({{"dataset", m.dataset},
                    {"content_hash", m.content_hash},
                    {"on_violation", policy_for(m) == ViolationPolicy::refuse ? "refuse" : "warn"},
                    {"demonstrations", demos}});
    }
    j["manifests"] = ms;
    Json types = Json::array();
    for (auto t : kAllTypes) {
      if (config_.qtypes.empty() || std::find(config_.qtypes.begin(), config_.qtypes.end(), t) != config_.qtypes.end()) {
        types.push_back(to_string(t));
      }
    }
    j["qtypes"] = types;
    j["chains"] = config_.chains;
    j["seed"] = config_.seed ? Json(*config_.seed) : Json();
    j["nota_fractions"] = config_.nota_fractions;
    j["few_shot"] = config_.few_shot;
    j["cot"] = config_.cot;
    j["augment"] = config_.augment && fs::exists(*config_.augment) ? Json(file_hash(*config_.augment)) : Json();
    return sha256_hex(j.dump());
  }
  if (stage == "probe" || stage == "ask" || stage == "verify") {
    Json j{{"generate", config_hash("generate")},
           {"provider", to_string(config_.provider)},
           {"models", config_.effective_models()},
           {"endpoint", config_.endpoint},
           {"script", !config_.script.empty() && fs::exists(config_.script) ? file_hash(config_.script) : ""},
           {"max_tokens", config_.max_tokens}};
    return sha256_hex(j.dump());
  }
  if (stage == "report") {
    Json j{{"ask", config_hash("ask")}, {"filter", to_string(config_.filter)}, {"min_known", config_.min_known}};
    return sha256_hex(j.dump());
  }
  throw ConfigError("unknown stage '" + stage + "'");
}

std::unique_ptr<Gateway> Pipeline::make_gateway() const {
  ProviderConfig pc;
  pc.kind = config_.provider;
  pc.endpoint = config_.endpoint;
  pc.api_key_env = config_.api_key_env;
  if (pc.endpoint.empty() && !manifests_.empty()) pc.endpoint = manifests_.front().endpoint;
  if (pc.api_key_env.empty() && !manifests_.empty()) pc.api_key_env = manifests_.front().api_key_env;
  pc.script_path = config_.script;
  pc.concurrency_limit = config_.concurrency;
  // One cache namespace per provider kind: mock replies depend on the kind,
  // not only on the prompt.
  const fs::path cache = config_.cache_dir.value_or(config_.out_dir / "cache") / short_provider_name(pc.kind);
  return std::make_unique<Gateway>(pc, ResponseCache(cache));
}

template <typename F>
void Pipeline::run_stage(const std::string& stage, F&& body) {
  spdlog::info("stage {}: start", stage);
  try {
    body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
  spdlog::info("stage {}: done", stage);
}

void Pipeline::validate() {
  run_stage("validate", [&] {
    Json out = Json::object();
    std::string refused;
    for (const auto& m : manifests_) {
      Json checks = Json::array();
      for (const auto& c : check_constraints(m)) {
        checks.push_back({{"kind", c.kind},
                          {"name", c.name},
                          {"description", c.description},
                          {"violations", c.report.size()},
                          {"summary", c.report.empty() ? "" : c.report.summary()}});
        if (c.report.empty()) continue;
        if (policy_for(m) == ViolationPolicy::refuse) {
          refused += "\n  " + m.dataset + " " + c.kind + " " + c.name + ": " + c.report.summary();
        } else {
          spdlog::warn("{}: {} {} does not hold ({} violations); continuing in warn mode", m.dataset, c.kind,
                       c.name, c.report.size());
        }
      }
      out[m.dataset] = checks;
    }
    fs::create_directories(config_.out_dir);
    std::ofstream f(config_.out_dir / "validation.json", std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write validation.json");
    f << out.dump(2) << "\n";
    if (!refused.empty()) throw StageError("validate", "constraints do not hold:" + refused);
  });
}

void Pipeline::generate() {
  run_stage("generate", [&] {
    const std::string hash = config_hash("generate");
    const fs::path qpath = config_.out_dir / kQuestions;
    guard_output("generate", qpath, hash);

    auto wanted = [&](QuestionType t) {
      return config_.qtypes.empty() || std::find(config_.qtypes.begin(), config_.qtypes.end(), t) != config_.qtypes.end();
    };
    auto chain_wanted = [&](const std::string& name) {
      return config_.chains.empty() || std::find(config_.chains.begin(), config_.chains.end(), name) != config_.chains.end();
    };

    std::vector<Question> questions;
    std::vector<SkippedRecord> skipped;
    auto take = [&](Generated g) {
      for (auto& q : g.questions) questions.push_back(std::move(q));
      for (auto& s : g.skipped) skipped.push_back(std::move(s));
    };
    std::optional<FilePassageSource> passages;
    if (config_.augment) passages.emplace(*config_.augment);

    for (const auto& m : manifests_) {
      const auto policy = policy_for(m);
      const std::size_t before = questions.size();

      if (m.binary) {
        const auto& nfd = m.fd(m.binary->fd);
        for (auto [t, pol, text] : {std::tuple{QuestionType::binary_basic, Polarity::basic, &m.binary->basic},
                                    std::tuple{QuestionType::binary_negated, Polarity::negated, &m.binary->negated}}) {
          if (!wanted(t)) continue;
          take(gen_binary(m.dataset, m.relation(nfd.relation), nfd.fd, {t, *text, {}, {}}, pol, policy));
        }
      }
      if (m.multiple_choice && wanted(QuestionType::multiple_choice)) {
        std::vector<FunctionalDependency> fds;
        const std::string rel = m.fd(m.multiple_choice->fds.front()).relation;
        for (const auto& name : m.multiple_choice->fds) {
          if (m.fd(name).relation != rel) throw ConfigError(m.dataset + ": MC fds span several relations");
          fds.push_back(m.fd(name).fd);
        }
        Generated g = gen_multiple_choice(m.dataset, m.relation(rel), fds, m.multiple_choice->tmpl, *config_.seed,
                                          policy);
        if (config_.nota_fractions.empty()) {
          take(std::move(g));
        } else {
          for (auto& s : g.skipped) skipped.push_back(s);
          for (double f : config_.nota_fractions) {
            const std::string suffix = "@nota=" + fmt_g(f);
            auto copies = inject_nota(g.questions, f, derive_seed(*config_.seed, m.dataset + "/nota" + suffix));
            for (auto& q : copies) {
              q.id += suffix;
              questions.push_back(std::move(q));
            }
          }
        }
      }
      for (const auto& spec : m.chains) {
        if (!chain_wanted(spec.name)) continue;
        const auto links = m.chain_links(spec);
        for (auto [t, pol, text] : {std::tuple{QuestionType::multihop_basic, Polarity::basic, &spec.basic},
                                    std::tuple{QuestionType::multihop_negated, Polarity::negated, &spec.negated}}) {
          if (!wanted(t)) continue;
          take(gen_multihop(m.dataset, spec.name, links, {t, *text, {}, {}}, pol, policy));
        }
      }

      // Prompt wrappers, one per question.
      std::optional<DemonstrationSet> fs_binary, fs_mc, cot;
      auto demo = [&](DemoStyle style) {
        auto it = m.demonstrations.find(style);
        if (it == m.demonstrations.end()) {
          throw ConfigError(m.dataset + " has no " + std::string(to_string(style)) + " demonstrations");
        }
        return load_demonstrations(it->second);
      };
      std::vector<Question> kept;
      for (std::size_t i = before; i < questions.size(); ++i) {
        Question q = std::move(questions[i]);
        const bool mh = is_multihop(q.qtype);
        if (config_.cot && mh) {
          if (!cot) cot = demo(DemoStyle::cot_multihop);
          q = with_cot(std::move(q), *cot);
        } else if (config_.few_shot) {
          auto& set = q.qtype == QuestionType::multiple_choice ? fs_mc : fs_binary;
          if (!set) set = demo(q.qtype == QuestionType::multiple_choice ? DemoStyle::few_shot_mc : DemoStyle::few_shot_binary);
          q = with_few_shot(std::move(q), *set);
        } else if (passages) {
          auto ps = passages->passages_for(q);
          if (ps.empty()) {
            skipped.push_back({q.dataset, question_family(q), q.entity_key, 0, "no passages for " + q.id});
            continue;
          }
          q = with_augmentation(std::move(q), ps);
        }
        kept.push_back(std::move(q));
      }
      questions.resize(before);
      for (auto& q : kept) questions.push_back(std::move(q));
    }

    std::sort(questions.begin(), questions.end(), [](const Question& a, const Question& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < questions.size(); ++i) {
      check_invariants(questions[i]);
      if (i && questions[i].id == questions[i - 1].id) throw IntegrityError("duplicate question id " + questions[i].id);
    }
    std::stable_sort(skipped.begin(), skipped.end(), [](const SkippedRecord& a, const SkippedRecord& b) {
      return std::tie(a.dataset, a.family, a.record_index, a.reason) <
             std::tie(b.dataset, b.family, b.record_index, b.reason);
    });

    std::vector<Json> rows, skipped_rows;
    for (const auto& q : questions) rows.push_back(to_json(q));
    for (const auto& s : skipped) skipped_rows.push_back(to_json(s));
    write_jsonl(qpath, stage_header("generate", hash, ""), rows);
    write_jsonl(config_.out_dir / kSkipped, stage_header("generate", hash, ""), skipped_rows);
    summary_.questions = questions.size();
    summary_.skipped = skipped.size();
    spdlog::info("generated {} questions, skipped {} records", questions.size(), skipped.size());
  });
}

void Pipeline::probe() {
  run_stage("probe", [&] {
    const std::string hash = config_hash("probe");
    const fs::path qpath = config_.out_dir / kQuestions;
    const fs::path kpath = config_.out_dir / kKnowledge;
    const JsonlFile qfile = read_input("probe", qpath, "generate", config_hash("generate"));
    guard_output("probe", kpath, hash);
    const std::string input_hash = file_hash(qpath);
    if (fs::exists(kpath) && read_header(kpath).value("input_hash", "") == input_hash) {
      summary_.knowledge_records = read_jsonl(kpath).rows.size();
      spdlog::info("knowledge.jsonl is current; nothing to probe");
      return;
    }

    // Distinct entities per dataset and family.
    std::map<std::tuple<std::string, std::string, std::string>, EntityKey> entities;
    for (const auto& row : qfile.rows) {
      Question q = question_from_json(row);
      entities.emplace(std::tuple{q.dataset, question_family(q), to_string(q.entity_key)}, q.entity_key);
    }

    struct Task {
      KnowledgeRecord record;
      ProbeMode mode = ProbeMode::binary;
      std::size_t questions = 0;
      std::size_t first = 0;  // index into requests
      std::size_t count = 0;
    };
    std::vector<Task> tasks;
    std::vector<ChatRequest> requests;
    for (const auto& model : config_.effective_models()) {
      for (const auto& [k, key] : entities) {
        const auto& [dataset, family, key_text] = k;
        const auto& m = *std::find_if(manifests_.begin(), manifests_.end(),
                                      [&](const auto& x) { return x.dataset == dataset; });
        Task t;
        t.record = {model, dataset, family, key, false, ""};
        if (!m.probe) throw ConfigError(dataset + " defines no knowledge probe");
        const Relation& rel = m.relation(m.probe->relation);
        const FunctionalDependency& fd = m.fd(m.probe->fd).fd;
        const Record* rec = find_record(rel, key);
        std::vector<std::string> prompts;
        if (rec == nullptr) {
          spdlog::warn("{}: no {} record for {}; counted as unknown", dataset, rel.name(), key_text);
        } else {
          try {
            if (family == "mc") {
              prompts = build_mc_probes(rel.schema(), *rec, fd, m.probe->tmpl);
              t.mode = ProbeMode::mc;
              t.questions = prompts.size();
            } else {
              prompts = {build_binary_probe(rel.schema(), *rec, fd, m.probe->tmpl)};
              t.mode = ProbeMode::binary;
              t.questions = 1 + fd.rhs.size();
            }
          } catch (const PreconditionError& e) {
            spdlog::warn("{}: cannot probe {}: {}; counted as unknown", dataset, key_text, e.what());
            prompts.clear();
          }
        }
        std::string joined;
        for (const auto& p : prompts) joined += p + "\n";
        t.record.probe_prompts_hash = prompts.empty() ? "" : sha256_hex(joined);
        t.first = requests.size();
        t.count = prompts.size();
        for (std::size_t i = 0; i < prompts.size(); ++i) {
          ChatRequest r;
          r.model = model;
          r.system_prompt = std::string(kProbeSystemPrompt);
          r.user_prompt = prompts[i];
          r.max_tokens = config_.max_tokens;
          r.request_id = "probe/" + model + "/" + dataset + "/" + family + "/" + key_text + "/" + std::to_string(i);
          r.key = AnswerKey{Answer::yes(), {}, std::nullopt, t.mode == ProbeMode::mc ? 1 : static_cast<int>(t.questions)};
          requests.push_back(std::move(r));
        }
        tasks.push_back(std::move(t));
      }
    }

    std::vector<ChatResponse> replies;
    if (!requests.empty()) {
      auto gateway = make_gateway();
      replies = gateway->complete_all(requests);
      summary_.probe_stats = gateway->stats();
    }
    std::vector<KnowledgeRecord> records;
    for (auto& t : tasks) {
      if (t.count > 0) {
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < t.count; ++i) texts.push_back(replies[t.first + i].text);
        t.record.known = evaluate_probe(texts, t.mode, t.questions);
      }
      records.push_back(t.record);
    }
    std::sort(records.begin(), records.end(), [](const KnowledgeRecord& a, const KnowledgeRecord& b) {
      return std::tuple(a.model, a.dataset, a.family, to_string(a.entity_key)) <
             std::tuple(b.model, b.dataset, b.family, to_string(b.entity_key));
    });
    std::vector<Json> rows;
    for (const auto& r : records) rows.push_back(to_json(r));
    write_jsonl(kpath, stage_header("probe", hash, input_hash), rows);
    summary_.knowledge_records = rows.size();
  });
}

void Pipeline::ask() {
  run_stage("ask", [&] {
    const std::string hash = config_hash("ask");
    const fs::path qpath = config_.out_dir / kQuestions;
    const fs::path rpath = config_.out_dir / kResponses;
    const JsonlFile qfile = read_input("ask", qpath, "generate", config_hash("generate"));
    guard_output("ask", rpath, hash);
    const std::string input_hash = file_hash(qpath);
    const auto models = config_.effective_models();

    std::vector<Question> questions;
    std::set<std::string> ids;
    for (const auto& row : qfile.rows) {
      questions.push_back(question_from_json(row));
      ids.insert(questions.back().id);
    }

    // Resume: keep every earlier answer to a question that still exists.
    std::vector<Json> rows;
    std::set<std::pair<std::string, std::string>> done;
    if (fs::exists(rpath)) {
      for (auto& r : read_jsonl(rpath).rows) {
        const auto id = r.at("question_id").get<std::string>();
        const auto model = r.at("model").get<std::string>();
        if (!ids.count(id) || std::find(models.begin(), models.end(), model) == models.end()) continue;
        if (!done.insert({id, model}).second) continue;
        rows.push_back(std::move(r));
      }
    }
    std::vector<std::pair<const Question*, std::string>> pending;
    for (const auto& q : questions) {
      for (const auto& model : models) {
        if (!done.count({q.id, model})) pending.emplace_back(&q, model);
      }
    }
    write_jsonl(rpath, stage_header("ask", hash, input_hash), rows);

    if (!pending.empty()) {
      auto gateway = make_gateway();
      std::ofstream out(rpath, std::ios::binary | std::ios::app);
      if (!out) throw IoError("cannot append to " + rpath.string());
      const std::size_t batch = std::max<std::size_t>(32, static_cast<std::size_t>(config_.concurrency) * 8);
      for (std::size_t start = 0; start < pending.size(); start += batch) {
        const std::size_t end = std::min(pending.size(), start + batch);
        std::vector<ChatRequest> requests;
        for (std::size_t i = start; i < end; ++i) {
          requests.push_back(request_for(*pending[i].first, pending[i].second, config_.max_tokens));
        }
        auto replies = gateway->complete_all(requests);
        for (std::size_t i = 0; i < replies.size(); ++i) {
          Json row = response_row(pending[start + i].first->id, pending[start + i].second, replies[i]);
          out << row.dump() << "\n";
          rows.push_back(std::move(row));
        }
        out.flush();
        spdlog::info("asked {}/{}", end, pending.size());
      }
      summary_.ask_stats = gateway->stats();
    }
    std::sort(rows.begin(), rows.end(), row_less);
    write_jsonl(rpath, stage_header("ask", hash, input_hash), rows);
    summary_.responses = rows.size();
    summary_.new_responses = pending.size();
  });
}

void Pipeline::verify() {
  run_stage("verify", [&] {
    const std::string hash = config_hash("verify");
    const fs::path qpath = config_.out_dir / kQuestions;
    const fs::path vpath = config_.out_dir / kVerified;
    const JsonlFile qfile = read_input("verify", qpath, "generate", config_hash("generate"));
    const JsonlFile rfile = read_input("verify", config_.out_dir / kResponses, "ask", config_hash("ask"));
    guard_output("verify", vpath, hash);

    std::map<std::string, Question> questions;
    for (const auto& row : qfile.rows) {
      Question q = question_from_json(row);
      questions.emplace(q.id, std::move(q));
    }
    std::vector<VerifiedResponse> verified;
    for (const auto& r : rfile.rows) {
      const auto id = r.at("question_id").get<std::string>();
      auto it = questions.find(id);
      if (it == questions.end()) throw IntegrityError("response to unknown question " + id);
      verified.push_back(relbench::verify(it->second, r.at("text").get<std::string>(), r.at("model").get<std::string>()));
    }
    std::sort(verified.begin(), verified.end(), [](const VerifiedResponse& a, const VerifiedResponse& b) {
      return std::tie(a.question_id, a.model) < std::tie(b.question_id, b.model);
    });
    std::vector<Json> rows;
    for (const auto& v : verified) rows.push_back(to_json(v));
    const std::string input_hash = sha256_hex(file_hash(qpath) + responses_hash(rfile.rows));
    write_jsonl(vpath, stage_header("verify", hash, input_hash), rows);
    summary_.verified = rows.size();
  });
}

void Pipeline::report() {
  run_stage("report", [&] {
    const fs::path vpath = config_.out_dir / kVerified;
    const JsonlFile vfile = read_input("report", vpath, "verify", config_hash("verify"));
    std::vector<VerifiedResponse> verified;
    for (const auto& row : vfile.rows) verified.push_back(verified_from_json(row));

    KnowledgeBase kb;
    std::string input_hash = file_hash(vpath);
    if (config_.filter != FilterMode::all) {
      const fs::path kpath = config_.out_dir / kKnowledge;
      const JsonlFile kfile = read_input("report", kpath, "probe", config_hash("probe"));
      for (const auto& row : kfile.rows) kb.add(knowledge_from_json(row));
      input_hash = sha256_hex(input_hash + file_hash(kpath));
    }
    Report r = build_report(verified, config_.filter, kb, config_.min_known);
    write_report(r, config_.out_dir, stage_header("report", config_hash("report"), input_hash));
    summary_.verified = verified.size();
  });
}

void Pipeline::run_all() {
  validate();
  generate();
  if (config_.filter != FilterMode::all) probe();
  ask();
  verify();
  report();
}

}  // namespace relbench
