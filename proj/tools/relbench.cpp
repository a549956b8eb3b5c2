// Command-line front end: one subcommand per pipeline stage, plus "all".

#include "relbench/error.hpp"
#include "relbench/pipeline.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace relbench;

namespace {

std::vector<QuestionType> parse_qtypes(const std::vector<std::string>& names) {
  std::vector<QuestionType> out;
  auto add = [&](QuestionType t) {
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
  };
  for (const auto& n : names) {
    if (n == "multihop") {
      add(QuestionType::multihop_basic);
      add(QuestionType::multihop_negated);
    } else {
      add(parse_question_type(n));
    }
  }
  return out;
}

ViolationPolicy parse_policy(const std::string& s) {
  if (s == "refuse") return ViolationPolicy::refuse;
  if (s == "warn") return ViolationPolicy::warn;
  throw ConfigError("--on-violation must be refuse or warn");
}

void print_file(const fs::path& p) {
  std::ifstream in(p);
  if (in) std::cout << in.rdbuf();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Builds LLM hallucination benchmarks from relational data and scores model answers."};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string manifest, provider = "oracle", filter = "all", on_violation, log_level = "info";
  std::string endpoint, api_key_env, script, augment, cache_dir, out;
  std::vector<std::string> datasets, qtypes, chains, models;
  std::vector<double> nota;
  bool few_shot = false, cot = false;
  std::optional<std::uint64_t> seed;
  int concurrency = 4, max_tokens = 512;
  std::size_t min_known = kMinKnownEntities;

  app.add_option("--manifest", manifest, "Dataset manifest, or an index of manifests")->required();
  app.add_option("--dataset", datasets, "Datasets to use (default: all in the manifest)")->delimiter(',');
  app.add_option("--qtype", qtypes, "bn-basic, bn-negated, mc, multihop (default: all)")
      ->delimiter(',')
      ->check(CLI::IsMember({"bn-basic", "bn-negated", "mc", "multihop", "mh-basic", "mh-negated"}));
  app.add_option("--chain", chains, "Multi-hop chains to use (default: all)")->delimiter(',');
  app.add_option("--provider", provider, "http, oracle, adversary, abstainer or scripted")->capture_default_str();
  app.add_option("--model", models, "Model names; repeat for several")->delimiter(',');
  app.add_option("--endpoint", endpoint, "Chat-completions URL (overrides the manifest)");
  app.add_option("--api-key-env", api_key_env, "Environment variable holding the API key");
  app.add_option("--script", script, "Reply script for the scripted provider");
  app.add_option("--filter", filter, "Knowledge filter: per-model, common or all")
      ->check(CLI::IsMember({"per-model", "per_model", "common", "all"}))
      ->capture_default_str();
  app.add_option("--min-known", min_known, "Entities a model must know to be scored under a filter")
      ->capture_default_str();
  app.add_option("--nota-fraction", nota, "Fraction of MC questions turned into NOTA; repeat for a sweep")
      ->delimiter(',');
  app.add_flag("--few-shot", few_shot, "Prefix few-shot demonstrations");
  app.add_flag("--cot", cot, "Prefix chain-of-thought demonstrations to multi-hop questions");
  app.add_option("--augment", augment, "JSON file of retrieved passages per question or entity");
  app.add_option("--seed", seed, "Seed for MC falsification and NOTA selection");
  app.add_option("--concurrency", concurrency, "Parallel provider requests")->capture_default_str();
  app.add_option("--max-tokens", max_tokens, "Completion token limit")->capture_default_str();
  app.add_option("--cache-dir", cache_dir, "Response cache (default: <out>/cache)");
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--on-violation", on_violation, "refuse or warn (overrides the manifest)")
      ->check(CLI::IsMember({"refuse", "warn"}));
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  for (const char* name : {"validate", "generate", "probe", "ask", "verify", "report", "all"}) {
    app.add_subcommand(name, std::string("Run the ") + name + (std::string(name) == "all" ? " stages" : " stage"));
  }

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));
  const std::string command = app.get_subcommands().front()->get_name();

  std::unique_ptr<Pipeline> pipeline;
  try {
    RunConfig c;
    c.manifest = manifest;
    c.datasets = datasets;
    c.qtypes = parse_qtypes(qtypes);
    c.chains = chains;
    c.provider = parse_provider_kind(provider);
    c.models = models;
    c.endpoint = endpoint;
    c.api_key_env = api_key_env;
    c.script = script;
    c.max_tokens = max_tokens;
    c.filter = parse_filter_mode(filter);
    c.min_known = min_known;
    c.nota_fractions = nota;
    c.few_shot = few_shot;
    c.cot = cot;
    if (!augment.empty()) c.augment = augment;
    c.seed = seed;
    c.concurrency = concurrency;
    if (!cache_dir.empty()) c.cache_dir = cache_dir;
    c.out_dir = out;
    if (!on_violation.empty()) c.on_violation = parse_policy(on_violation);
    pipeline = std::make_unique<Pipeline>(std::move(c));
  } catch (const Error& e) {
    std::cerr << "relbench: configuration error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (command == "validate") pipeline->validate();
    if (command == "generate") pipeline->generate();
    if (command == "probe") pipeline->probe();
    if (command == "ask") pipeline->ask();
    if (command == "verify") pipeline->verify();
    if (command == "report") pipeline->report();
    if (command == "all") pipeline->run_all();
  } catch (const StageError& e) {
    std::cerr << "relbench: stage '" << e.stage() << "' failed: " << e.what() << "\n";
    return 2;
  }

  const auto& s = pipeline->summary();
  if (command == "generate" || command == "all") {
    std::cout << "questions: " << s.questions << " (skipped records: " << s.skipped << ")\n";
  }
  if (command == "probe" || (command == "all" && s.knowledge_records)) {
    std::cout << "knowledge records: " << s.knowledge_records << "\n";
  }
  if (command == "ask" || command == "all") {
    std::cout << "responses: " << s.responses << " (new: " << s.new_responses
              << ", provider calls: " << s.ask_stats.provider_calls << ", cache hits: " << s.ask_stats.cache_hits
              << ")\n";
  }
  if (command == "report" || command == "all") print_file(fs::path(out) / "report.txt");
  return 0;
}
