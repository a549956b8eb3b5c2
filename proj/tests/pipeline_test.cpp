#include "relbench/error.hpp"
#include "relbench/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <fstream>

using namespace relbench;
namespace fs = std::filesystem;

namespace {

const fs::path kIndex = fs::path(RELBENCH_DATA_DIR) / "manifests" / "index.json";

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("relbench_pipeline_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig movie_config(const fs::path& out, ProviderKind provider = ProviderKind::mock_oracle) {
  RunConfig c;
  c.manifest = kIndex;
  c.datasets = {"movie"};
  c.provider = provider;
  c.seed = 11;
  c.out_dir = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Returns a copy of the groups array so range-for loops own their data.
Json report_groups(const fs::path& out) { return Json::parse(slurp(out / "report.json")).at("groups"); }

Json report_json(const fs::path& out) { return Json::parse(slurp(out / "report.json")); }

template <typename F>
std::string stage_of(F&& f) {
  try {
    f();
  } catch (const StageError& e) {
    return e.stage();
  }
  return "";
}

}  // namespace

TEST(Pipeline, OracleRunScoresPerfectlyOnEveryColumn) {
  auto out = scratch("oracle");
  Pipeline p(movie_config(out));
  p.run_all();
  auto j = report_json(out);
  std::set<std::string> columns;
  for (const auto& g : j["groups"]) {
    columns.insert(g["column"].get<std::string>());
    const auto& m = g["metrics"];
    EXPECT_EQ(m["A"], 1.0) << g["column"];
    EXPECT_EQ(m["R"], 1.0) << g["column"];
    EXPECT_EQ(m["AR"], 1.0) << g["column"];
    EXPECT_EQ(m["H"], 0.0) << g["column"];
    EXPECT_EQ(m["M"], 0.0) << g["column"];
  }
  EXPECT_EQ(columns, (std::set<std::string>{"BN(Y)", "BN(N)", "MC", "MH(Y)[movie_director]", "MH(N)[movie_director]"}));
  EXPECT_EQ(p.summary().verified, p.summary().questions);
}

TEST(Pipeline, AdversaryAndAbstainer) {
  auto out = scratch("adversary");
  Pipeline(movie_config(out, ProviderKind::mock_adversary)).run_all();
  for (const auto& g : report_groups(out)) EXPECT_EQ(g["metrics"]["A"], 0.0) << g["column"];

  out = scratch("abstainer");
  Pipeline(movie_config(out, ProviderKind::mock_abstainer)).run_all();
  for (const auto& g : report_groups(out)) {
    EXPECT_EQ(g["metrics"]["M"], 1.0) << g["column"];
    EXPECT_EQ(g["metrics"]["H"], 0.0) << g["column"];
  }
}

TEST(Pipeline, GenerateAloneWritesQuestionsOnly) {
  auto out = scratch("generate");
  Pipeline p(movie_config(out));
  p.generate();
  EXPECT_TRUE(fs::exists(out / "questions.jsonl"));
  EXPECT_TRUE(fs::exists(out / "skipped.jsonl"));
  EXPECT_FALSE(fs::exists(out / "responses.jsonl"));
  EXPECT_FALSE(fs::exists(out / "cache"));
  auto file = read_jsonl(out / "questions.jsonl");
  EXPECT_EQ(file.header["stage"], "generate");
  EXPECT_EQ(file.rows.size(), p.summary().questions);
  for (std::size_t i = 1; i < file.rows.size(); ++i) {
    EXPECT_LT(file.rows[i - 1]["id"].get<std::string>(), file.rows[i]["id"].get<std::string>());
  }
}

TEST(Pipeline, WarmCacheRerunMakesNoProviderCalls) {
  auto cache = scratch("shared_cache");
  auto first = scratch("warm_a");
  auto second = scratch("warm_b");
  auto c1 = movie_config(first);
  c1.cache_dir = cache;
  Pipeline p1(c1);
  p1.run_all();
  EXPECT_GT(p1.summary().ask_stats.provider_calls, 0u);

  auto c2 = movie_config(second);
  c2.cache_dir = cache;
  Pipeline p2(c2);
  p2.run_all();
  EXPECT_EQ(p2.summary().ask_stats.provider_calls, 0u);
  for (const auto* f : {"questions.jsonl", "verified.jsonl", "report.json", "report.md", "report.txt"}) {
    EXPECT_EQ(slurp(first / f), slurp(second / f)) << f;
  }
}

TEST(Pipeline, RerunInPlaceResumesWithoutNewRequests) {
  auto out = scratch("resume");
  Pipeline(movie_config(out)).run_all();
  const auto verified = slurp(out / "verified.jsonl");
  Pipeline again(movie_config(out));
  again.run_all();
  EXPECT_EQ(again.summary().new_responses, 0u);
  EXPECT_EQ(slurp(out / "verified.jsonl"), verified);
}

TEST(Pipeline, RefusesToMixConfigurations) {
  auto out = scratch("mix");
  Pipeline(movie_config(out)).generate();
  auto other = movie_config(out);
  other.seed = 12;
  EXPECT_EQ(stage_of([&] { Pipeline(other).generate(); }), "generate");
  EXPECT_EQ(stage_of([&] { Pipeline(other).ask(); }), "ask");
}

TEST(Pipeline, StageWithoutInputsNamesItself) {
  auto out = scratch("missing");
  EXPECT_EQ(stage_of([&] { Pipeline(movie_config(out)).ask(); }), "ask");
  EXPECT_EQ(stage_of([&] { Pipeline(movie_config(out)).verify(); }), "verify");
  EXPECT_EQ(stage_of([&] { Pipeline(movie_config(out)).report(); }), "report");
}

TEST(Pipeline, SeedIsRequiredForStochasticGeneration) {
  auto c = movie_config(scratch("seed"));
  c.seed.reset();
  EXPECT_THROW(Pipeline{c}, ConfigError);
  c.qtypes = {QuestionType::binary_basic};
  EXPECT_NO_THROW(c.validate());
  c.nota_fractions = {0.5};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Pipeline, InvalidOptionsAreConfigErrors) {
  auto c = movie_config(scratch("invalid"));
  c.nota_fractions = {1.5};
  EXPECT_THROW(c.validate(), ConfigError);
  c = movie_config(scratch("invalid"));
  c.few_shot = true;
  c.augment = "passages.json";
  EXPECT_THROW(c.validate(), ConfigError);
  c = movie_config(scratch("invalid"));
  c.datasets = {"nope"};
  EXPECT_THROW(Pipeline{c}, ConfigError);
  c = movie_config(scratch("invalid"));
  c.chains = {"nope"};
  EXPECT_THROW(Pipeline{c}, ConfigError);
}

TEST(Pipeline, NotaCopiesCarryTheFractionInTheirIds) {
  auto out = scratch("nota");
  auto c = movie_config(out);
  c.qtypes = {QuestionType::multiple_choice};
  c.nota_fractions = {0.0, 0.5};
  Pipeline p(c);
  p.run_all();
  auto rows = read_jsonl(out / "questions.jsonl").rows;
  std::size_t half = 0, half_nota = 0, zero = 0;
  for (const auto& r : rows) {
    const auto id = r["id"].get<std::string>();
    if (id.ends_with("@nota=0.5")) {
      ++half;
      if (r["expected_answer"] == "NoneOfTheAbove") ++half_nota;
    } else {
      EXPECT_TRUE(id.ends_with("@nota=0")) << id;
      ++zero;
    }
  }
  EXPECT_EQ(half, zero);
  EXPECT_EQ(half_nota, static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(half))));
  auto sweep = slurp(out / "nota_sweep.csv");
  EXPECT_NE(sweep.find("oracle,movie,0,1,"), std::string::npos) << sweep;
  EXPECT_NE(sweep.find("oracle,movie,0.5,1,"), std::string::npos) << sweep;
}

TEST(Pipeline, PerModelFilterProbesEveryModel) {
  auto out = scratch("per_model");
  auto c = movie_config(out);
  c.models = {"alpha", "beta"};
  c.filter = FilterMode::per_model;
  Pipeline p(c);
  p.run_all();
  EXPECT_TRUE(fs::exists(out / "knowledge.jsonl"));
  EXPECT_GT(p.summary().knowledge_records, 0u);
  auto j = report_json(out);
  for (const auto& g : j["groups"]) {
    EXPECT_FALSE(g.contains("flag")) << g["model"] << g["column"];
    EXPECT_EQ(g["n"], g["total"]);
  }

  out = scratch("per_model_abstain");
  c = movie_config(out, ProviderKind::mock_abstainer);
  c.filter = FilterMode::common;
  Pipeline(c).run_all();
  for (const auto& g : report_groups(out)) EXPECT_EQ(g["flag"], "n/a");
}

TEST(Pipeline, WrappersApplyByQuestionType) {
  auto out = scratch("wrappers");
  auto c = movie_config(out);
  c.few_shot = true;
  c.cot = true;
  Pipeline p(c);
  p.run_all();
  const auto qrows = read_jsonl(out / "questions.jsonl").rows;
  for (const auto& r : qrows) {
    const auto qtype = r["qtype"].get<std::string>();
    const auto wrapping = r["wrapping"].get<std::string>();
    if (qtype.starts_with("multihop")) {
      EXPECT_EQ(wrapping, "cot");
    } else {
      EXPECT_EQ(wrapping, "few_shot");
    }
  }
  for (const auto& g : report_groups(out)) EXPECT_EQ(g["metrics"]["A"], 1.0);
}

TEST(Pipeline, AugmentationDropsQuestionsWithoutPassages) {
  auto out = scratch("augment");
  fs::create_directories(out);
  std::ofstream(out / "passages.json") << R"({"title=Avatar; year=2009": ["Avatar is a 2009 film by James Cameron."]})";
  auto c = movie_config(out);
  c.qtypes = {QuestionType::multiple_choice};
  c.augment = out / "passages.json";
  Pipeline p(c);
  p.generate();
  auto rows = read_jsonl(out / "questions.jsonl").rows;
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0]["wrapping"], "augment");
  EXPECT_GT(p.summary().skipped, 0u);
}

TEST(Pipeline, ValidateRefusesViolationsUnlessWarned) {
  auto dir = scratch("violating");
  fs::create_directories(dir);
  std::ofstream(dir / "r.csv") << "name,city\nAlice,Paris\nAlice,Rome\nBob,Oslo\n";
  std::ofstream(dir / "m.json")
      << R"({"dataset":"toy","relations":[{"name":"R","csv":"r.csv","attributes":[{"name":"name"},{"name":"city"}]}],)"
      << R"("fds":{"f":{"relation":"R","lhs":["name"],"rhs":["city"]}},)"
      << R"("questions":{"binary":{"fd":"f","basic":"Does {name} live somewhere?","negated":"Is it true that {name} lives nowhere?"}}})";
  RunConfig c;
  c.manifest = dir / "m.json";
  c.out_dir = dir / "out";
  EXPECT_EQ(stage_of([&] { Pipeline(c).validate(); }), "validate");
  c.on_violation = ViolationPolicy::warn;
  Pipeline p(c);
  p.validate();
  p.generate();
  // Alice's group violates the FD and is skipped; Bob's is kept.
  EXPECT_EQ(p.summary().questions, 2u);
}

TEST(Pipeline, EveryResponseLandsInExactlyOneGroup) {
  auto out = scratch("groups");
  auto c = movie_config(out);
  c.models = {"alpha", "beta"};
  Pipeline p(c);
  p.run_all();
  std::size_t total = 0;
  for (const auto& g : report_groups(out)) total += g["total"].get<std::size_t>();
  EXPECT_EQ(total, p.summary().verified);
  EXPECT_EQ(p.summary().verified, 2 * p.summary().questions);
}
