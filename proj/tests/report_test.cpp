#include "relbench/error.hpp"
#include "relbench/report.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace relbench;
namespace fs = std::filesystem;

namespace {

VerifiedResponse response(const std::string& model, const std::string& column, int i, bool correct, bool hit,
                          bool abstained = false) {
  VerifiedResponse v;
  v.question_id = "movie/" + column + "/" + std::to_string(i);
  v.model = model;
  v.dataset = "movie";
  v.column = column;
  v.qtype = QuestionType::binary_basic;
  v.family = "binary";
  v.entity_key = {{"title", "t" + std::to_string(i)}};
  v.answer = abstained ? Answer::unsure() : (correct ? Answer::yes() : Answer::no());
  v.answer_correct = correct;
  v.abstained = abstained;
  v.rationale.hop_hits = {hit};
  v.rationale.matched_forms = {hit ? "x" : ""};
  return v;
}

// 80 right with a hit, 5 right with a miss, 1 wrong with a hit, 14 wrong.
std::vector<VerifiedResponse> table_row(const std::string& model) {
  std::vector<VerifiedResponse> out;
  for (int i = 0; i < 100; ++i) out.push_back(response(model, "BN(Y)", i, i < 85, i < 80 || i == 85));
  return out;
}

KnowledgeBase knows(const std::string& model, int count) {
  KnowledgeBase kb;
  for (int i = 0; i < 100; ++i) kb.add({model, "movie", "binary", {{"title", "t" + std::to_string(i)}}, i < count, ""});
  return kb;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Report, TableRowRendering) {
  auto r = build_report(table_row("gpt"), FilterMode::all, {});
  ASSERT_EQ(r.groups.size(), 1u);
  EXPECT_EQ(r.groups[0].n, 100u);
  EXPECT_NE(render_text(r).find(".85 .81 .80 .15 .00"), std::string::npos) << render_text(r);
  const auto md = render_markdown(r);
  EXPECT_NE(md.find("| gpt | A | .85 |"), std::string::npos) << md;
  EXPECT_NE(md.find("| gpt | H | .15 |"), std::string::npos) << md;
}

TEST(Report, ModelKnowingTooFewEntitiesIsNa) {
  auto r = build_report(table_row("gpt"), FilterMode::per_model, knows("gpt", 19));
  ASSERT_EQ(r.groups.size(), 1u);
  EXPECT_TRUE(r.groups[0].na_reason.has_value());
  EXPECT_FALSE(r.groups[0].metrics.has_value());
  EXPECT_NE(render_text(r).find("n/a n/a n/a n/a n/a"), std::string::npos);
  EXPECT_NE(render_markdown(r).find("| gpt | A | n/a |"), std::string::npos);
  EXPECT_EQ(to_json(r)["groups"][0]["flag"], "n/a");
}

TEST(Report, PerModelFilterShrinksTheGroup) {
  auto r = build_report(table_row("gpt"), FilterMode::per_model, knows("gpt", 20));
  ASSERT_EQ(r.groups.size(), 1u);
  EXPECT_FALSE(r.groups[0].na_reason.has_value());
  EXPECT_EQ(r.groups[0].total, 100u);
  EXPECT_EQ(r.groups[0].n, 20u);
  EXPECT_DOUBLE_EQ(r.groups[0].metrics->A, 1.0);
}

TEST(Report, FilterLeavingNothingIsNa) {
  auto v = table_row("gpt");
  KnowledgeBase kb;
  for (int i = 0; i < 100; ++i) kb.add({"gpt", "movie", "mc", {{"title", "m" + std::to_string(i)}}, true, ""});
  for (int i = 0; i < 100; ++i) kb.add({"gpt", "movie", "binary", {{"title", "t" + std::to_string(i)}}, false, ""});
  auto r = build_report(v, FilterMode::per_model, kb);
  EXPECT_TRUE(r.groups[0].na_reason.has_value());
}

TEST(Report, HopBlockOnlyForMultiHopGroups) {
  std::vector<VerifiedResponse> v = table_row("gpt");
  for (int i = 0; i < 8; ++i) {
    auto m = response("gpt", "MH(Y)[movie_director]", i, true, true);
    m.qtype = QuestionType::multihop_basic;
    m.hop_count = 2;
    m.family = "multihop/movie_director";
    m.rationale.hop_hits = {true, i % 2 == 0};
    m.rationale.matched_forms = {"x", ""};
    v.push_back(m);
  }
  auto r = build_report(v, FilterMode::all, {});
  ASSERT_EQ(r.groups.size(), 2u);
  EXPECT_EQ(r.groups[0].column, "BN(Y)");
  EXPECT_FALSE(r.groups[0].hops.has_value());
  ASSERT_TRUE(r.groups[1].hops.has_value());
  EXPECT_DOUBLE_EQ(r.groups[1].hops->R_ext, 0.75);
  EXPECT_FALSE(to_json(r)["groups"][0].contains("hops"));
  EXPECT_TRUE(to_json(r)["groups"][1].contains("hops"));
  const auto md = render_markdown(r);
  EXPECT_NE(md.find("MH(Y)[movie_director]"), std::string::npos);
  EXPECT_EQ(md.find("hops: movie BN(Y)"), std::string::npos);
  EXPECT_NE(md.find("hops: movie MH(Y)[movie_director]"), std::string::npos);
}

TEST(Report, ColumnsFollowTheQuestionTypeOrder) {
  std::vector<VerifiedResponse> v;
  auto add = [&](const std::string& column, QuestionType t) {
    auto x = response("gpt", column, 0, true, true);
    x.qtype = t;
    x.question_id += column;
    v.push_back(x);
  };
  add("MC@nota=0.5", QuestionType::multiple_choice);
  add("BN(N)", QuestionType::binary_negated);
  add("MC", QuestionType::multiple_choice);
  add("BN(Y)", QuestionType::binary_basic);
  auto r = build_report(v, FilterMode::all, {});
  ASSERT_EQ(r.groups.size(), 4u);
  EXPECT_EQ(r.groups[0].column, "BN(Y)");
  EXPECT_EQ(r.groups[1].column, "BN(N)");
  EXPECT_EQ(r.groups[2].column, "MC");
  EXPECT_EQ(r.groups[3].column, "MC@nota=0.5");
}

TEST(Report, NotaColumnsBecomeASweepSeries) {
  std::vector<VerifiedResponse> v;
  for (double f : {0.0, 0.5, 1.0}) {
    char col[32];
    std::snprintf(col, sizeof col, "MC@nota=%g", f);
    for (int i = 0; i < 4; ++i) {
      auto x = response("gpt", col, i, i < 3, true);
      x.qtype = QuestionType::multiple_choice;
      v.push_back(x);
    }
  }
  auto r = build_report(v, FilterMode::all, {});
  ASSERT_EQ(r.sweep.size(), 3u);
  EXPECT_DOUBLE_EQ(r.sweep[1].fraction, 0.5);
  EXPECT_DOUBLE_EQ(r.sweep[1].accuracy.value, 0.75);
  EXPECT_EQ(render_sweep_csv(r),
            "model,dataset,fraction,accuracy,n\n"
            "gpt,movie,0,0.75,4\n"
            "gpt,movie,0.5,0.75,4\n"
            "gpt,movie,1,0.75,4\n");
}

TEST(Report, EmptyInputIsRejected) {
  EXPECT_THROW(build_report({}, FilterMode::all, {}), PreconditionError);
}

TEST(Report, WritesAllFourFiles) {
  const fs::path dir = fs::temp_directory_path() / "relbench_report_files";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto r = build_report(table_row("gpt"), FilterMode::all, {});
  write_report(r, dir, Json{{"stage", "report"}});
  for (const auto* f : {"report.json", "report.md", "report.txt", "nota_sweep.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  auto j = Json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(j["_header"]["stage"], "report");
  EXPECT_EQ(j["groups"][0]["metrics"]["A"], 0.85);

  std::ofstream(dir / "blocker") << "x";
  EXPECT_THROW(write_report(r, dir / "blocker", Json::object()), IoError);
}
