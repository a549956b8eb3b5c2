#include "relbench/error.hpp"
#include "relbench/knowledge_probe.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace relbench;

namespace {

Schema movie_schema() {
  return Schema("Movie", {{"title", AttributeKind::text},
                          {"year", AttributeKind::year},
                          {"director", AttributeKind::text, true},
                          {"length", AttributeKind::integer}});
}

Relation movies() {
  return parse_relation(
      "title,year,director,length\n"
      "Avatar,2009,James Cameron,162\n"
      "Ghost,1990,,127\n",
      movie_schema());
}

ProbeTemplate movie_probe() {
  return {"Do you know about the movie {title} released in {year}?",
          {{"director", "If yes, is the movie directed by {director}?"},
           {"length", "If yes, is the movie {length} minutes long?"}},
          {{"director", "Is the movie {title} released in {year} directed by {director}?"},
           {"length", "Is the movie {title} released in {year} {length} minutes long?"}}};
}

VerifiedResponse response(const std::string& model, const std::string& entity, const std::string& dataset = "movie") {
  VerifiedResponse v;
  v.question_id = dataset + "/bn-basic/" + entity + "/" + model;
  v.model = model;
  v.dataset = dataset;
  v.family = "binary";
  v.entity_key = {{"title", entity}};
  return v;
}

KnowledgeRecord knows(const std::string& model, const std::string& entity, bool known,
                      const std::string& dataset = "movie") {
  return {model, dataset, "binary", {{"title", entity}}, known, ""};
}

std::set<std::string> ids(const std::vector<VerifiedResponse>& vs) {
  std::set<std::string> out;
  for (const auto& v : vs) out.insert(v.question_id);
  return out;
}

}  // namespace

TEST(BuildBinaryProbe, ChainsOneQuestionPerRhsAttribute) {
  auto rel = movies();
  std::string p = build_binary_probe(rel.schema(), rel.records()[0], {{"title", "year"}, {"director", "length"}},
                                     movie_probe());
  EXPECT_EQ(p,
            "Do you know about the movie Avatar released in 2009? If yes, is the movie directed by James Cameron? "
            "If yes, is the movie 162 minutes long?");
}

TEST(BuildBinaryProbe, SingleRhsGivesTwoQuestions) {
  auto rel = movies();
  std::string p = build_binary_probe(rel.schema(), rel.records()[0], {{"title", "year"}, {"director"}}, movie_probe());
  EXPECT_EQ(std::count(p.begin(), p.end(), '?'), 2);
}

TEST(BuildBinaryProbe, NullRhsIsAPreconditionViolation) {
  auto rel = movies();
  EXPECT_THROW(build_binary_probe(rel.schema(), rel.records()[1], {{"title", "year"}, {"director"}}, movie_probe()),
               PreconditionError);
}

TEST(BuildBinaryProbe, MissingClauseIsConfigError) {
  auto rel = movies();
  auto tmpl = movie_probe();
  tmpl.chained.pop_back();
  EXPECT_THROW(build_binary_probe(rel.schema(), rel.records()[0], {{"title", "year"}, {"director", "length"}}, tmpl),
               ConfigError);
}

TEST(BuildMcProbes, OnePlusRhsPrompts) {
  auto rel = movies();
  auto ps = build_mc_probes(rel.schema(), rel.records()[0], {{"title", "year"}, {"director", "length"}}, movie_probe());
  ASSERT_EQ(ps.size(), 3u);
  EXPECT_EQ(ps[0], "Do you know about the movie Avatar released in 2009?");
  EXPECT_EQ(ps[1], "Is the movie Avatar released in 2009 directed by James Cameron?");
  EXPECT_EQ(ps[2], "Is the movie Avatar released in 2009 162 minutes long?");
  EXPECT_EQ(build_mc_probes(rel.schema(), rel.records()[0], {{"title", "year"}, {"length"}}, movie_probe()).size(), 2u);
}

TEST(BuildMcProbes, BatchIsOrderStable) {
  auto rel = parse_relation("title,year,director,length\nA,2001,X,90\nB,2002,Y,91\nC,2003,Z,92\n", movie_schema());
  std::vector<std::vector<std::string>> groups;
  for (const auto& r : rel.records()) groups.push_back(build_mc_probes(rel.schema(), r, {{"title", "year"}, {"director"}}, movie_probe()));
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[0][0], "Do you know about the movie A released in 2001?");
  EXPECT_EQ(groups[2][1], "Is the movie C released in 2003 directed by Z?");
}

TEST(EvaluateProbe, Examples) {
  EXPECT_TRUE(evaluate_probe({"Yes.", "Yes.", "Yes."}, ProbeMode::mc, 3));
  EXPECT_FALSE(evaluate_probe({"Yes. Yes. No."}, ProbeMode::binary, 3));
  EXPECT_FALSE(evaluate_probe({"Unsure"}, ProbeMode::binary, 1));
  EXPECT_FALSE(evaluate_probe({"Unsure"}, ProbeMode::mc, 1));
  EXPECT_TRUE(evaluate_probe({"Yes. Yes. Yes."}, ProbeMode::binary, 3));
  EXPECT_TRUE(evaluate_probe({"Yes, I know it. Yes, it is. Yes."}, ProbeMode::binary, 3));
}

TEST(EvaluateProbe, TooFewSegmentsIsNotKnown) {
  EXPECT_FALSE(evaluate_probe({"Yes."}, ProbeMode::binary, 3));
  EXPECT_FALSE(evaluate_probe({"Yes.", "Yes."}, ProbeMode::mc, 3));
  EXPECT_FALSE(evaluate_probe({"Yes.", "I think so.", "Yes."}, ProbeMode::mc, 3));
}

TEST(EvaluateProbe, EmptyResponsesRejected) {
  EXPECT_THROW(evaluate_probe({}, ProbeMode::binary, 1), PreconditionError);
}

TEST(EvaluateProbe, MonotoneUnderYesToNoFlips) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t n = 1 + rng() % 4;
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < n; ++i) parts.push_back(rng() % 4 == 0 ? "No." : "Yes.");
    auto joined = [&] {
      std::string s;
      for (const auto& p : parts) s += p + " ";
      return s;
    };
    bool before = evaluate_probe({joined()}, ProbeMode::binary, n);
    bool mc_before = evaluate_probe(parts, ProbeMode::mc, n);
    parts[rng() % n] = "No.";
    EXPECT_LE(evaluate_probe({joined()}, ProbeMode::binary, n), before);
    EXPECT_LE(evaluate_probe(parts, ProbeMode::mc, n), mc_before);
  }
}

TEST(KnowledgeRecordJson, RoundTrips) {
  KnowledgeRecord k{"gpt", "movie", "binary", {{"title", "Avatar"}, {"year", "2009"}}, true, "abc"};
  EXPECT_EQ(knowledge_from_json(to_json(k)), k);
  EXPECT_THROW(knowledge_from_json(Json::parse(R"({"model":"m"})")), ParseError);
}

TEST(KnowledgeBase, LastWriteWins) {
  KnowledgeBase kb;
  kb.add(knows("m", "a", true));
  kb.add(knows("m", "a", false));
  EXPECT_EQ(kb.known("m", "movie", "binary", {{"title", "a"}}), false);
  EXPECT_EQ(kb.records().size(), 1u);
  EXPECT_FALSE(kb.known("m", "movie", "binary", {{"title", "zz"}}).has_value());
}

TEST(KnowledgeFilter, AllIsIdentity) {
  std::vector<VerifiedResponse> vs{response("m1", "a"), response("m2", "b")};
  EXPECT_EQ(knowledge_filter(vs, FilterMode::all, KnowledgeBase{}), vs);
}

TEST(KnowledgeFilter, PerModelUsesOwnKnowledge) {
  KnowledgeBase kb({knows("m1", "a", true), knows("m1", "b", false), knows("m2", "a", false), knows("m2", "b", true)});
  std::vector<VerifiedResponse> vs{response("m1", "a"), response("m1", "b"), response("m2", "a"), response("m2", "b")};
  EXPECT_EQ(ids(knowledge_filter(vs, FilterMode::per_model, kb)),
            (std::set<std::string>{"movie/bn-basic/a/m1", "movie/bn-basic/b/m2"}));
}

TEST(KnowledgeFilter, CommonIsTheIntersection) {
  KnowledgeBase kb;
  for (const auto& e : {"a", "b", "c"}) {
    kb.add(knows("m1", e, std::string(e) != "c"));
    kb.add(knows("m2", e, std::string(e) != "a"));
  }
  std::vector<VerifiedResponse> vs;
  for (const auto& m : {"m1", "m2"})
    for (const auto& e : {"a", "b", "c"}) vs.push_back(response(m, e));
  EXPECT_EQ(ids(knowledge_filter(vs, FilterMode::common, kb, 1)),
            (std::set<std::string>{"movie/bn-basic/b/m1", "movie/bn-basic/b/m2"}));
}

TEST(KnowledgeFilter, ModelsKnowingTooFewEntitiesDoNotVote) {
  KnowledgeBase kb;
  std::vector<VerifiedResponse> vs;
  for (int i = 0; i < 25; ++i) {
    std::string e = "e" + std::to_string(i);
    kb.add(knows("big", e, true));
    kb.add(knows("small", e, i < 5));
    vs.push_back(response("big", e));
    vs.push_back(response("small", e));
  }
  auto kept = knowledge_filter(vs, FilterMode::common, kb);
  EXPECT_EQ(kept.size(), 50u);
}

TEST(KnowledgeFilter, MissingRecordIsCoverageError) {
  KnowledgeBase kb({knows("m1", "a", true)});
  std::vector<VerifiedResponse> vs{response("m1", "a"), response("m1", "b")};
  EXPECT_THROW(knowledge_filter(vs, FilterMode::per_model, kb), CoverageError);
  EXPECT_THROW(knowledge_filter(vs, FilterMode::common, kb, 1), CoverageError);
  EXPECT_NO_THROW(knowledge_filter(vs, FilterMode::all, kb));
}

TEST(KnowledgeFilter, NestingAndBruteForceAgreement) {
  std::mt19937_64 rng(99);
  const std::vector<std::string> models{"m1", "m2", "m3"};
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t entities = 1 + rng() % 40;
    std::size_t threshold = rng() % 25;
    KnowledgeBase kb;
    std::map<std::pair<std::string, std::string>, bool> truth;
    std::vector<VerifiedResponse> vs;
    for (const auto& m : models) {
      unsigned p = rng() % 101;
      for (std::size_t i = 0; i < entities; ++i) {
        std::string e = "e" + std::to_string(i);
        bool k = rng() % 100 < p;
        truth[{m, e}] = k;
        kb.add(knows(m, e, k));
        vs.push_back(response(m, e));
      }
    }
    std::vector<std::string> voters;
    for (const auto& m : models) {
      std::size_t c = 0;
      for (std::size_t i = 0; i < entities; ++i) c += truth[{m, "e" + std::to_string(i)}];
      if (c >= threshold) voters.push_back(m);
    }
    std::set<std::string> expect_per, expect_common;
    for (const auto& v : vs) {
      const auto& e = v.entity_key[0].second;
      if (truth[{v.model, e}]) expect_per.insert(v.question_id);
      if (!voters.empty() &&
          std::all_of(voters.begin(), voters.end(), [&](const std::string& m) { return truth[{m, e}]; }))
        expect_common.insert(v.question_id);
    }
    auto all = ids(knowledge_filter(vs, FilterMode::all, kb, threshold));
    auto per = ids(knowledge_filter(vs, FilterMode::per_model, kb, threshold));
    auto common = ids(knowledge_filter(vs, FilterMode::common, kb, threshold));
    ASSERT_EQ(per, expect_per);
    ASSERT_EQ(common, expect_common);
    EXPECT_TRUE(std::includes(all.begin(), all.end(), per.begin(), per.end()));
    // Nesting holds for responses of voting models.
    for (const auto& id : common) {
      auto model = id.substr(id.rfind('/') + 1);
      if (std::find(voters.begin(), voters.end(), model) != voters.end()) EXPECT_TRUE(per.count(id));
    }
  }
}

TEST(FilterMode, Parses) {
  EXPECT_EQ(parse_filter_mode("per-model"), FilterMode::per_model);
  EXPECT_EQ(parse_filter_mode("common"), FilterMode::common);
  EXPECT_THROW(parse_filter_mode("some"), ConfigError);
}
