#include "relbench/error.hpp"
#include "relbench/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace relbench;

namespace {

VerifiedResponse make(bool correct, bool abstained, std::vector<bool> hits) {
  VerifiedResponse v;
  v.answer = abstained ? Answer::unsure() : (correct ? Answer::yes() : Answer::no());
  v.answer_correct = correct;
  v.abstained = abstained;
  v.hop_count = static_cast<int>(hits.size());
  v.rationale.hop_hits = hits;
  v.rationale.matched_forms.assign(hits.size(), "");
  return v;
}

VerifiedResponse random_response(std::mt19937_64& rng, int hops) {
  unsigned kind = rng() % 3;
  std::vector<bool> hits;
  for (int i = 0; i < hops; ++i) hits.push_back(rng() % 2);
  return make(kind == 0, kind == 1, hits);
}

// Straight counting, no shared code with the implementation.
struct Counts {
  std::size_t num = 0, den = 0;
};

Counts count_if(const std::vector<VerifiedResponse>& vs, auto pred_den, auto pred_num) {
  Counts c;
  for (const auto& v : vs) {
    if (!pred_den(v)) continue;
    ++c.den;
    if (pred_num(v)) ++c.num;
  }
  return c;
}

void expect_ratio(const Ratio& r, Counts c) {
  EXPECT_EQ(r.num, c.num);
  EXPECT_EQ(r.den, c.den);
  EXPECT_EQ(r.defined(), c.den >= kMinDenominator);
  if (c.den > 0) EXPECT_DOUBLE_EQ(r.value, static_cast<double>(c.num) / c.den);
}

}  // namespace

TEST(Aggregate, TenResponseExample) {
  std::vector<VerifiedResponse> vs;
  for (int i = 0; i < 8; ++i) vs.push_back(make(true, false, {true}));
  vs.push_back(make(false, true, {false}));
  vs.push_back(make(false, false, {false}));
  auto m = aggregate(vs);
  EXPECT_DOUBLE_EQ(m.A, .8);
  EXPECT_DOUBLE_EQ(m.R, .8);
  EXPECT_DOUBLE_EQ(m.AR, .8);
  EXPECT_DOUBLE_EQ(m.M, .1);
  EXPECT_NEAR(m.H, .1, 1e-12);
  EXPECT_EQ(m.n, 10u);
}

TEST(Aggregate, OracleAndAbstainerExtremes) {
  std::vector<VerifiedResponse> oracle(5, make(true, false, {true, true}));
  auto o = aggregate(oracle);
  EXPECT_EQ(o.A, 1.0);
  EXPECT_EQ(o.R, 1.0);
  EXPECT_EQ(o.AR, 1.0);
  EXPECT_EQ(o.H, 0.0);
  EXPECT_EQ(o.M, 0.0);
  std::vector<VerifiedResponse> abstainer(5, make(false, true, {false}));
  auto a = aggregate(abstainer);
  EXPECT_EQ(a.M, 1.0);
  EXPECT_EQ(a.H, 0.0);
  EXPECT_EQ(a.A, 0.0);
}

TEST(Aggregate, EmptyGroupIsGroupingError) { EXPECT_THROW(aggregate({}), GroupingError); }

TEST(Aggregate, MultihopRNeedsEveryHop) {
  auto m = aggregate({make(true, false, {true, false}), make(true, false, {true, true})});
  EXPECT_DOUBLE_EQ(m.R, .5);
  EXPECT_DOUBLE_EQ(m.AR, .5);
}

TEST(Aggregate, IdentitiesOnRandomGroups) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10000; ++trial) {
    int hops = 1 + static_cast<int>(rng() % 3);
    std::size_t n = 1 + rng() % 30;
    std::vector<VerifiedResponse> vs;
    for (std::size_t i = 0; i < n; ++i) vs.push_back(random_response(rng, hops));
    auto m = aggregate(vs);
    ASSERT_NEAR(m.A + m.H + m.M, 1.0, 1e-12);
    ASSERT_LE(m.AR, std::min(m.A, m.R));
    for (double x : {m.A, m.R, m.AR, m.H, m.M}) {
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, 1.0);
    }
    std::shuffle(vs.begin(), vs.end(), rng);
    ASSERT_EQ(aggregate(vs), m);
  }
}

TEST(HopMetrics, FourResponseExample) {
  std::vector<VerifiedResponse> vs{make(true, false, {true, true}), make(true, false, {true, false}),
                                   make(true, false, {false, false}), make(true, false, {true, true})};
  auto h = hop_metrics(vs, 2);
  EXPECT_DOUBLE_EQ(h.R_ext, .625);
  ASSERT_EQ(h.cond_given_correct.size(), 1u);
  EXPECT_EQ(h.cond_given_correct[0].num, 2u);
  EXPECT_EQ(h.cond_given_correct[0].den, 3u);
  EXPECT_DOUBLE_EQ(h.cond_given_correct[0].value, 2.0 / 3.0);
  // Three conditioning responses fall under the minimum denominator.
  EXPECT_FALSE(h.cond_given_correct[0].defined());
  EXPECT_EQ(h.cond_given_incorrect[0].num, 0u);
  EXPECT_EQ(h.cond_given_incorrect[0].den, 1u);
  EXPECT_FALSE(h.cond_given_incorrect[0].defined());
}

TEST(HopMetrics, AllHitsGiveOnes) {
  std::vector<VerifiedResponse> vs(6, make(true, false, {true, true, true}));
  auto h = hop_metrics(vs, 3);
  EXPECT_EQ(h.R_ext, 1.0);
  for (const auto& c : h.cond_given_correct) {
    EXPECT_TRUE(c.defined());
    EXPECT_EQ(c.value, 1.0);
  }
  for (const auto& c : h.cond_given_incorrect) EXPECT_FALSE(c.defined());
}

TEST(HopMetrics, MixedHopCountsRejected) {
  EXPECT_THROW(hop_metrics({make(true, false, {true}), make(true, false, {true, true})}, 2), GroupingError);
  EXPECT_THROW(hop_metrics({}, 2), GroupingError);
}

TEST(HopMetrics, AgreesWithBruteForce) {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 1000; ++trial) {
    int hops = 2 + static_cast<int>(rng() % 3);
    std::size_t n = 1 + rng() % 60;
    std::vector<VerifiedResponse> vs;
    for (std::size_t i = 0; i < n; ++i) vs.push_back(random_response(rng, hops));
    auto h = hop_metrics(vs, hops);
    ASSERT_EQ(h.AR_ext.size(), static_cast<std::size_t>(hops));
    ASSERT_EQ(h.hop_fraction.size(), static_cast<std::size_t>(hops));
    ASSERT_EQ(h.cond_given_correct.size(), static_cast<std::size_t>(hops - 1));
    ASSERT_EQ(h.cond_given_incorrect.size(), static_cast<std::size_t>(hops - 1));
    auto any = [](const VerifiedResponse&) { return true; };
    double mean = 0;
    double a = aggregate(vs).A;
    for (int i = 0; i < hops; ++i) {
      auto hit = [i](const VerifiedResponse& v) { return static_cast<bool>(v.rationale.hop_hits[i]); };
      auto frac = count_if(vs, any, hit);
      expect_ratio(h.hop_fraction[i], frac);
      expect_ratio(h.AR_ext[i], count_if(vs, any, [&](const VerifiedResponse& v) { return v.answer_correct && hit(v); }));
      ASSERT_LE(h.AR_ext[i].value, a + 1e-15);
      ASSERT_LE(h.AR_ext[i].value, h.hop_fraction[i].value + 1e-15);
      mean += static_cast<double>(frac.num) / frac.den;
      if (i + 1 < hops) {
        auto next = [i](const VerifiedResponse& v) { return static_cast<bool>(v.rationale.hop_hits[i + 1]); };
        expect_ratio(h.cond_given_correct[i], count_if(vs, hit, next));
        expect_ratio(h.cond_given_incorrect[i], count_if(vs, [&](const VerifiedResponse& v) { return !hit(v); }, next));
        // Total probability over the conditioning hop, where both sides are populated.
        const auto& c = h.cond_given_correct[i];
        const auto& ic = h.cond_given_incorrect[i];
        if (c.den > 0 && ic.den > 0) {
          double f = h.hop_fraction[i].value;
          ASSERT_NEAR(h.hop_fraction[i + 1].value, c.value * f + ic.value * (1 - f), 1e-12);
        }
      }
    }
    ASSERT_NEAR(h.R_ext, mean / hops, 1e-12);
  }
}

TEST(Rounding, HalfAwayFromZero) {
  EXPECT_EQ(format_metric(.85), ".85");
  EXPECT_EQ(format_metric(.805), ".81");
  EXPECT_EQ(format_metric(.125), ".13");
  EXPECT_EQ(format_metric(0.0), ".00");
  EXPECT_EQ(format_metric(1.0), "1.0");
  EXPECT_EQ(format_metric(.999), "1.0");
  EXPECT_EQ(format_metric(2.0 / 3.0), ".67");
}

TEST(Rounding, RatioCellsShowNaBelowMinimum) {
  EXPECT_EQ(format_ratio(Ratio::of(2, 3)), "n/a");
  EXPECT_EQ(format_ratio(Ratio::of(3, 4)), ".75");
  EXPECT_EQ(format_ratio(Ratio::of(0, 0)), "n/a");
}
