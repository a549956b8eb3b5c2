#include "relbench/metrics.hpp"

#include "relbench/error.hpp"

#include <cmath>
#include <cstdio>

namespace relbench {

MetricReport aggregate(const std::vector<VerifiedResponse>& verified) {
  if (verified.empty()) throw GroupingError("cannot aggregate an empty group");
  std::size_t a = 0, r = 0, ar = 0, m = 0;
  for (const auto& v : verified) {
    bool rationale = v.rationale.all_hit();
    a += v.answer_correct;
    r += rationale;
    ar += v.answer_correct && rationale;
    m += v.abstained;
  }
  const double n = static_cast<double>(verified.size());
  MetricReport out;
  out.n = verified.size();
  out.A = static_cast<double>(a) / n;
  out.R = static_cast<double>(r) / n;
  out.AR = static_cast<double>(ar) / n;
  out.M = static_cast<double>(m) / n;
  // Counting the hallucinated responses keeps A + H + M exact.
  out.H = static_cast<double>(verified.size() - a - m) / n;
  return out;
}

HopMetrics hop_metrics(const std::vector<VerifiedResponse>& verified, int hop_count) {
  if (verified.empty()) throw GroupingError("cannot compute hop metrics of an empty group");
  if (hop_count < 1) throw GroupingError("hop count must be positive");
  const auto hops = static_cast<std::size_t>(hop_count);
  for (const auto& v : verified) {
    if (v.rationale.hop_hits.size() != hops) {
      throw GroupingError("response " + v.question_id + " has " + std::to_string(v.rationale.hop_hits.size()) +
                          " hops, group has " + std::to_string(hop_count));
    }
  }

  std::vector<std::size_t> hits(hops, 0), ar(hops, 0);
  std::vector<std::size_t> both(hops, 0), cond_den(hops, 0), miss_then_hit(hops, 0);
  for (const auto& v : verified) {
    const auto& h = v.rationale.hop_hits;
    for (std::size_t i = 0; i < hops; ++i) {
      hits[i] += h[i];
      ar[i] += v.answer_correct && h[i];
      if (i + 1 < hops) {
        if (h[i]) {
          ++cond_den[i];
          both[i] += h[i + 1];
        } else {
          miss_then_hit[i] += h[i + 1];
        }
      }
    }
  }

  HopMetrics out;
  out.hop_count = hop_count;
  const std::size_t n = verified.size();
  double sum = 0;
  for (std::size_t i = 0; i < hops; ++i) {
    out.hop_fraction.push_back(Ratio::of(hits[i], n));
    out.AR_ext.push_back(Ratio::of(ar[i], n));
    sum += out.hop_fraction.back().value;
    if (i + 1 < hops) {
      out.cond_given_correct.push_back(Ratio::of(both[i], cond_den[i]));
      out.cond_given_incorrect.push_back(Ratio::of(miss_then_hit[i], n - cond_den[i]));
    }
  }
  out.R_ext = sum / static_cast<double>(hops);
  return out;
}

std::string format_metric(double x) {
  // The epsilon absorbs binary representation error (.805 is stored just
  // below itself).
  double hundredths = std::floor(std::fabs(x) * 100.0 + 0.5 + 1e-9);
  if (x < 0) hundredths = -hundredths;
  if (hundredths >= 100) return "1.0";
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", hundredths / 100.0);
  std::string s(buf);
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  else if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
  return s;
}

std::string format_ratio(const Ratio& r) { return r.defined() ? format_metric(r.value) : "n/a"; }

Json to_json(const Ratio& r) {
  Json j{{"value", r.value}, {"num", r.num}, {"den", r.den}};
  if (!r.defined()) j["flag"] = "n/a";
  return j;
}

Json to_json(const MetricReport& m) {
  return Json{{"A", m.A}, {"R", m.R}, {"AR", m.AR}, {"H", m.H}, {"M", m.M}, {"n", m.n}};
}

Json to_json(const HopMetrics& h) {
  auto list = [](const std::vector<Ratio>& rs) {
    Json a = Json::array();
    for (const auto& r : rs) a.push_back(to_json(r));
    return a;
  };
  return Json{{"hop_count", h.hop_count},
              {"R_ext", h.R_ext},
              {"hop_fraction", list(h.hop_fraction)},
              {"AR_ext", list(h.AR_ext)},
              {"cond_given_correct", list(h.cond_given_correct)},
              {"cond_given_incorrect", list(h.cond_given_incorrect)}};
}

}  // namespace relbench
