#pragma once

#include "relbench/verifier.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace relbench {

/// Conditional and per-hop entries are hidden when fewer responses than this
/// form their denominator.
inline constexpr std::size_t kMinDenominator = 4;

struct Ratio {
  double value = 0.0;
  std::size_t num = 0;
  std::size_t den = 0;

  static Ratio of(std::size_t num, std::size_t den) {
    return {den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den), num, den};
  }
  bool defined(std::size_t min_den = kMinDenominator) const { return den >= min_den && den > 0; }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

struct MetricReport {
  double A = 0, R = 0, AR = 0, H = 0, M = 0;
  std::size_t n = 0;
  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

struct HopMetrics {
  int hop_count = 0;
  double R_ext = 0;
  std::vector<Ratio> hop_fraction;
  /// Per hop, not cumulative: correct answer and a hit at that hop.
  std::vector<Ratio> AR_ext;
  /// Pr(r[i+1] | r[i]) and Pr(r[i+1] | not r[i]).
  std::vector<Ratio> cond_given_correct;
  std::vector<Ratio> cond_given_incorrect;
  friend bool operator==(const HopMetrics&, const HopMetrics&) = default;
};

/// R is the all-hops reading. Throws GroupingError on an empty group.
MetricReport aggregate(const std::vector<VerifiedResponse>& verified);

/// Throws GroupingError when the group is empty or a response has a
/// different hop count.
HopMetrics hop_metrics(const std::vector<VerifiedResponse>& verified, int hop_count);

/// Two decimals, half away from zero, leading zero dropped: ".85", ".00";
/// values that round to one render "1.0".
std::string format_metric(double x);
/// format_metric of the value, or "n/a" below the minimum denominator.
std::string format_ratio(const Ratio& r);

Json to_json(const Ratio& r);
Json to_json(const MetricReport& m);
Json to_json(const HopMetrics& h);

}  // namespace relbench
