#pragma once

#include "relbench/knowledge_probe.hpp"
#include "relbench/metrics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace relbench {

/// One (model, dataset, column) cell block of the report.
struct ReportGroup {
  std::string model;
  std::string dataset;
  std::string column;
  QuestionType qtype = QuestionType::binary_basic;
  int hop_count = 1;
  /// Responses before and after knowledge filtering.
  std::size_t total = 0;
  std::size_t n = 0;
  /// Set when the group is rendered "n/a"; metrics are then absent.
  std::optional<std::string> na_reason;
  std::optional<MetricReport> metrics;
  /// Multi-hop groups only.
  std::optional<HopMetrics> hops;
};

struct SweepPoint {
  std::string model;
  std::string dataset;
  double fraction = 0.0;
  Ratio accuracy;
};

struct Report {
  FilterMode filter = FilterMode::all;
  std::vector<ReportGroup> groups;
  std::vector<SweepPoint> sweep;
};

/// Groups by model, dataset and report column (BN(Y), BN(N), MC, MC@nota=f,
/// MH(Y)[chain], MH(N)[chain]) and applies the knowledge filter. Under
/// per_model and common a model that knows fewer than `min_known` entities
/// of a dataset gets "n/a" there. Throws PreconditionError on empty input.
Report build_report(const std::vector<VerifiedResponse>& verified, FilterMode filter, const KnowledgeBase& knowledge,
                    std::size_t min_known = kMinKnownEntities);

Json to_json(const Report& report);
/// One line per group: model, dataset, column, n, A R AR H M.
std::string render_text(const Report& report);
/// Rows are model x metric, columns dataset x column, followed by a per-hop
/// block for every multi-hop group.
std::string render_markdown(const Report& report);
/// "model,dataset,fraction,accuracy,n" series of the NOTA columns.
std::string render_sweep_csv(const Report& report);

/// Writes report.json, report.md, report.txt and nota_sweep.csv. Throws
/// IoError.
void write_report(const Report& report, const std::filesystem::path& dir, const Json& header);

}  // namespace relbench
