#include "relbench/report.hpp"

#include "relbench/error.hpp"

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

constexpr std::string_view kNotaMarker = "@nota=";

using GroupKey = std::tuple<std::string, std::string, int, std::string>;  // model, dataset, qtype rank, column

std::optional<double> nota_fraction_of(const std::string& column) {
  const auto pos = column.find(kNotaMarker);
  if (pos == std::string::npos) return std::nullopt;
  return std::stod(column.substr(pos + kNotaMarker.size()));
}

std::string fmt_g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string cell(const ReportGroup& g, double MetricReport::*field) {
  if (!g.metrics) return "n/a";
  return format_metric((*g.metrics).*field);
}

struct MetricRow {
  const char* name;
  double MetricReport::*field;
};
constexpr MetricRow kMetricRows[] = {
    {"A", &MetricReport::A}, {"R", &MetricReport::R}, {"AR", &MetricReport::AR},
    {"H", &MetricReport::H}, {"M", &MetricReport::M}};

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  out.flush();
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

Report build_report(const std::vector<VerifiedResponse>& verified, FilterMode filter, const KnowledgeBase& knowledge,
                    std::size_t min_known) {
  if (verified.empty()) throw PreconditionError("report needs at least one verified response");

  std::map<GroupKey, std::vector<VerifiedResponse>> all_groups;
  for (const auto& v : verified) {
    all_groups[{v.model, v.dataset, static_cast<int>(v.qtype), v.column}].push_back(v);
  }
  std::map<GroupKey, std::vector<VerifiedResponse>> kept;
  for (auto& v : knowledge_filter(verified, filter, knowledge, min_known)) {
    GroupKey key{v.model, v.dataset, static_cast<int>(v.qtype), v.column};
    kept[key].push_back(std::move(v));
  }

  Report report;
  report.filter = filter;
  for (const auto& [key, members] : all_groups) {
    ReportGroup g;
    g.model = std::get<0>(key);
    g.dataset = std::get<1>(key);
    g.column = std::get<3>(key);
    g.qtype = members.front().qtype;
    g.hop_count = members.front().hop_count;
    g.total = members.size();
    auto it = kept.find(key);
    g.n = it == kept.end() ? 0 : it->second.size();

    if (filter != FilterMode::all && knowledge.known_count(g.model, g.dataset) < min_known) {
      g.na_reason = "model knows fewer than " + std::to_string(min_known) + " entities of the dataset";
    } else if (g.n == 0) {
      g.na_reason = "no responses left after knowledge filtering";
    } else {
      g.metrics = aggregate(it->second);
      if (g.hop_count > 1) g.hops = hop_metrics(it->second, g.hop_count);
    }

    if (auto f = nota_fraction_of(g.column)) {
      const std::size_t correct = g.metrics ? static_cast<std::size_t>(
                                                  std::count_if(it->second.begin(), it->second.end(),
                                                                [](const auto& v) { return v.answer_correct; }))
                                            : 0;
      report.sweep.push_back({g.model, g.dataset, *f, Ratio::of(correct, g.metrics ? g.n : 0)});
    }
    report.groups.push_back(std::move(g));
  }
  std::stable_sort(report.sweep.begin(), report.sweep.end(), [](const SweepPoint& a, const SweepPoint& b) {
    return std::tie(a.model, a.dataset, a.fraction) < std::tie(b.model, b.dataset, b.fraction);
  });
  return report;
}

Json to_json(const Report& report) {
  Json groups = Json::array();
  for (const auto& g : report.groups) {
    Json j{{"model", g.model},     {"dataset", g.dataset}, {"column", g.column}, {"qtype", to_string(g.qtype)},
           {"hop_count", g.hop_count}, {"total", g.total},     {"n", g.n}};
    if (g.na_reason) {
      j["flag"] = "n/a";
      j["reason"] = *g.na_reason;
      j["metrics"] = nullptr;
    } else {
      j["metrics"] = to_json(*g.metrics);
    }
    if (g.hops) j["hops"] = to_json(*g.hops);
    groups.push_back(std::move(j));
  }
  Json sweep = Json::array();
  for (const auto& p : report.sweep) {
    sweep.push_back({{"model", p.model}, {"dataset", p.dataset}, {"fraction", p.fraction},
                     {"accuracy", to_json(p.accuracy)}});
  }
  return Json{{"filter", to_string(report.filter)}, {"groups", std::move(groups)}, {"nota_sweep", std::move(sweep)}};
}

std::string render_text(const Report& report) {
  std::size_t wm = 5, wd = 7, wc = 6;
  for (const auto& g : report.groups) {
    wm = std::max(wm, g.model.size());
    wd = std::max(wd, g.dataset.size());
    wc = std::max(wc, g.column.size());
  }
  std::ostringstream out;
  out << "filter: " << to_string(report.filter) << "\n";
  out << pad("model", wm) << "  " << pad("dataset", wd) << "  " << pad("column", wc) << "  " << pad("n", 6)
      << "  A   R   AR  H   M\n";
  for (const auto& g : report.groups) {
    out << pad(g.model, wm) << "  " << pad(g.dataset, wd) << "  " << pad(g.column, wc) << "  "
        << pad(std::to_string(g.n), 6) << "  ";
    for (std::size_t i = 0; i < std::size(kMetricRows); ++i) {
      out << (i ? " " : "") << cell(g, kMetricRows[i].field);
    }
    out << "\n";
  }
  return out.str();
}

std::string render_markdown(const Report& report) {
  std::set<std::tuple<std::string, int, std::string>> column_set;
  std::vector<std::string> models;
  std::map<std::tuple<std::string, std::string, std::string>, const ReportGroup*> by_cell;
  for (const auto& g : report.groups) {
    column_set.insert({g.dataset, static_cast<int>(g.qtype), g.column});
    if (std::find(models.begin(), models.end(), g.model) == models.end()) models.push_back(g.model);
    by_cell[{g.model, g.dataset, g.column}] = &g;
  }
  std::vector<std::pair<std::string, std::string>> columns;
  for (const auto& [ds, rank, col] : column_set) columns.emplace_back(ds, col);

  std::ostringstream out;
  out << "# Results (filter: " << to_string(report.filter) << ")\n\n";
  out << "| Model | Metric |";
  for (const auto& [ds, col] : columns) out << " " << ds << " " << col << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) out << "---|";
  out << "\n";
  for (const auto& m : models) {
    for (const auto& row : kMetricRows) {
      out << "| " << m << " | " << row.name << " |";
      for (const auto& [ds, col] : columns) {
        auto it = by_cell.find({m, ds, col});
        out << " " << (it == by_cell.end() ? std::string("") : cell(*it->second, row.field)) << " |";
      }
      out << "\n";
    }
  }
  out << "\nn per cell:";
  for (const auto& g : report.groups) out << " " << g.model << "/" << g.dataset << "/" << g.column << "=" << g.n;
  out << "\n";

  for (const auto& g : report.groups) {
    if (!g.hops) continue;
    const auto& h = *g.hops;
    out << "\n### " << g.model << " hops: " << g.dataset << " " << g.column << "\n\n";
    out << "R_ext: " << format_metric(h.R_ext) << "\n\n";
    out << "| Hop | R | AR | Pr(next hit given hit) | Pr(next hit given miss) |\n|---|---|---|---|---|\n";
    for (int i = 0; i < h.hop_count; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      out << "| " << i + 1 << " | " << format_ratio(h.hop_fraction[idx]) << " | " << format_ratio(h.AR_ext[idx])
          << " | " << (idx < h.cond_given_correct.size() ? format_ratio(h.cond_given_correct[idx]) : "")
          << " | " << (idx < h.cond_given_incorrect.size() ? format_ratio(h.cond_given_incorrect[idx]) : "")
          << " |\n";
    }
  }
  return out.str();
}

std::string render_sweep_csv(const Report& report) {
  std::string out = "model,dataset,fraction,accuracy,n\n";
  for (const auto& p : report.sweep) {
    out += p.model + "," + p.dataset + "," + fmt_g(p.fraction) + "," +
           (p.accuracy.den ? fmt_g(p.accuracy.value) : std::string("n/a")) + "," + std::to_string(p.accuracy.den) +
           "\n";
  }
  return out;
}

void write_report(const Report& report, const fs::path& dir, const Json& header) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create report directory " + dir.string());
  Json j{{"_header", header}};
  const Json body = to_json(report);
  for (const auto& [k, v] : body.items()) j[k] = v;
  write_file(dir / "report.json", j.dump(2) + "\n");
  write_file(dir / "report.md", render_markdown(report));
  write_file(dir / "report.txt", render_text(report));
  write_file(dir / "nota_sweep.csv", render_sweep_csv(report));
}

}  // namespace relbench
