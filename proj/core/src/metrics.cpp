// SPDX-License-Identifier: Apache-2.0
#include "htgnn/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "htgnn/csv.hpp"

namespace htgnn {

namespace {

constexpr int kDecimals = 6;

std::string cell(double v) { return std::isnan(v) ? "NA" : csv::format_fixed(v, kDecimals); }

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

MetricsReport compute_metrics(std::span<const std::array<double, 2>> predicted,
                              std::span<const std::array<double, 2>> target, std::span<const std::size_t> case_ids,
                              std::span<const char> seen, std::span<const OperatingCondition> conditions) {
  if (predicted.empty()) throw DataError("metrics over an empty test set");
  if (predicted.size() != target.size() || predicted.size() != case_ids.size() || predicted.size() != seen.size()) {
    throw DimensionError("metrics inputs differ in length");
  }
  struct Acc {
    std::size_t n = 0;
    std::array<double, 2> abs{0.0, 0.0};
    std::array<double, 2> pct{0.0, 0.0};
    std::array<std::size_t, 2> pct_n{0, 0};
    bool seen = true;
  };
  std::map<std::size_t, Acc> by_case;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    auto& a = by_case[case_ids[i]];
    a.seen = seen[i] != 0;
    ++a.n;
    for (std::size_t k = 0; k < 2; ++k) {
      const double err = std::abs(predicted[i][k] - target[i][k]);
      a.abs[k] += err;
      if (std::abs(target[i][k]) >= kMapeFloorKn) {
        a.pct[k] += 100.0 * err / std::abs(target[i][k]);
        ++a.pct_n[k];
      }
    }
  }
  MetricsReport report;
  for (const auto& [id, a] : by_case) {
    if (id >= conditions.size()) throw DataError("no condition for case " + std::to_string(id));
    CaseMetrics m;
    m.case_id = id;
    m.condition = conditions[id];
    m.seen = a.seen;
    m.windows = a.n;
    m.mae_fx = a.abs[0] / static_cast<double>(a.n);
    m.mae_fy = a.abs[1] / static_cast<double>(a.n);
    m.mape_fx = a.pct_n[0] ? a.pct[0] / static_cast<double>(a.pct_n[0]) : nan();
    m.mape_fy = a.pct_n[1] ? a.pct[1] / static_cast<double>(a.pct_n[1]) : nan();
    report.cases.push_back(m);
  }
  std::vector<CaseMetrics> seen_cases, unseen_cases;
  for (const auto& c : report.cases) (c.seen ? seen_cases : unseen_cases).push_back(c);
  report.seen = aggregate(seen_cases);
  report.unseen = aggregate(unseen_cases);
  return report;
}

GroupMetrics aggregate(std::span<const CaseMetrics> cases) {
  GroupMetrics g;
  g.cases = cases.size();
  if (cases.empty()) {
    g.mae_fx = g.mae_fy = g.mape_fx = g.mape_fy = nan();
    return g;
  }
  std::size_t nx = 0, ny = 0;
  for (const auto& c : cases) {
    g.mae_fx += c.mae_fx;
    g.mae_fy += c.mae_fy;
    if (!std::isnan(c.mape_fx)) {
      g.mape_fx += c.mape_fx;
      ++nx;
    }
    if (!std::isnan(c.mape_fy)) {
      g.mape_fy += c.mape_fy;
      ++ny;
    }
  }
  const auto n = static_cast<double>(cases.size());
  g.mae_fx /= n;
  g.mae_fy /= n;
  g.mape_fx = nx ? g.mape_fx / static_cast<double>(nx) : nan();
  g.mape_fy = ny ? g.mape_fy / static_cast<double>(ny) : nan();
  return g;
}

std::vector<std::array<double, 2>> predict_kn(LoadModel& model, const Normalization& norm,
                                              std::span<const WindowSample> windows,
                                              std::span<const std::size_t> indices, std::size_t batch_size) {
  std::vector<WindowSample> standardized;
  standardized.reserve(indices.size());
  for (auto i : indices) standardized.push_back(norm.apply(windows[i]));
  std::vector<std::size_t> all(standardized.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto out = predict_standardized(model, standardized, all, batch_size);
  for (auto& p : out) p = norm.decode_target(p);
  return out;
}

MetricsReport evaluate(LoadModel& model, const Normalization& norm, std::span<const WindowSample> windows,
                       std::span<const std::size_t> test_idx, std::span<const OperatingCondition> conditions,
                       std::size_t batch_size) {
  if (test_idx.empty()) throw DataError("evaluation on an empty test set");
  const auto predicted = predict_kn(model, norm, windows, test_idx, batch_size);
  std::vector<std::array<double, 2>> target;
  std::vector<std::size_t> case_ids;
  std::vector<char> seen;
  for (auto i : test_idx) {
    target.push_back(windows[i].load);
    case_ids.push_back(windows[i].case_id);
    seen.push_back(windows[i].seen ? 1 : 0);
  }
  return compute_metrics(predicted, target, case_ids, seen, conditions);
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
  auto out = open(path);
  out << "case_id,F_x,F_y,speed,seen,mae_fx,mae_fy,mape_fx,mape_fy\n";
  for (bool block : {true, false}) {
    for (const auto& c : report.cases) {
      if (c.seen != block) continue;
      out << c.case_id << ',' << csv::format(c.condition.axial_kn) << ',' << csv::format(c.condition.radial_kn)
          << ',' << csv::format(c.condition.speed_rpm) << ',' << (c.seen ? 1 : 0) << ',' << cell(c.mae_fx) << ','
          << cell(c.mae_fy) << ',' << cell(c.mape_fx) << ',' << cell(c.mape_fy) << '\n';
    }
  }
}

void write_summary_csv(const std::filesystem::path& path, const MetricsReport& report) {
  auto out = open(path);
  out << "group,cases,mae_fx,mae_fy,mape_fx,mape_fy\n";
  auto row = [&](const char* name, const GroupMetrics& g) {
    out << name << ',' << g.cases << ',' << cell(g.mae_fx) << ',' << cell(g.mae_fy) << ',' << cell(g.mape_fx) << ','
        << cell(g.mape_fy) << '\n';
  };
  row("seen", report.seen);
  row("unseen", report.unseen);
}

void write_plot_csv(const std::filesystem::path& path, const MetricsReport& report, std::string_view model) {
  auto out = open(path);
  out << "model,condition,F_x,F_y,speed,unseen,mape_fx,mape_fy\n";
  for (const auto& c : report.cases) {
    out << model << ",Fx" << csv::format(c.condition.axial_kn) << "_Fy" << csv::format(c.condition.radial_kn)
        << "_w" << csv::format(c.condition.speed_rpm) << ',' << csv::format(c.condition.axial_kn) << ','
        << csv::format(c.condition.radial_kn) << ',' << csv::format(c.condition.speed_rpm) << ','
        << (c.seen ? 0 : 1) << ',' << cell(c.mape_fx) << ',' << cell(c.mape_fy) << '\n';
  }
}

RepeatSummary summarize_runs(std::span<const MetricsReport> runs) {
  if (runs.empty()) throw DataError("no runs to summarize");
  RepeatSummary s;
  s.runs = runs.size();
  auto stats = [&](auto field) {
    MeanStd m;
    for (const auto& r : runs) m.mean += field(r);
    m.mean /= static_cast<double>(runs.size());
    if (runs.size() > 1) {
      double ss = 0.0;
      for (const auto& r : runs) ss += (field(r) - m.mean) * (field(r) - m.mean);
      m.std = std::sqrt(ss / static_cast<double>(runs.size() - 1));
    }
    return m;
  };
  s.seen = {stats([](const MetricsReport& r) { return r.seen.mae_fx; }),
            stats([](const MetricsReport& r) { return r.seen.mae_fy; }),
            stats([](const MetricsReport& r) { return r.seen.mape_fx; }),
            stats([](const MetricsReport& r) { return r.seen.mape_fy; })};
  s.unseen = {stats([](const MetricsReport& r) { return r.unseen.mae_fx; }),
              stats([](const MetricsReport& r) { return r.unseen.mae_fy; }),
              stats([](const MetricsReport& r) { return r.unseen.mape_fx; }),
              stats([](const MetricsReport& r) { return r.unseen.mape_fy; })};
  return s;
}

void write_repeat_summary_csv(const std::filesystem::path& path, const RepeatSummary& summary,
                              std::string_view model) {
  auto out = open(path);
  out << "model,group,metric,mean,std,runs\n";
  const char* names[] = {"mae_fx", "mae_fy", "mape_fx", "mape_fy"};
  for (std::size_t k = 0; k < 4; ++k) {
    out << model << ",seen," << names[k] << ',' << cell(summary.seen[k].mean) << ',' << cell(summary.seen[k].std)
        << ',' << summary.runs << '\n';
  }
  for (std::size_t k = 0; k < 4; ++k) {
    out << model << ",unseen," << names[k] << ',' << cell(summary.unseen[k].mean) << ','
        << cell(summary.unseen[k].std) << ',' << summary.runs << '\n';
  }
}

}  // namespace htgnn
