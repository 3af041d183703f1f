// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "htgnn/model.hpp"
#include "htgnn/rigsim.hpp"
#include "htgnn/sample.hpp"
#include "htgnn/training.hpp"

namespace htgnn {

/// Targets below this magnitude (kN) are left out of MAPE.
inline constexpr double kMapeFloorKn = 1.0;

struct CaseMetrics {
  std::size_t case_id = 0;
  OperatingCondition condition;
  bool seen = true;
  std::size_t windows = 0;
  double mae_fx = 0.0;  // kN
  double mae_fy = 0.0;
  double mape_fx = 0.0;  // %, NaN when every target is below the floor
  double mape_fy = 0.0;
};

/// Unweighted mean over the cases of a group; MAPE skips NaN cases.
struct GroupMetrics {
  std::size_t cases = 0;
  double mae_fx = 0.0;
  double mae_fy = 0.0;
  double mape_fx = 0.0;
  double mape_fy = 0.0;
};

struct MetricsReport {
  std::vector<CaseMetrics> cases;  // ascending case id
  GroupMetrics seen;
  GroupMetrics unseen;
};

/// Per-case MAE/MAPE from predictions and targets in kN. `case_ids[i]`,
/// `seen[i]` describe window i; `conditions` is indexed by case id.
MetricsReport compute_metrics(std::span<const std::array<double, 2>> predicted,
                              std::span<const std::array<double, 2>> target, std::span<const std::size_t> case_ids,
                              std::span<const char> seen, std::span<const OperatingCondition> conditions);

GroupMetrics aggregate(std::span<const CaseMetrics> cases);

/// Predictions in kN for raw (unstandardized) windows.
std::vector<std::array<double, 2>> predict_kn(LoadModel& model, const Normalization& norm,
                                              std::span<const WindowSample> windows,
                                              std::span<const std::size_t> indices, std::size_t batch_size);

/// Runs the model on raw test windows. Throws DataError on an empty test set.
MetricsReport evaluate(LoadModel& model, const Normalization& norm, std::span<const WindowSample> windows,
                       std::span<const std::size_t> test_idx, std::span<const OperatingCondition> conditions,
                       std::size_t batch_size);

/// case_id, F_x, F_y, speed, seen, mae_fx, mae_fy, mape_fx, mape_fy; seen cases first.
void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);
/// group, cases, mae_fx, mae_fy, mape_fx, mape_fy for the seen and unseen groups.
void write_summary_csv(const std::filesystem::path& path, const MetricsReport& report);
/// One row per condition with its MAPE bars and unseen marker.
void write_plot_csv(const std::filesystem::path& path, const MetricsReport& report, std::string_view model);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
};

struct RepeatSummary {
  std::size_t runs = 0;
  std::array<MeanStd, 4> seen;    // mae_fx, mae_fy, mape_fx, mape_fy
  std::array<MeanStd, 4> unseen;
};

RepeatSummary summarize_runs(std::span<const MetricsReport> runs);
void write_repeat_summary_csv(const std::filesystem::path& path, const RepeatSummary& summary,
                              std::string_view model);

}  // namespace htgnn
