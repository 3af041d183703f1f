// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "htgnn/sample.hpp"

namespace htgnn {

struct SplitConfig {
  std::size_t holdout = 12;          // unseen conditions, test only
  double train_share = 0.55;         // target share of all windows in train + validation
  double validation_fraction = 0.2;  // of the train + validation windows
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SplitConfig from_json(const nlohmann::json& j);
};

/// Condition-level plan. Every seen condition contributes the head of its
/// recording to train/validation and the tail to test; unseen conditions are
/// test only.
struct SplitPlan {
  std::vector<std::size_t> seen;    // ascending condition ids
  std::vector<std::size_t> unseen;  // ascending condition ids
  /// Fraction of each seen recording (by time) given to train/validation.
  double seen_head_fraction = 0.0;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;

  bool is_unseen(std::size_t condition) const;
  std::vector<std::size_t> train_conditions() const { return seen; }
  /// All conditions, ascending.
  std::vector<std::size_t> test_conditions() const;
};

/// Throws ConfigError when holdout >= conditions or the requested train share
/// cannot be met by the remaining seen conditions.
SplitPlan make_split(std::size_t conditions, const SplitConfig& cfg);

struct WindowAssignment {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

/// Indices into `windows`. `case_length[c]` is the processed length of case c.
/// Windows straddling a seen case's head/tail boundary are dropped.
WindowAssignment assign_windows(std::span<const WindowSample> windows, std::span<const std::size_t> case_length,
                                const SplitPlan& plan);

}  // namespace htgnn
