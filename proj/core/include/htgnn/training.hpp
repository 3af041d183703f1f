// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "htgnn/model.hpp"
#include "htgnn/optim.hpp"
#include "htgnn/sample.hpp"

namespace htgnn {

/// Scalar mean/std per input group and per target component, fitted on
/// training windows only.
struct Normalization {
  std::array<double, 3> input_mean{0.0, 0.0, 0.0};  // temperature, vibration, speed
  std::array<double, 3> input_std{1.0, 1.0, 1.0};
  std::array<double, 2> target_mean{0.0, 0.0};
  std::array<double, 2> target_std{1.0, 1.0};

  static Normalization fit(std::span<const WindowSample> windows, std::span<const std::size_t> indices);

  /// Standardized copy; the target is standardized as well.
  WindowSample apply(const WindowSample& s) const;
  std::array<double, 2> decode_target(std::array<double, 2> z) const;

  nlohmann::json to_json() const;
  static Normalization from_json(const nlohmann::json& j);
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  std::size_t batch_size = 512;
  std::size_t max_epochs = 50;
  /// First epoch at which early stopping may end training.
  std::size_t early_stopping_start = 30;
  std::size_t patience = 10;
  std::uint64_t seed = 0;

  void validate() const;
  AdamWOptions optimizer() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Tracks validation improvement; epochs are 1-based.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, std::size_t start_epoch) : patience_(patience), start_(start_epoch) {}

  /// Records the validation loss of `epoch`; true when it is a new best.
  bool update(std::size_t epoch, double validation_loss);
  bool should_stop(std::size_t epoch) const;

  double best_loss() const { return best_; }
  std::size_t best_epoch() const { return best_epoch_; }
  std::size_t epochs_since_improvement() const { return since_; }

 private:
  std::size_t patience_;
  std::size_t start_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t since_ = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  bool best = false;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
};

/// Mini-batch AdamW on the L1 loss over standardized windows. Parameters are
/// initialized from cfg.seed; the best-validation state is restored at the
/// end. Throws Error when a loss turns non-finite.
TrainResult train(LoadModel& model, std::span<const WindowSample> windows, std::span<const std::size_t> train_idx,
                  std::span<const std::size_t> validation_idx, const TrainConfig& cfg);

/// Mean L1 loss in evaluation mode.
double evaluate_loss(LoadModel& model, std::span<const WindowSample> windows, std::span<const std::size_t> indices,
                     std::size_t batch_size);

/// Model outputs for `indices` in evaluation mode, standardized target space.
std::vector<std::array<double, 2>> predict_standardized(LoadModel& model, std::span<const WindowSample> windows,
                                                        std::span<const std::size_t> indices,
                                                        std::size_t batch_size);

void write_training_log(const std::filesystem::path& path, std::span<const EpochRecord> log);

}  // namespace htgnn
