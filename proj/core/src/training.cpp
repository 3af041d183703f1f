// SPDX-License-Identifier: Apache-2.0
#include "htgnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "htgnn/csv.hpp"
#include "htgnn/json_fields.hpp"

namespace htgnn {

namespace {

struct Moments {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  void add(std::span<const double> v) {
    for (double x : v) {
      sum += x;
      sum_sq += x * x;
    }
    n += v.size();
  }
  double mean() const { return sum / static_cast<double>(n); }
  double std() const {
    const double m = mean();
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - m * m);
    const double s = std::sqrt(var);
    return s > 1e-12 ? s : 1.0;
  }
};

std::vector<const WindowSample*> gather(std::span<const WindowSample> windows, std::span<const std::size_t> idx) {
  std::vector<const WindowSample*> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(&windows[i]);
  return out;
}

}  // namespace

// ---------------------------------------------------------------- Normalization

Normalization Normalization::fit(std::span<const WindowSample> windows, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DataError("cannot fit normalization on zero windows");
  std::array<Moments, 3> in;
  std::array<Moments, 2> out;
  for (auto i : indices) {
    const auto& s = windows[i];
    in[0].add(s.temperature);
    in[1].add(s.vibration);
    in[2].add(s.speed);
    out[0].add(std::span<const double>(&s.load[0], 1));
    out[1].add(std::span<const double>(&s.load[1], 1));
  }
  Normalization n;
  for (std::size_t k = 0; k < 3; ++k) {
    n.input_mean[k] = in[k].mean();
    n.input_std[k] = in[k].std();
  }
  for (std::size_t k = 0; k < 2; ++k) {
    n.target_mean[k] = out[k].mean();
    n.target_std[k] = out[k].std();
  }
  return n;
}

WindowSample Normalization::apply(const WindowSample& s) const {
  WindowSample z = s;
  auto standardize = [](std::vector<double>& v, double m, double sd) {
    for (auto& x : v) x = (x - m) / sd;
  };
  standardize(z.temperature, input_mean[0], input_std[0]);
  standardize(z.vibration, input_mean[1], input_std[1]);
  standardize(z.speed, input_mean[2], input_std[2]);
  for (std::size_t k = 0; k < 2; ++k) z.load[k] = (s.load[k] - target_mean[k]) / target_std[k];
  return z;
}

std::array<double, 2> Normalization::decode_target(std::array<double, 2> z) const {
  return {z[0] * target_std[0] + target_mean[0], z[1] * target_std[1] + target_mean[1]};
}

nlohmann::json Normalization::to_json() const {
  return {{"input_mean", input_mean},
          {"input_std", input_std},
          {"target_mean", target_mean},
          {"target_std", target_std}};
}

Normalization Normalization::from_json(const nlohmann::json& j) {
  constexpr std::string_view section = "normalization";
  json_fields::require_known(j, {"input_mean", "input_std", "target_mean", "target_std"}, section);
  Normalization n;
  json_fields::read(j, "input_mean", n.input_mean, section);
  json_fields::read(j, "input_std", n.input_std, section);
  json_fields::read(j, "target_mean", n.target_mean, section);
  json_fields::read(j, "target_std", n.target_std, section);
  return n;
}

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("training.learning_rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("training.weight_decay must be non-negative");
  if (batch_size == 0 || max_epochs == 0) throw ConfigError("training batch size and epochs must be positive");
}

AdamWOptions TrainConfig::optimizer() const {
  AdamWOptions o;
  o.lr = learning_rate;
  o.weight_decay = weight_decay;
  return o;
}

nlohmann::json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"weight_decay", weight_decay},
          {"batch_size", batch_size},       {"max_epochs", max_epochs},
          {"early_stopping_start", early_stopping_start}, {"patience", patience},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  constexpr std::string_view section = "training";
  json_fields::require_known(j, {"learning_rate", "weight_decay", "batch_size", "max_epochs",
                                 "early_stopping_start", "patience", "seed"},
                             section);
  TrainConfig c;
  json_fields::read(j, "learning_rate", c.learning_rate, section);
  json_fields::read(j, "weight_decay", c.weight_decay, section);
  json_fields::read(j, "batch_size", c.batch_size, section);
  json_fields::read(j, "max_epochs", c.max_epochs, section);
  json_fields::read(j, "early_stopping_start", c.early_stopping_start, section);
  json_fields::read(j, "patience", c.patience, section);
  json_fields::read(j, "seed", c.seed, section);
  c.validate();
  return c;
}

// ---------------------------------------------------------------- early stopping

bool EarlyStopping::update(std::size_t epoch, double validation_loss) {
  if (validation_loss < best_) {
    best_ = validation_loss;
    best_epoch_ = epoch;
    since_ = 0;
    return true;
  }
  ++since_;
  return false;
}

bool EarlyStopping::should_stop(std::size_t epoch) const { return epoch >= start_ && since_ >= patience_; }

// ---------------------------------------------------------------- loop

std::vector<std::array<double, 2>> predict_standardized(LoadModel& model, std::span<const WindowSample> windows,
                                                        std::span<const std::size_t> indices,
                                                        std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("evaluation batch size must be positive");
  NoGradGuard no_grad;
  std::vector<std::array<double, 2>> out;
  out.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const auto count = std::min(batch_size, indices.size() - start);
    const auto ptrs = gather(windows, indices.subspan(start, count));
    const auto pred = model.forward(stack_batch(ptrs), false);
    for (std::size_t b = 0; b < count; ++b) out.push_back({pred(b, 0), pred(b, 1)});
  }
  return out;
}

double evaluate_loss(LoadModel& model, std::span<const WindowSample> windows, std::span<const std::size_t> indices,
                     std::size_t batch_size) {
  if (indices.empty()) throw DataError("evaluation on zero windows");
  const auto pred = predict_standardized(model, windows, indices, batch_size);
  double total = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& y = windows[indices[i]].load;
    total += std::abs(pred[i][0] - y[0]) + std::abs(pred[i][1] - y[1]);
  }
  return total / static_cast<double>(indices.size());
}

TrainResult train(LoadModel& model, std::span<const WindowSample> windows, std::span<const std::size_t> train_idx,
                  std::span<const std::size_t> validation_idx, const TrainConfig& cfg) {
  cfg.validate();
  if (train_idx.empty() || validation_idx.empty()) throw DataError("training needs train and validation windows");
  std::mt19937_64 rng(cfg.seed);
  model.parameters().initialize(rng);
  model.seed(rng());
  AdamW optimizer(model.parameters(), cfg.optimizer());
  EarlyStopping stopper(cfg.patience, cfg.early_stopping_start);

  std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
  auto best_params = model.parameters().snapshot();
  auto best_buffers = model.buffer_snapshot();
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto count = std::min(cfg.batch_size, order.size() - start);
      const auto ptrs = gather(windows, std::span<const std::size_t>(order).subspan(start, count));
      const auto batch = stack_batch(ptrs);
      auto loss = l1_loss(model.forward(batch, true), batch.load);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw Error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      }
      model.parameters().zero_grad();
      loss.backward();
      optimizer.step();
      total += value * static_cast<double>(count);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = total / static_cast<double>(order.size());
    rec.validation_loss = evaluate_loss(model, windows, validation_idx, cfg.batch_size);
    if (!std::isfinite(rec.validation_loss)) {
      throw Error("training diverged: non-finite validation loss at epoch " + std::to_string(epoch));
    }
    rec.best = stopper.update(epoch, rec.validation_loss);
    if (rec.best) {
      best_params = model.parameters().snapshot();
      best_buffers = model.buffer_snapshot();
    }
    result.log.push_back(rec);
    if (stopper.should_stop(epoch)) break;
  }
  model.parameters().restore(best_params);
  model.restore_buffers(best_buffers);
  result.best_epoch = stopper.best_epoch();
  result.best_validation_loss = stopper.best_loss();
  return result;
}

void write_training_log(const std::filesystem::path& path, std::span<const EpochRecord> log) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_loss,validation_loss,best\n";
  for (const auto& r : log) {
    out << r.epoch << ',' << csv::format(r.train_loss) << ',' << csv::format(r.validation_loss) << ','
        << (r.best ? 1 : 0) << '\n';
  }
}

}  // namespace htgnn
