// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "htgnn/model.hpp"
#include "htgnn/ops.hpp"

namespace htgnn {

enum class Padding { Same, Valid };

struct BaselineConfig {
  std::size_t layers = 4;
  std::size_t channels = 100;
  std::size_t hidden = 100;
  std::size_t kernel = 9;
  double dropout = 0.5;
  bool batchnorm = true;
  /// Same keeps the window length through every block (needs an odd kernel);
  /// valid shrinks it by kernel - 1 per block.
  Padding padding = Padding::Same;
  std::size_t window = 30;

  void validate() const;
  /// Time steps left after block `layer` (1-based); block 0 is the input.
  std::size_t length_after(std::size_t layer) const;

  nlohmann::json to_json() const;
  static BaselineConfig from_json(const nlohmann::json& j);
};

/// 1D CNN over all sensors stacked as channels: N_T temperature rows, N_V
/// vibration rows, then speed, each of length L. Blocks of conv, batch norm,
/// SiLU, dropout; then flatten, a hidden dense layer with SiLU and the output.
class CnnBaseline final : public LoadModel {
 public:
  CnnBaseline(const BaselineConfig& cfg, std::size_t temperature_nodes, std::size_t vibration_nodes);

  std::string_view kind() const override { return "cnn"; }
  Tensor forward(const BatchTensors& batch, bool training) override;
  nlohmann::json config_json() const override;
  nlohmann::json buffers_json() const override;
  void load_buffers(const nlohmann::json& j) override;
  std::vector<std::vector<double>> buffer_snapshot() const override;
  void restore_buffers(const std::vector<std::vector<double>>& values) override;

  /// [B x C x L] input with channels ordered temperature, vibration, speed.
  Tensor stack_channels(const BatchTensors& batch) const;

  const BaselineConfig& config() const { return cfg_; }
  std::size_t input_channels() const { return temperature_nodes_ + vibration_nodes_ + 1; }

 private:
  BaselineConfig cfg_;
  std::size_t temperature_nodes_;
  std::size_t vibration_nodes_;
  std::vector<Tensor> conv_weights_;
  std::vector<Tensor> conv_biases_;
  std::vector<Tensor> bn_gamma_;
  std::vector<Tensor> bn_beta_;
  std::vector<BatchNormState> bn_state_;
  Tensor hidden_weight_, hidden_bias_, out_weight_, out_bias_;
};

}  // namespace htgnn
