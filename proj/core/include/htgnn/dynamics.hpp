// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "htgnn/parameters.hpp"
#include "htgnn/tensor.hpp"

namespace htgnn {

struct EncoderConfig {
  std::size_t window = 30;
  std::size_t speed_dim = 10;        // d_w
  std::size_t temperature_dim = 10;  // d_T
  std::size_t vibration_dim = 10;    // d_V
  std::array<std::size_t, 3> channels{2, 2, 1};
  std::array<std::size_t, 3> kernels{3, 5, 5};

  void validate() const;
  /// Length left after the valid-convolution stack: window - sum(kernel - 1).
  std::size_t conv_output_length() const;
};

/// Three valid conv stages (SiLU after each), flattened and projected to
/// `out_dim`, then SiLU. Input [B x L], output [B x out_dim].
class ConvEncoder {
 public:
  ConvEncoder(ParameterStore& params, const std::string& prefix, const EncoderConfig& cfg,
              std::size_t out_dim);

  Tensor forward(const Tensor& series) const;
  /// Output of the conv stack before projection, [B x conv_output_length].
  Tensor conv_features(const Tensor& series) const;

 private:
  EncoderConfig cfg_;
  std::array<Tensor, 3> kernels_;
  std::array<Tensor, 3> biases_;
  Tensor proj_weight_;
  Tensor proj_bias_;
};

/// Gate parameters of a GRU with scalar-or-vector input. Input weights are
/// [in x d], recurrent weights [d x d], biases [d].
struct GruWeights {
  Tensor W_z, U_z, b_z;
  Tensor W_r, U_r, b_r;
  Tensor W_h, U_h, b_h;
};

/// z = sig(x W_z + h U_z + b_z), r = sig(x W_r + h U_r + b_r),
/// n = tanh(x W_h + (r * h) U_h + b_h), h' = z * h + (1 - z) * n.
Tensor gru_cell(const Tensor& x, const Tensor& h, const GruWeights& w);

/// Per-node GRU over each temperature series, hidden state initialised from
/// the speed context. Input [(B * N) x L] and context [B x d_w]; output
/// [(B * N) x d_T], the SiLU of each node's final state.
class TemperatureEncoder {
 public:
  TemperatureEncoder(ParameterStore& params, const std::string& prefix, const EncoderConfig& cfg);

  Tensor forward(const Tensor& series, const Tensor& context, std::size_t nodes_per_sample) const;
  const GruWeights& weights() const { return gru_; }
  bool projects_context() const { return proj_weight_.defined(); }

 private:
  EncoderConfig cfg_;
  GruWeights gru_;
  Tensor proj_weight_;  // only when d_w != d_T
  Tensor proj_bias_;
};

/// Shared conv encoder per vibration node, each row concatenated with its
/// sample's speed context: [(B * N) x (d_V + d_w)].
class VibrationEncoder {
 public:
  VibrationEncoder(ParameterStore& params, const std::string& prefix, const EncoderConfig& cfg);

  Tensor forward(const Tensor& series, const Tensor& context, std::size_t nodes_per_sample) const;

 private:
  ConvEncoder cnn_;
};

struct NodeEmbeddings {
  Tensor temperature;  // (B * N_T) x d_T
  Tensor vibration;    // (B * N_V) x (d_V + d_w)
  Tensor speed;        // B x d_w
};

/// Speed, temperature and vibration encoders under the "dynamics." prefix.
class DynamicsExtractor {
 public:
  DynamicsExtractor(ParameterStore& params, const EncoderConfig& cfg);

  /// Accepts a single window [L] (returns [d_w]) or a batch [B x L].
  Tensor encode_speed(const Tensor& speed) const;
  Tensor encode_temperature(const Tensor& temperature, const Tensor& speed_context,
                            std::size_t nodes_per_sample) const;
  Tensor encode_vibration(const Tensor& vibration, const Tensor& speed_context,
                          std::size_t nodes_per_sample) const;

  NodeEmbeddings forward(const Tensor& temperature, const Tensor& vibration, const Tensor& speed,
                         std::size_t temperature_nodes, std::size_t vibration_nodes) const;

  const EncoderConfig& config() const { return cfg_; }
  const TemperatureEncoder& temperature_encoder() const { return temperature_; }

 private:
  EncoderConfig cfg_;
  ConvEncoder speed_;
  TemperatureEncoder temperature_;
  VibrationEncoder vibration_;
};

/// Row r of the result is row r / nodes_per_sample of `context`.
Tensor repeat_per_node(const Tensor& context, std::size_t nodes_per_sample);

}  // namespace htgnn
