// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "htgnn/tensor.hpp"

namespace htgnn {

// Linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
/// x[m x in] * weight[in x out] + bias[out]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Elementwise, operands of identical shape.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// a[m x n] + bias[n] broadcast over rows.
Tensor add_bias(const Tensor& a, const Tensor& bias);

// Activations.
Tensor silu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
inline constexpr double kLeakyReluSlope = 0.2;
Tensor leaky_relu(const Tensor& x, double negative_slope = kLeakyReluSlope);
Tensor abs(const Tensor& x);

// Reductions to a one-element tensor.
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Layout.
Tensor reshape(const Tensor& x, Shape shape);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count);
Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count);

// Sparse row movement for message passing.
/// out[e] = x[index[e]].
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);
/// out[index[e]] += x[e]; rows never indexed stay zero.
Tensor scatter_add_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t rows);
/// Row e multiplied by a constant factor[e].
Tensor scale_rows(const Tensor& x, std::span<const double> factor);
/// Row e multiplied by weights[e]; weights is a length-E tensor.
Tensor mul_rows(const Tensor& x, const Tensor& weights);

/// out[dst[e]] += weights[e] * x[src[e]] for every edge e; `rows` output rows.
/// Equivalent to scatter_add_rows(mul_rows(gather_rows(x, src), weights), dst,
/// rows) without materializing per-edge rows.
Tensor weighted_scatter_rows(const Tensor& x, const Tensor& weights, std::span<const std::size_t> src,
                             std::span<const std::size_t> dst, std::size_t rows);

/// score[e] = a^T LeakyReLU(dst_proj[dst[e]] + src_proj[src[e]]), a length-E tensor.
Tensor edge_attention_scores(const Tensor& dst_proj, const Tensor& src_proj, const Tensor& att_vector,
                             std::span<const std::size_t> src, std::span<const std::size_t> dst,
                             double negative_slope = kLeakyReluSlope);

/// Softmax of scores within each segment. Empty scores give an empty (undefined)
/// tensor.
Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> segment_ids,
                       std::size_t num_segments);

/// Stride-1 cross-correlation. x is [C_in x L] or [N x C_in x L], kernels
/// [C_out x C_in x K], bias [C_out] (may be undefined). `padding` zeros are
/// added on both ends, so L_out = L + 2 * padding - K + 1.
Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias, std::size_t padding = 0);

struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, 0.0), running_var(channels, 1.0) {}
};

/// Per-channel normalization of x[N x C x L]. In training mode batch
/// statistics are used and the running estimates updated.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  bool training);

/// Inverted dropout; identity when !training or p == 0.
Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng);

}  // namespace htgnn
