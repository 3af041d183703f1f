// SPDX-License-Identifier: Apache-2.0
#include "htgnn/dynamics.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>

#include "htgnn/ops.hpp"
#include "vecmath.hpp"

namespace htgnn {

void EncoderConfig::validate() const {
  if (window == 0 || speed_dim == 0 || temperature_dim == 0 || vibration_dim == 0) {
    throw ConfigError("encoder dimensions must be positive");
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (channels[i] == 0 || kernels[i] == 0) throw ConfigError("conv channels and kernels must be positive");
  }
  if (channels[2] != 1) throw ConfigError("last conv stage must have one channel");
  const std::size_t shrink = kernels[0] + kernels[1] + kernels[2] - 3;
  if (window <= shrink) {
    throw ConfigError("window " + std::to_string(window) + " too short for kernel stack (needs > " +
                      std::to_string(shrink) + ")");
  }
}

std::size_t EncoderConfig::conv_output_length() const {
  return window - (kernels[0] - 1) - (kernels[1] - 1) - (kernels[2] - 1);
}

// ---------------------------------------------------------------- ConvEncoder

ConvEncoder::ConvEncoder(ParameterStore& params, const std::string& prefix, const EncoderConfig& cfg,
                         std::size_t out_dim)
    : cfg_(cfg) {
  cfg_.validate();
  std::size_t in = 1;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto stage = prefix + ".conv" + std::to_string(i);
    const auto fan_in = in * cfg.kernels[i];
    kernels_[i] = params.add(stage + ".weight", {cfg.channels[i], in, cfg.kernels[i]}, fan_in);
    biases_[i] = params.add(stage + ".bias", {cfg.channels[i]}, fan_in);
    in = cfg.channels[i];
  }
  const auto flat = cfg.conv_output_length();
  proj_weight_ = params.add(prefix + ".proj.weight", {flat, out_dim}, flat);
  proj_bias_ = params.add(prefix + ".proj.bias", {out_dim}, flat);
}

Tensor ConvEncoder::conv_features(const Tensor& series) const {
  if (series.rank() != 2) {
    throw DimensionError("conv encoder expects [B x L], got " + shape_string(series.shape()));
  }
  const std::size_t b = series.dim(0);
  auto x = reshape(series, {b, 1, series.dim(1)});
  for (std::size_t i = 0; i < 3; ++i) x = silu(conv1d(x, kernels_[i], biases_[i]));
  return reshape(x, {b, x.dim(2)});
}

Tensor ConvEncoder::forward(const Tensor& series) const {
  return silu(linear(conv_features(series), proj_weight_, proj_bias_));
}

// ---------------------------------------------------------------- GRU

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<RowMat>;
using RowVec = Eigen::Map<Eigen::RowVectorXd>;

Map view(std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return Map(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void check_gru_shapes(const Tensor& x, const Tensor& h, const GruWeights& w) {
  if (x.rank() != 2 || h.rank() != 2 || x.dim(0) != h.dim(0)) {
    throw DimensionError("gru_cell: x " + shape_string(x.shape()) + " and h " + shape_string(h.shape()) +
                         " must be [M x in] and [M x d]");
  }
  const std::size_t in = x.dim(1), d = h.dim(1);
  const Shape input{in, d}, recurrent{d, d}, bias{d};
  for (const auto* t : {&w.W_z, &w.W_r, &w.W_h}) {
    if (t->shape() != input) throw DimensionError("gru_cell: input weight must be " + shape_string(input));
  }
  for (const auto* t : {&w.U_z, &w.U_r, &w.U_h}) {
    if (t->shape() != recurrent) {
      throw DimensionError("gru_cell: recurrent weight must be " + shape_string(recurrent));
    }
  }
  for (const auto* t : {&w.b_z, &w.b_r, &w.b_h}) {
    if (t->shape() != bias) throw DimensionError("gru_cell: bias must be " + shape_string(bias));
  }
}

}  // namespace

// Fused so that one time step keeps four [M x d] buffers alive for the
// backward pass instead of one per elementary operation.
Tensor gru_cell(const Tensor& x, const Tensor& h, const GruWeights& w) {
  check_gru_shapes(x, h, w);
  const std::size_t m = x.dim(0), in = x.dim(1), d = h.dim(1);
  auto& xv = x.node()->value;
  auto& hv = h.node()->value;
  auto gate = [&](const Tensor& wi, const Tensor& wr, const Tensor& b, std::vector<double>& src) {
    RowMat a = view(xv, m, in) * view(wi.node()->value, in, d) + view(src, m, d) * view(wr.node()->value, d, d);
    a.rowwise() += RowVec(b.node()->value.data(), static_cast<Eigen::Index>(d));
    return a;
  };
  auto z = std::make_shared<std::vector<double>>(m * d);
  auto r = std::make_shared<std::vector<double>>(m * d);
  auto n = std::make_shared<std::vector<double>>(m * d);
  auto q = std::make_shared<std::vector<double>>(m * d);  // r * h
  RowMat a = gate(w.W_z, w.U_z, w.b_z, hv);
  logistic(a.data(), z->data(), m * d, 1.0);
  a = gate(w.W_r, w.U_r, w.b_r, hv);
  logistic(a.data(), r->data(), m * d, 1.0);
  for (std::size_t i = 0; i < m * d; ++i) (*q)[i] = (*r)[i] * hv[i];
  a = gate(w.W_h, w.U_h, w.b_h, *q);
  tanh_into(a.data(), n->data(), m * d);
  std::vector<double> out(m * d);
  for (std::size_t i = 0; i < m * d; ++i) out[i] = (*n)[i] + (*z)[i] * (hv[i] - (*n)[i]);

  return Tensor::make_result(
      {m, d}, std::move(out), "gru_cell", {x, h, w.W_z, w.U_z, w.b_z, w.W_r, w.U_r, w.b_r, w.W_h, w.U_h, w.b_h},
      [m, in, d, z, r, n, q](detail::Node& self) {
        auto& xn = *self.inputs[0];
        auto& hn = *self.inputs[1];
        const auto& g = self.grad;
        std::vector<double> da_z(m * d), da_r(m * d), da_n(m * d), dh(m * d);
        for (std::size_t i = 0; i < m * d; ++i) {
          const double zi = (*z)[i], ni = (*n)[i];
          da_z[i] = g[i] * (hn.value[i] - ni) * zi * (1.0 - zi);
          da_n[i] = g[i] * (1.0 - zi) * (1.0 - ni * ni);
          dh[i] = g[i] * zi;
        }
        auto& U_h = self.inputs[9]->value;
        RowMat dq = view(da_n, m, d) * view(U_h, d, d).transpose();
        for (std::size_t i = 0; i < m * d; ++i) {
          const double ri = (*r)[i];
          const double dqi = dq.data()[i];
          da_r[i] = dqi * hn.value[i] * ri * (1.0 - ri);
          dh[i] += dqi * ri;
        }
        // Parameter gradients: input weights, recurrent weights, biases per gate.
        auto accumulate = [&](std::size_t wi, std::size_t wr, std::size_t b, std::vector<double>& da,
                              std::vector<double>& rec_in) {
          auto& Wn = *self.inputs[wi];
          auto& Un = *self.inputs[wr];
          auto& bn = *self.inputs[b];
          auto a = view(da, m, d);
          if (Wn.requires_grad) view(Wn.grad_buffer(), in, d).noalias() += view(xn.value, m, in).transpose() * a;
          if (Un.requires_grad) view(Un.grad_buffer(), d, d).noalias() += view(rec_in, m, d).transpose() * a;
          if (bn.requires_grad) {
            RowVec(bn.grad_buffer().data(), static_cast<Eigen::Index>(d)) += a.colwise().sum();
          }
        };
        accumulate(2, 3, 4, da_z, hn.value);
        accumulate(5, 6, 7, da_r, hn.value);
        accumulate(8, 9, 10, da_n, *q);
        if (hn.requires_grad) {
          auto dhm = view(dh, m, d);
          dhm.noalias() += view(da_z, m, d) * view(self.inputs[3]->value, d, d).transpose();
          dhm.noalias() += view(da_r, m, d) * view(self.inputs[6]->value, d, d).transpose();
          auto& hg = hn.grad_buffer();
          for (std::size_t i = 0; i < m * d; ++i) hg[i] += dh[i];
        }
        if (xn.requires_grad) {
          auto dx = view(xn.grad_buffer(), m, in);
          dx.noalias() += view(da_z, m, d) * view(self.inputs[2]->value, in, d).transpose();
          dx.noalias() += view(da_r, m, d) * view(self.inputs[5]->value, in, d).transpose();
          dx.noalias() += view(da_n, m, d) * view(self.inputs[8]->value, in, d).transpose();
        }
      });
}

TemperatureEncoder::TemperatureEncoder(ParameterStore& params, const std::string& prefix,
                                       const EncoderConfig& cfg)
    : cfg_(cfg) {
  const std::size_t d = cfg.temperature_dim;
  auto gate = [&](const char* tag, Tensor& in_w, Tensor& rec_w, Tensor& bias) {
    in_w = params.add(prefix + ".W_" + tag, {1, d}, d);
    rec_w = params.add(prefix + ".U_" + tag, {d, d}, d);
    bias = params.add(prefix + ".b_" + tag, {d}, d);
  };
  gate("z", gru_.W_z, gru_.U_z, gru_.b_z);
  gate("r", gru_.W_r, gru_.U_r, gru_.b_r);
  gate("h", gru_.W_h, gru_.U_h, gru_.b_h);
  if (cfg.speed_dim != cfg.temperature_dim) {
    proj_weight_ = params.add(prefix + ".init_proj.weight", {cfg.speed_dim, d}, cfg.speed_dim);
    proj_bias_ = params.add(prefix + ".init_proj.bias", {d}, cfg.speed_dim);
  }
}

Tensor TemperatureEncoder::forward(const Tensor& series, const Tensor& context,
                                   std::size_t nodes_per_sample) const {
  if (series.rank() != 2 || series.dim(1) != cfg_.window) {
    throw DimensionError("temperature encoder expects [(B*N) x " + std::to_string(cfg_.window) +
                         "], got " + shape_string(series.shape()));
  }
  for (double v : series.values()) {
    if (!std::isfinite(v)) throw DataError("non-finite temperature input");
  }
  auto h0 = proj_weight_.defined() ? linear(context, proj_weight_, proj_bias_) : context;
  auto h = repeat_per_node(h0, nodes_per_sample);
  if (h.dim(0) != series.dim(0)) {
    throw DimensionError("temperature rows " + std::to_string(series.dim(0)) +
                         " do not match context rows x nodes " + std::to_string(h.dim(0)));
  }
  for (std::size_t t = 0; t < cfg_.window; ++t) h = gru_cell(slice_cols(series, t, 1), h, gru_);
  // The emitted state of each step is SiLU(h_t); only the last one is consumed.
  return silu(h);
}

VibrationEncoder::VibrationEncoder(ParameterStore& params, const std::string& prefix,
                                   const EncoderConfig& cfg)
    : cnn_(params, prefix, cfg, cfg.vibration_dim) {}

Tensor VibrationEncoder::forward(const Tensor& series, const Tensor& context,
                                 std::size_t nodes_per_sample) const {
  return concat_cols(cnn_.forward(series), repeat_per_node(context, nodes_per_sample));
}

// ---------------------------------------------------------------- extractor

DynamicsExtractor::DynamicsExtractor(ParameterStore& params, const EncoderConfig& cfg)
    : cfg_(cfg),
      speed_(params, "dynamics.speed_cnn", cfg, cfg.speed_dim),
      temperature_(params, "dynamics.temp_gru", cfg),
      vibration_(params, "dynamics.vib_cnn", cfg) {}

Tensor DynamicsExtractor::encode_speed(const Tensor& speed) const {
  if (speed.rank() == 1) {
    auto out = speed_.forward(reshape(speed, {1, speed.dim(0)}));
    return reshape(out, {cfg_.speed_dim});
  }
  return speed_.forward(speed);
}

Tensor DynamicsExtractor::encode_temperature(const Tensor& temperature, const Tensor& speed_context,
                                             std::size_t nodes_per_sample) const {
  auto ctx = speed_context.rank() == 1 ? reshape(speed_context, {1, speed_context.dim(0)}) : speed_context;
  return temperature_.forward(temperature, ctx, nodes_per_sample);
}

Tensor DynamicsExtractor::encode_vibration(const Tensor& vibration, const Tensor& speed_context,
                                           std::size_t nodes_per_sample) const {
  auto ctx = speed_context.rank() == 1 ? reshape(speed_context, {1, speed_context.dim(0)}) : speed_context;
  return vibration_.forward(vibration, ctx, nodes_per_sample);
}

NodeEmbeddings DynamicsExtractor::forward(const Tensor& temperature, const Tensor& vibration,
                                          const Tensor& speed, std::size_t temperature_nodes,
                                          std::size_t vibration_nodes) const {
  NodeEmbeddings out;
  out.speed = encode_speed(speed);
  out.temperature = encode_temperature(temperature, out.speed, temperature_nodes);
  out.vibration = encode_vibration(vibration, out.speed, vibration_nodes);
  return out;
}

Tensor repeat_per_node(const Tensor& context, std::size_t nodes_per_sample) {
  if (context.rank() != 2 || nodes_per_sample == 0) {
    throw DimensionError("repeat_per_node expects [B x d] context and a positive node count");
  }
  std::vector<std::size_t> index(context.dim(0) * nodes_per_sample);
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = i / nodes_per_sample;
  return gather_rows(context, index);
}

}  // namespace htgnn
