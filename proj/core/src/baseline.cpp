// SPDX-License-Identifier: Apache-2.0
#include "htgnn/baseline.hpp"

#include "htgnn/json_fields.hpp"

namespace htgnn {

void BaselineConfig::validate() const {
  if (layers == 0 || channels == 0 || hidden == 0 || kernel == 0 || window == 0) {
    throw ConfigError("baseline dimensions must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("baseline dropout must lie in [0, 1)");
  if (padding == Padding::Same && kernel % 2 == 0) {
    throw ConfigError("same padding needs an odd kernel, got " + std::to_string(kernel));
  }
  if (padding == Padding::Valid && window < layers * (kernel - 1) + 1) {
    throw ConfigError("window " + std::to_string(window) + " shorter than the receptive field " +
                      std::to_string(layers * (kernel - 1) + 1) + " of the valid conv stack");
  }
}

std::size_t BaselineConfig::length_after(std::size_t layer) const {
  if (padding == Padding::Same) return window;
  return window - layer * (kernel - 1);
}

nlohmann::json BaselineConfig::to_json() const {
  return {{"layers", layers},       {"channels", channels},   {"hidden", hidden},
          {"kernel", kernel},       {"dropout", dropout},     {"batchnorm", batchnorm},
          {"padding", padding == Padding::Same ? "same" : "valid"}, {"window", window}};
}

BaselineConfig BaselineConfig::from_json(const nlohmann::json& j) {
  constexpr std::string_view section = "baseline";
  json_fields::require_known(j, {"layers", "channels", "hidden", "kernel", "dropout", "batchnorm", "padding",
                                 "window"},
                             section);
  BaselineConfig c;
  json_fields::read(j, "layers", c.layers, section);
  json_fields::read(j, "channels", c.channels, section);
  json_fields::read(j, "hidden", c.hidden, section);
  json_fields::read(j, "kernel", c.kernel, section);
  json_fields::read(j, "dropout", c.dropout, section);
  json_fields::read(j, "batchnorm", c.batchnorm, section);
  json_fields::read(j, "window", c.window, section);
  std::string padding = c.padding == Padding::Same ? "same" : "valid";
  json_fields::read(j, "padding", padding, section);
  if (padding == "same") {
    c.padding = Padding::Same;
  } else if (padding == "valid") {
    c.padding = Padding::Valid;
  } else {
    throw ConfigError("baseline.padding must be 'same' or 'valid', got '" + padding + "'");
  }
  c.validate();
  return c;
}

CnnBaseline::CnnBaseline(const BaselineConfig& cfg, std::size_t temperature_nodes, std::size_t vibration_nodes)
    : cfg_(cfg), temperature_nodes_(temperature_nodes), vibration_nodes_(vibration_nodes) {
  cfg_.validate();
  if (temperature_nodes == 0 || vibration_nodes == 0) throw ConfigError("baseline needs sensor channels");
  std::size_t in = input_channels();
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const auto base = "baseline.block" + std::to_string(l);
    const auto fan_in = in * cfg_.kernel;
    conv_weights_.push_back(params_.add(base + ".conv.weight", {cfg_.channels, in, cfg_.kernel}, fan_in));
    conv_biases_.push_back(params_.add(base + ".conv.bias", {cfg_.channels}, fan_in));
    if (cfg_.batchnorm) {
      bn_gamma_.push_back(params_.add(base + ".bn.gamma", {cfg_.channels}, 1, Init::Ones));
      bn_beta_.push_back(params_.add(base + ".bn.beta", {cfg_.channels}, 1, Init::Zeros));
      bn_state_.emplace_back(cfg_.channels);
    }
    in = cfg_.channels;
  }
  const std::size_t flat = cfg_.channels * cfg_.length_after(cfg_.layers);
  hidden_weight_ = params_.add("baseline.hidden.weight", {flat, cfg_.hidden}, flat);
  hidden_bias_ = params_.add("baseline.hidden.bias", {cfg_.hidden}, flat);
  out_weight_ = params_.add("baseline.out.weight", {cfg_.hidden, 2}, cfg_.hidden);
  out_bias_ = params_.add("baseline.out.bias", {2}, cfg_.hidden);
}

Tensor CnnBaseline::stack_channels(const BatchTensors& batch) const {
  const std::size_t b = batch.batch, nt = temperature_nodes_, nv = vibration_nodes_, l = cfg_.window;
  if (b == 0) throw DimensionError("empty batch");
  if (batch.temperature.shape() != Shape{b * nt, l} || batch.vibration.shape() != Shape{b * nv, l} ||
      batch.speed.shape() != Shape{b, l}) {
    throw DimensionError("baseline input does not match " + std::to_string(nt) + " temperature, " +
                         std::to_string(nv) + " vibration channels of length " + std::to_string(l));
  }
  // Rows of the concatenation: all temperature, all vibration, all speed.
  auto all = concat_rows(concat_rows(batch.temperature, batch.vibration), batch.speed);
  std::vector<std::size_t> index;
  index.reserve(b * input_channels());
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t k = 0; k < nt; ++k) index.push_back(s * nt + k);
    for (std::size_t k = 0; k < nv; ++k) index.push_back(b * nt + s * nv + k);
    index.push_back(b * (nt + nv) + s);
  }
  return reshape(gather_rows(all, index), {b, input_channels(), l});
}

Tensor CnnBaseline::forward(const BatchTensors& batch, bool training) {
  auto x = stack_channels(batch);
  const std::size_t pad = cfg_.padding == Padding::Same ? cfg_.kernel / 2 : 0;
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    x = conv1d(x, conv_weights_[l], conv_biases_[l], pad);
    if (cfg_.batchnorm) x = batch_norm(x, bn_gamma_[l], bn_beta_[l], bn_state_[l], training);
    x = dropout(silu(x), cfg_.dropout, training, rng_);
  }
  x = reshape(x, {batch.batch, x.dim(1) * x.dim(2)});
  x = silu(linear(x, hidden_weight_, hidden_bias_));
  return linear(x, out_weight_, out_bias_);
}

nlohmann::json CnnBaseline::config_json() const {
  auto j = cfg_.to_json();
  j["temperature_nodes"] = temperature_nodes_;
  j["vibration_nodes"] = vibration_nodes_;
  return j;
}

nlohmann::json CnnBaseline::buffers_json() const {
  auto blocks = nlohmann::json::array();
  for (const auto& s : bn_state_) blocks.push_back({{"running_mean", s.running_mean}, {"running_var", s.running_var}});
  return {{"batch_norm", blocks}};
}

void CnnBaseline::load_buffers(const nlohmann::json& j) {
  const auto& blocks = j.at("batch_norm");
  if (blocks.size() != bn_state_.size()) throw DataError("checkpoint batch-norm block count mismatch");
  for (std::size_t l = 0; l < bn_state_.size(); ++l) {
    auto mean = blocks[l].at("running_mean").get<std::vector<double>>();
    auto var = blocks[l].at("running_var").get<std::vector<double>>();
    if (mean.size() != cfg_.channels || var.size() != cfg_.channels) {
      throw DataError("checkpoint batch-norm statistics have the wrong width");
    }
    bn_state_[l].running_mean = std::move(mean);
    bn_state_[l].running_var = std::move(var);
  }
}

std::vector<std::vector<double>> CnnBaseline::buffer_snapshot() const {
  std::vector<std::vector<double>> out;
  for (const auto& s : bn_state_) {
    out.push_back(s.running_mean);
    out.push_back(s.running_var);
  }
  return out;
}

void CnnBaseline::restore_buffers(const std::vector<std::vector<double>>& values) {
  if (values.size() != 2 * bn_state_.size()) throw DataError("buffer snapshot does not match the model");
  for (std::size_t l = 0; l < bn_state_.size(); ++l) {
    bn_state_[l].running_mean = values[2 * l];
    bn_state_[l].running_var = values[2 * l + 1];
  }
}

}  // namespace htgnn
