// SPDX-License-Identifier: Apache-2.0
#include "htgnn/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace htgnn {

Tensor ParameterStore::add(const std::string& name, Shape shape, std::size_t fan_in, Init init) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  auto t = Tensor::zeros(std::move(shape), true);
  if (init == Init::Ones) std::fill(t.mutable_values().begin(), t.mutable_values().end(), 1.0);
  params_.push_back({name, t, std::max<std::size_t>(fan_in, 1), init});
  return t;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = std::find_if(params_.begin(), params_.end(),
                         [&](const Parameter& p) { return p.name == name; });
  if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->tensor;
}

bool ParameterStore::contains(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(),
                     [&](const Parameter& p) { return p.name == name; });
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t total = 0;
  for (const auto& p : params_) total += p.tensor.size();
  return total;
}

void ParameterStore::initialize(std::mt19937_64& rng) {
  for (auto& p : params_) {
    auto values = p.tensor.mutable_values();
    switch (p.init) {
      case Init::Zeros:
        std::fill(values.begin(), values.end(), 0.0);
        break;
      case Init::Ones:
        std::fill(values.begin(), values.end(), 1.0);
        break;
      case Init::FanInUniform: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(p.fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& v : values) v = dist(rng);
        break;
      }
      case Init::Glorot: {
        const auto& shape = p.tensor.shape();
        const double bound = std::sqrt(6.0 / static_cast<double>(shape.at(0) + shape.at(1)));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& v : values) v = dist(rng);
        break;
      }
    }
  }
}

void ParameterStore::fill_zero() {
  for (auto& p : params_) {
    auto values = p.tensor.mutable_values();
    std::fill(values.begin(), values.end(), 0.0);
  }
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

std::vector<std::vector<double>> ParameterStore::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p.tensor.values().begin(), p.tensor.values().end());
  return out;
}

void ParameterStore::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != params_.size()) throw DataError("snapshot does not match parameter set");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto dst = params_[i].tensor.mutable_values();
    if (values[i].size() != dst.size()) {
      throw DataError("snapshot size mismatch for '" + params_[i].name + "'");
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

nlohmann::json ParameterStore::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& p : params_) {
    list.push_back({{"name", p.name},
                    {"shape", p.tensor.shape()},
                    {"values", std::vector<double>(p.tensor.values().begin(), p.tensor.values().end())}});
  }
  return {{"format", kParameterFormat}, {"version", kParameterFormatVersion}, {"parameters", list}};
}

void ParameterStore::load_json(const nlohmann::json& container) {
  if (container.value("format", "") != kParameterFormat) {
    throw DataError("not a parameter container (format field missing or wrong)");
  }
  if (container.value("version", 0) != kParameterFormatVersion) {
    throw DataError("unsupported parameter container version");
  }
  const auto& list = container.at("parameters");
  for (auto& p : params_) {
    auto it = std::find_if(list.begin(), list.end(),
                           [&](const nlohmann::json& e) { return e.at("name") == p.name; });
    if (it == list.end()) throw DataError("checkpoint lacks parameter '" + p.name + "'");
    const auto shape = it->at("shape").get<Shape>();
    if (shape != p.tensor.shape()) {
      throw DataError("parameter '" + p.name + "' has shape " + shape_string(shape) +
                      " in checkpoint, expected " + shape_string(p.tensor.shape()));
    }
    const auto values = it->at("values").get<std::vector<double>>();
    if (values.size() != p.tensor.size()) {
      throw DataError("parameter '" + p.name + "' value count mismatch");
    }
    std::copy(values.begin(), values.end(), p.tensor.mutable_values().begin());
  }
}

void ParameterStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json().dump() << '\n';
}

void ParameterStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  load_json(nlohmann::json::parse(in));
}

}  // namespace htgnn
