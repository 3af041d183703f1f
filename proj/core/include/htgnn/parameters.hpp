// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "htgnn/tensor.hpp"

namespace htgnn {

enum class Init { FanInUniform, Glorot, Zeros, Ones };

struct Parameter {
  std::string name;  // dotted path, e.g. "dynamics.temp_gru.W_z"
  Tensor tensor;
  std::size_t fan_in = 1;
  Init init = Init::FanInUniform;
};

/// Ordered, name-unique collection of trainable tensors.
class ParameterStore {
 public:
  /// Registers a zero-filled trainable tensor. Throws ConfigError on duplicate names.
  Tensor add(const std::string& name, Shape shape, std::size_t fan_in,
             Init init = Init::FanInUniform);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Parameter>& entries() { return params_; }
  const std::vector<Parameter>& entries() const { return params_; }
  std::size_t scalar_count() const;

  /// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for FanInUniform entries;
  /// uniform(-b, b) with b = sqrt(6 / (rows + cols)) for 2-D Glorot entries.
  void initialize(std::mt19937_64& rng);
  /// Every entry set to zero, regardless of its init kind.
  void fill_zero();
  void zero_grad();

  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

  /// Parameter container: {"format", "version", "parameters": [{name, shape, values}]}.
  nlohmann::json to_json() const;
  /// Loads values by name; every registered parameter must be present with a matching shape.
  void load_json(const nlohmann::json& container);

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

 private:
  std::vector<Parameter> params_;
};

inline constexpr const char* kParameterFormat = "htgnn.parameters";
inline constexpr int kParameterFormatVersion = 1;

}  // namespace htgnn
