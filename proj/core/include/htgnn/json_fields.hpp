// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "htgnn/error.hpp"

namespace htgnn::json_fields {

/// Throws ConfigError unless `j` is an object whose keys all appear in `allowed`.
inline void require_known(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                          std::string_view section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

/// Assigns j[key] to `field` when present, with a ConfigError on type mismatch.
template <typename T>
void read(const nlohmann::json& j, const char* key, T& field, std::string_view section) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    field = it->template get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(section) + "." + key + ": " + e.what());
  }
}

}  // namespace htgnn::json_fields
