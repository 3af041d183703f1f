// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace htgnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or extent mismatch between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid model, training or simulator configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed sensor layout or graph description.
class LayoutError : public Error {
 public:
  using Error::Error;
};

// Bad or missing data on disk or in memory.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace htgnn
