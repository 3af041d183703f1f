// SPDX-License-Identifier: Apache-2.0
// Vectorized elementwise kernels shared by the tensor operations.
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>

namespace htgnn {

/// out = 1 / (1 + exp(-scale * in)). Saturates to 0 or 1 without NaN.
/// Every element goes through the same aligned fixed-size block, so the
/// result does not depend on where the caller's buffers sit in memory.
inline void logistic(const double* in, double* out, std::size_t n, double scale) {
  constexpr std::size_t kBlock = 8;
  using Block = Eigen::Array<double, kBlock, 1>;
  Block x, y;
  for (std::size_t i = 0; i < n; i += kBlock) {
    const std::size_t m = std::min(kBlock, n - i);
    x.setZero();
    std::copy(in + i, in + i + m, x.data());
    y = 1.0 / (1.0 + (-scale * x).exp());
    std::copy(y.data(), y.data() + m, out + i);
  }
}

/// tanh(x) = 2 * logistic(2x) - 1.
inline void tanh_into(const double* in, double* out, std::size_t n) {
  logistic(in, out, n, 2.0);
  for (std::size_t i = 0; i < n; ++i) out[i] = 2.0 * out[i] - 1.0;
}

}  // namespace htgnn
