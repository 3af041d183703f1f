// SPDX-License-Identifier: Apache-2.0
#include "htgnn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "vecmath.hpp"

namespace htgnn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

MutMap as_matrix(std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return MutMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

detail::Node& input(detail::Node& self, std::size_t i) { return *self.inputs[i]; }

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (!t.defined()) throw DimensionError(std::string(op) + ": undefined operand");
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

template <class Forward, class Derivative>
Tensor unary(const Tensor& x, const char* op, Forward f, Derivative df) {
  const auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return Tensor::make_result(x.shape(), std::move(out), op, {x}, [df](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * df(src.value[i], self.value[i]);
    }
  });
}

// cols[(n * l_out + t), (c * k + j)] = x[n, c, t + j - padding] (zero outside)
void im2col(const std::vector<double>& x, std::size_t n, std::size_t c_in, std::size_t len,
            std::size_t k, std::size_t padding, std::size_t l_out, std::vector<double>& cols) {
  const std::size_t width = c_in * k;
  cols.assign(n * l_out * width, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < l_out; ++t) {
      double* row = cols.data() + (s * l_out + t) * width;
      for (std::size_t c = 0; c < c_in; ++c) {
        const double* src = x.data() + (s * c_in + c) * len;
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t + j) -
                                     static_cast<std::ptrdiff_t>(padding);
          if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(len)) row[c * k + j] = src[pos];
        }
      }
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner extents differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n);
  as_matrix(out, m, n).noalias() =
      as_matrix(a.node()->value, m, k) * as_matrix(b.node()->value, k, n);
  return Tensor::make_result({m, n}, std::move(out), "matmul", {a, b},
                             [m, k, n](detail::Node& self) {
    auto& lhs = input(self, 0);
    auto& rhs = input(self, 1);
    const auto grad = as_matrix(self.grad, m, n);
    if (lhs.requires_grad) {
      as_matrix(lhs.grad_buffer(), m, k).noalias() += grad * as_matrix(rhs.value, k, n).transpose();
    }
    if (rhs.requires_grad) {
      as_matrix(rhs.grad_buffer(), k, n).noalias() += as_matrix(lhs.value, m, k).transpose() * grad;
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  auto out = matmul(x, weight);
  return bias.defined() ? add_bias(out, bias) : out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return Tensor::make_result(a.shape(), std::move(out), "add", {a, b}, [](detail::Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto& src = input(self, k);
      if (!src.requires_grad) continue;
      auto& g = src.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return Tensor::make_result(a.shape(), std::move(out), "sub", {a, b}, [](detail::Node& self) {
    auto& lhs = input(self, 0);
    auto& rhs = input(self, 1);
    if (lhs.requires_grad) {
      auto& g = lhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (rhs.requires_grad) {
      auto& g = rhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return Tensor::make_result(a.shape(), std::move(out), "mul", {a, b}, [](detail::Node& self) {
    auto& lhs = input(self, 0);
    auto& rhs = input(self, 1);
    if (lhs.requires_grad) {
      auto& g = lhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * rhs.value[i];
    }
    if (rhs.requires_grad) {
      auto& g = rhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * lhs.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, "scale", [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_rank(a, 2, "add_bias");
  const std::size_t m = a.dim(0), n = a.dim(1);
  if (bias.size() != n) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " does not match " +
                         shape_string(a.shape()));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto b = bias.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  }
  return Tensor::make_result(a.shape(), std::move(out), "add_bias", {a, bias},
                             [m, n](detail::Node& self) {
    auto& lhs = input(self, 0);
    auto& rhs = input(self, 1);
    if (lhs.requires_grad) {
      auto& g = lhs.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (rhs.requires_grad) {
      auto& g = rhs.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
      }
    }
  });
}

Tensor silu(const Tensor& x) {
  const std::size_t n = x.size();
  auto s = std::make_shared<std::vector<double>>(n);
  logistic(x.values().data(), s->data(), n, 1.0);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = x.values()[i] * (*s)[i];
  return Tensor::make_result(x.shape(), std::move(out), "silu", {x}, [s](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double si = (*s)[i];
      g[i] += self.grad[i] * si * (1.0 + src.value[i] * (1.0 - si));
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  std::vector<double> out(x.size());
  logistic(x.values().data(), out.data(), out.size(), 1.0);
  return Tensor::make_result(x.shape(), std::move(out), "sigmoid", {x}, [](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.value[i] * (1.0 - self.value[i]);
  });
}

Tensor tanh(const Tensor& x) {
  std::vector<double> out(x.size());
  tanh_into(x.values().data(), out.data(), out.size());
  return Tensor::make_result(x.shape(), std::move(out), "tanh", {x}, [](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (1.0 - self.value[i] * self.value[i]);
  });
}

Tensor leaky_relu(const Tensor& x, double negative_slope) {
  return unary(
      x, "leaky_relu", [negative_slope](double v) { return v > 0 ? v : negative_slope * v; },
      [negative_slope](double v, double) { return v > 0 ? 1.0 : negative_slope; });
}

Tensor abs(const Tensor& x) {
  return unary(
      x, "abs", [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.values()) total += v;
  return Tensor::make_result({1}, {total}, "sum", {x}, [](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return Tensor::make_result(std::move(shape), std::move(out), "reshape", {x},
                             [](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const std::size_t m = a.dim(0), p = a.dim(1), q = b.dim(1);
  if (b.dim(0) != m) {
    throw DimensionError("concat_cols: row counts differ, " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * (p + q));
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.values().begin() + i * p, p, out.begin() + i * (p + q));
    std::copy_n(b.values().begin() + i * q, q, out.begin() + i * (p + q) + p);
  }
  return Tensor::make_result({m, p + q}, std::move(out), "concat_cols", {a, b},
                             [m, p, q](detail::Node& self) {
    auto& lhs = input(self, 0);
    auto& rhs = input(self, 1);
    if (lhs.requires_grad) {
      auto& g = lhs.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < p; ++j) g[i * p + j] += self.grad[i * (p + q) + j];
      }
    }
    if (rhs.requires_grad) {
      auto& g = rhs.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < q; ++j) g[i * q + j] += self.grad[i * (p + q) + p + j];
      }
    }
  });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "concat_rows");
  require_rank(b, 2, "concat_rows");
  if (a.dim(1) != b.dim(1)) {
    throw DimensionError("concat_rows: column counts differ, " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
  const std::size_t na = a.size();
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.values().begin(), a.values().end());
  out.insert(out.end(), b.values().begin(), b.values().end());
  return Tensor::make_result({a.dim(0) + b.dim(0), a.dim(1)}, std::move(out), "concat_rows",
                             {a, b}, [na](detail::Node& self) {
    auto& top = input(self, 0);
    auto& bottom = input(self, 1);
    if (top.requires_grad) {
      auto& g = top.grad_buffer();
      for (std::size_t i = 0; i < na; ++i) g[i] += self.grad[i];
    }
    if (bottom.requires_grad) {
      auto& g = bottom.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[na + i];
    }
  });
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t count) {
  require_rank(x, 2, "slice_cols");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (count == 0 || start + count > n) {
    throw DimensionError("slice_cols: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") outside " + shape_string(x.shape()));
  }
  std::vector<double> out(m * count);
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(x.values().begin() + i * n + start, count, out.begin() + i * count);
  }
  return Tensor::make_result({m, count}, std::move(out), "slice_cols", {x},
                             [m, n, start, count](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < count; ++j) g[i * n + start + j] += self.grad[i * count + j];
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  require_rank(x, 2, "gather_rows");
  const std::size_t rows = x.dim(0), d = x.dim(1);
  if (index.empty()) throw DimensionError("gather_rows: empty index");
  std::vector<double> out(index.size() * d);
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] >= rows) {
      throw DimensionError("gather_rows: row " + std::to_string(index[e]) + " outside " +
                           shape_string(x.shape()));
    }
    std::copy_n(x.values().begin() + index[e] * d, d, out.begin() + e * d);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return Tensor::make_result({index.size(), d}, std::move(out), "gather_rows", {x},
                             [idx = std::move(idx), d](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t e = 0; e < idx.size(); ++e) {
      for (std::size_t j = 0; j < d; ++j) g[idx[e] * d + j] += self.grad[e * d + j];
    }
  });
}

Tensor scatter_add_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t rows) {
  require_rank(x, 2, "scatter_add_rows");
  const std::size_t d = x.dim(1);
  if (index.size() != x.dim(0)) {
    throw DimensionError("scatter_add_rows: " + std::to_string(index.size()) +
                         " indices for " + shape_string(x.shape()));
  }
  std::vector<double> out(rows * d, 0.0);
  for (std::size_t e = 0; e < index.size(); ++e) {
    if (index[e] >= rows) {
      throw DimensionError("scatter_add_rows: target " + std::to_string(index[e]) +
                           " outside " + std::to_string(rows) + " rows");
    }
    for (std::size_t j = 0; j < d; ++j) out[index[e] * d + j] += x.values()[e * d + j];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return Tensor::make_result({rows, d}, std::move(out), "scatter_add_rows", {x},
                             [idx = std::move(idx), d](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t e = 0; e < idx.size(); ++e) {
      for (std::size_t j = 0; j < d; ++j) g[e * d + j] += self.grad[idx[e] * d + j];
    }
  });
}

Tensor scale_rows(const Tensor& x, std::span<const double> factor) {
  require_rank(x, 2, "scale_rows");
  const std::size_t m = x.dim(0), d = x.dim(1);
  if (factor.size() != m) {
    throw DimensionError("scale_rows: " + std::to_string(factor.size()) + " factors for " +
                         shape_string(x.shape()));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] *= factor[i];
  }
  std::vector<double> f(factor.begin(), factor.end());
  return Tensor::make_result(x.shape(), std::move(out), "scale_rows", {x},
                             [f = std::move(f), d](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t i = 0; i < f.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[i * d + j] * f[i];
    }
  });
}

Tensor mul_rows(const Tensor& x, const Tensor& weights) {
  require_rank(x, 2, "mul_rows");
  const std::size_t m = x.dim(0), d = x.dim(1);
  if (weights.size() != m) {
    throw DimensionError("mul_rows: weights " + shape_string(weights.shape()) + " for rows of " +
                         shape_string(x.shape()));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  const auto w = weights.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] *= w[i];
  }
  return Tensor::make_result(x.shape(), std::move(out), "mul_rows", {x, weights},
                             [m, d](detail::Node& self) {
    auto& rows = input(self, 0);
    auto& w = input(self, 1);
    if (rows.requires_grad) {
      auto& g = rows.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) g[i * d + j] += self.grad[i * d + j] * w.value[i];
      }
    }
    if (w.requires_grad) {
      auto& g = w.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += self.grad[i * d + j] * rows.value[i * d + j];
        g[i] += acc;
      }
    }
  });
}

Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count) {
  require_rank(x, 2, "slice_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (count == 0 || start + count > m) {
    throw DimensionError("slice_rows: rows [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") outside " + shape_string(x.shape()));
  }
  std::vector<double> out(x.values().begin() + static_cast<std::ptrdiff_t>(start * n),
                          x.values().begin() + static_cast<std::ptrdiff_t>((start + count) * n));
  return Tensor::make_result({count, n}, std::move(out), "slice_rows", {x}, [start, n](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[start * n + i] += self.grad[i];
  });
}

namespace {

using EdgeIndex = std::shared_ptr<const std::vector<std::size_t>>;

EdgeIndex checked_index(std::span<const std::size_t> index, std::size_t bound, const char* op, const char* what) {
  for (auto i : index) {
    if (i >= bound) {
      throw DimensionError(std::string(op) + ": " + what + " row " + std::to_string(i) + " outside " +
                           std::to_string(bound) + " rows");
    }
  }
  return std::make_shared<const std::vector<std::size_t>>(index.begin(), index.end());
}

}  // namespace

Tensor weighted_scatter_rows(const Tensor& x, const Tensor& weights, std::span<const std::size_t> src,
                             std::span<const std::size_t> dst, std::size_t rows) {
  require_rank(x, 2, "weighted_scatter_rows");
  if (src.size() != dst.size() || !weights.defined() || weights.size() != src.size()) {
    throw DimensionError("weighted_scatter_rows: " + std::to_string(src.size()) + " sources, " +
                         std::to_string(dst.size()) + " targets and " +
                         std::to_string(weights.defined() ? weights.size() : 0) + " weights");
  }
  if (rows == 0) throw DimensionError("weighted_scatter_rows: zero output rows");
  const std::size_t d = x.dim(1);
  auto s_idx = checked_index(src, x.dim(0), "weighted_scatter_rows", "source");
  auto d_idx = checked_index(dst, rows, "weighted_scatter_rows", "target");
  std::vector<double> out(rows * d, 0.0);
  const auto xv = x.values();
  const auto w = weights.values();
  for (std::size_t e = 0; e < src.size(); ++e) {
    const double* from = xv.data() + src[e] * d;
    double* to = out.data() + dst[e] * d;
    for (std::size_t j = 0; j < d; ++j) to[j] += w[e] * from[j];
  }
  return Tensor::make_result({rows, d}, std::move(out), "weighted_scatter_rows", {x, weights},
                             [s_idx, d_idx, d](detail::Node& self) {
    auto& xn = input(self, 0);
    auto& wn = input(self, 1);
    const auto& s = *s_idx;
    const auto& t = *d_idx;
    if (xn.requires_grad) {
      auto& g = xn.grad_buffer();
      for (std::size_t e = 0; e < s.size(); ++e) {
        const double* from = self.grad.data() + t[e] * d;
        double* to = g.data() + s[e] * d;
        for (std::size_t j = 0; j < d; ++j) to[j] += wn.value[e] * from[j];
      }
    }
    if (wn.requires_grad) {
      auto& g = wn.grad_buffer();
      for (std::size_t e = 0; e < s.size(); ++e) {
        const double* gr = self.grad.data() + t[e] * d;
        const double* xr = xn.value.data() + s[e] * d;
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += gr[j] * xr[j];
        g[e] += acc;
      }
    }
  });
}

Tensor edge_attention_scores(const Tensor& dst_proj, const Tensor& src_proj, const Tensor& att_vector,
                             std::span<const std::size_t> src, std::span<const std::size_t> dst,
                             double negative_slope) {
  require_rank(dst_proj, 2, "edge_attention_scores");
  require_rank(src_proj, 2, "edge_attention_scores");
  const std::size_t h = dst_proj.dim(1);
  if (src_proj.dim(1) != h || !att_vector.defined() || att_vector.size() != h) {
    throw DimensionError("edge_attention_scores: projections " + shape_string(dst_proj.shape()) + ", " +
                         shape_string(src_proj.shape()) + " and attention vector disagree in width");
  }
  if (src.size() != dst.size()) throw DimensionError("edge_attention_scores: src/dst lengths differ");
  if (src.empty()) throw DimensionError("edge_attention_scores: no edges");
  auto s_idx = checked_index(src, src_proj.dim(0), "edge_attention_scores", "source");
  auto d_idx = checked_index(dst, dst_proj.dim(0), "edge_attention_scores", "target");
  const auto p = dst_proj.values(), q = src_proj.values(), a = att_vector.values();
  std::vector<double> out(src.size());
  for (std::size_t e = 0; e < src.size(); ++e) {
    const double* pr = p.data() + dst[e] * h;
    const double* qr = q.data() + src[e] * h;
    double acc = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      const double u = pr[j] + qr[j];
      acc += a[j] * (u > 0 ? u : negative_slope * u);
    }
    out[e] = acc;
  }
  return Tensor::make_result({src.size()}, std::move(out), "edge_attention_scores", {dst_proj, src_proj, att_vector},
                             [s_idx, d_idx, h, negative_slope](detail::Node& self) {
    auto& pn = input(self, 0);
    auto& qn = input(self, 1);
    auto& an = input(self, 2);
    const auto& s = *s_idx;
    const auto& t = *d_idx;
    double* gp = pn.requires_grad ? pn.grad_buffer().data() : nullptr;
    double* gq = qn.requires_grad ? qn.grad_buffer().data() : nullptr;
    double* ga = an.requires_grad ? an.grad_buffer().data() : nullptr;
    for (std::size_t e = 0; e < s.size(); ++e) {
      const double ge = self.grad[e];
      const double* pr = pn.value.data() + t[e] * h;
      const double* qr = qn.value.data() + s[e] * h;
      for (std::size_t j = 0; j < h; ++j) {
        const double u = pr[j] + qr[j];
        const double slope = u > 0 ? 1.0 : negative_slope;
        if (ga) ga[j] += ge * slope * u;
        const double gu = ge * an.value[j] * slope;
        if (gp) gp[t[e] * h + j] += gu;
        if (gq) gq[s[e] * h + j] += gu;
      }
    }
  });
}

Tensor segment_softmax(const Tensor& scores, std::span<const std::size_t> segment_ids,
                       std::size_t num_segments) {
  if (!scores.defined() || segment_ids.empty()) return {};
  const std::size_t e_count = scores.size();
  if (segment_ids.size() != e_count) {
    throw DimensionError("segment_softmax: " + std::to_string(segment_ids.size()) +
                         " segment ids for " + std::to_string(e_count) + " scores");
  }
  std::vector<double> peak(num_segments, -std::numeric_limits<double>::infinity());
  const auto s = scores.values();
  for (std::size_t e = 0; e < e_count; ++e) {
    if (segment_ids[e] >= num_segments) {
      throw DimensionError("segment_softmax: segment id " + std::to_string(segment_ids[e]) +
                           " >= " + std::to_string(num_segments));
    }
    peak[segment_ids[e]] = std::max(peak[segment_ids[e]], s[e]);
  }
  std::vector<double> out(e_count);
  std::vector<double> total(num_segments, 0.0);
  for (std::size_t e = 0; e < e_count; ++e) {
    out[e] = std::exp(s[e] - peak[segment_ids[e]]);
    total[segment_ids[e]] += out[e];
  }
  for (std::size_t e = 0; e < e_count; ++e) out[e] /= total[segment_ids[e]];
  std::vector<std::size_t> seg(segment_ids.begin(), segment_ids.end());
  return Tensor::make_result(scores.shape(), std::move(out), "segment_softmax", {scores},
                             [seg = std::move(seg), num_segments](detail::Node& self) {
    auto& src = input(self, 0);
    if (!src.requires_grad) return;
    std::vector<double> dot(num_segments, 0.0);
    for (std::size_t e = 0; e < seg.size(); ++e) dot[seg[e]] += self.grad[e] * self.value[e];
    auto& g = src.grad_buffer();
    for (std::size_t e = 0; e < seg.size(); ++e) {
      g[e] += self.value[e] * (self.grad[e] - dot[seg[e]]);
    }
  });
}

Tensor conv1d(const Tensor& x, const Tensor& kernels, const Tensor& bias, std::size_t padding) {
  if (!x.defined() || (x.rank() != 2 && x.rank() != 3)) {
    throw DimensionError("conv1d: input must be [C_in x L] or [N x C_in x L], got " +
                         (x.defined() ? shape_string(x.shape()) : std::string("undefined")));
  }
  require_rank(kernels, 3, "conv1d");
  const bool batched = x.rank() == 3;
  const std::size_t n = batched ? x.dim(0) : 1;
  const std::size_t c_in = x.dim(batched ? 1 : 0);
  const std::size_t len = x.dim(batched ? 2 : 1);
  const std::size_t c_out = kernels.dim(0), k = kernels.dim(2);
  if (kernels.dim(1) != c_in) {
    throw DimensionError("conv1d: kernels " + shape_string(kernels.shape()) +
                         " do not match input " + shape_string(x.shape()));
  }
  if (bias.defined() && bias.size() != c_out) {
    throw DimensionError("conv1d: bias " + shape_string(bias.shape()) + " for " +
                         std::to_string(c_out) + " output channels");
  }
  if (k > len + 2 * padding) {
    throw DimensionError("conv1d: window too short, kernel " + std::to_string(k) +
                         " exceeds padded length " + std::to_string(len + 2 * padding));
  }
  const std::size_t l_out = len + 2 * padding - k + 1;
  const std::size_t width = c_in * k;

  auto cols_ptr = std::make_shared<std::vector<double>>();
  auto& cols = *cols_ptr;
  im2col(x.node()->value, n, c_in, len, k, padding, l_out, cols);
  // tmp[(s, t), co] = sum_w cols[(s, t), w] * kernels[co, w]
  std::vector<double> tmp(n * l_out * c_out);
  as_matrix(tmp, n * l_out, c_out).noalias() =
      as_matrix(cols, n * l_out, width) * as_matrix(kernels.node()->value, c_out, width).transpose();
  std::vector<double> out(n * c_out * l_out);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t co = 0; co < c_out; ++co) {
      const double b = bias.defined() ? bias.values()[co] : 0.0;
      for (std::size_t t = 0; t < l_out; ++t) {
        out[(s * c_out + co) * l_out + t] = tmp[(s * l_out + t) * c_out + co] + b;
      }
    }
  }
  Shape shape = batched ? Shape{n, c_out, l_out} : Shape{c_out, l_out};
  std::vector<Tensor> inputs{x, kernels};
  if (bias.defined()) inputs.push_back(bias);
  // The im2col matrix is kept for the kernel gradient only when one will be needed.
  if (!(grad_mode_enabled() && kernels.requires_grad())) cols_ptr.reset();
  return Tensor::make_result(std::move(shape), std::move(out), "conv1d", std::move(inputs),
                             [n, c_in, len, c_out, k, padding, l_out, width, cols_ptr](detail::Node& self) {
    auto& src = input(self, 0);
    auto& ker = input(self, 1);
    std::vector<double> grad_t(n * l_out * c_out);
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t co = 0; co < c_out; ++co) {
        for (std::size_t t = 0; t < l_out; ++t) {
          grad_t[(s * l_out + t) * c_out + co] = self.grad[(s * c_out + co) * l_out + t];
        }
      }
    }
    const auto g = as_matrix(grad_t, n * l_out, c_out);
    if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
      auto& gb = self.inputs[2]->grad_buffer();
      for (std::size_t r = 0; r < n * l_out; ++r) {
        for (std::size_t co = 0; co < c_out; ++co) gb[co] += grad_t[r * c_out + co];
      }
    }
    if (ker.requires_grad) {
      std::vector<double> fresh;
      if (!cols_ptr) im2col(src.value, n, c_in, len, k, padding, l_out, fresh);
      auto& cols = cols_ptr ? *cols_ptr : fresh;
      as_matrix(ker.grad_buffer(), c_out, width).noalias() +=
          g.transpose() * as_matrix(cols, n * l_out, width);
    }
    if (src.requires_grad) {
      std::vector<double> dcols(n * l_out * width);
      as_matrix(dcols, n * l_out, width).noalias() = g * as_matrix(ker.value, c_out, width);
      auto& gx = src.grad_buffer();
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t t = 0; t < l_out; ++t) {
          const double* row = dcols.data() + (s * l_out + t) * width;
          for (std::size_t c = 0; c < c_in; ++c) {
            for (std::size_t j = 0; j < k; ++j) {
              const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t + j) -
                                         static_cast<std::ptrdiff_t>(padding);
              if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(len)) {
                gx[(s * c_in + c) * len + static_cast<std::size_t>(pos)] += row[c * k + j];
              }
            }
          }
        }
      }
    }
  });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormState& state,
                  bool training) {
  require_rank(x, 3, "batch_norm");
  const std::size_t n = x.dim(0), c = x.dim(1), len = x.dim(2);
  if (gamma.size() != c || beta.size() != c || state.running_mean.size() != c ||
      state.running_var.size() != c) {
    throw DimensionError("batch_norm: affine/state sizes do not match " + std::to_string(c) +
                         " channels");
  }
  const double count = static_cast<double>(n * len);
  if (training && n * len < 2) throw DimensionError("batch_norm: training needs >1 value per channel");
  const auto xv = x.values();
  std::vector<double> mean_c(c, 0.0), inv_std(c);
  if (training) {
    std::vector<double> var_c(c, 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t t = 0; t < len; ++t) mean_c[ch] += xv[(s * c + ch) * len + t];
    for (auto& m : mean_c) m /= count;
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t t = 0; t < len; ++t) {
          const double d = xv[(s * c + ch) * len + t] - mean_c[ch];
          var_c[ch] += d * d;
        }
    for (std::size_t ch = 0; ch < c; ++ch) {
      var_c[ch] /= count;
      inv_std[ch] = 1.0 / std::sqrt(var_c[ch] + state.eps);
      state.running_mean[ch] =
          (1.0 - state.momentum) * state.running_mean[ch] + state.momentum * mean_c[ch];
      state.running_var[ch] = (1.0 - state.momentum) * state.running_var[ch] +
                              state.momentum * var_c[ch] * count / (count - 1.0);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mean_c[ch] = state.running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(state.running_var[ch] + state.eps);
    }
  }
  std::vector<double> xhat(x.size()), out(x.size());
  const auto gv = gamma.values();
  const auto bv = beta.values();
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t i = (s * c + ch) * len + t;
        xhat[i] = (xv[i] - mean_c[ch]) * inv_std[ch];
        out[i] = gv[ch] * xhat[i] + bv[ch];
      }
  return Tensor::make_result(x.shape(), std::move(out), "batch_norm", {x, gamma, beta},
                             [n, c, len, count, training, xhat = std::move(xhat),
                              inv_std = std::move(inv_std)](detail::Node& self) {
    auto& src = input(self, 0);
    auto& gam = input(self, 1);
    auto& bet = input(self, 2);
    std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t t = 0; t < len; ++t) {
          const std::size_t i = (s * c + ch) * len + t;
          sum_g[ch] += self.grad[i];
          sum_gx[ch] += self.grad[i] * xhat[i];
        }
    if (bet.requires_grad) {
      auto& g = bet.grad_buffer();
      for (std::size_t ch = 0; ch < c; ++ch) g[ch] += sum_g[ch];
    }
    if (gam.requires_grad) {
      auto& g = gam.grad_buffer();
      for (std::size_t ch = 0; ch < c; ++ch) g[ch] += sum_gx[ch];
    }
    if (!src.requires_grad) return;
    auto& g = src.grad_buffer();
    for (std::size_t s = 0; s < n; ++s)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double k = gam.value[ch] * inv_std[ch];
        for (std::size_t t = 0; t < len; ++t) {
          const std::size_t i = (s * c + ch) * len + t;
          if (training) {
            g[i] += k * (self.grad[i] - sum_g[ch] / count - xhat[i] * sum_gx[ch] / count);
          } else {
            g[i] += k * self.grad[i];
          }
        }
      }
  });
}

Tensor dropout(const Tensor& x, double p, bool training, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw ConfigError("dropout probability must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  std::vector<double> mask(x.size());
  const double kept = 1.0 / (1.0 - p);
  for (auto& m : mask) m = keep(rng) ? kept : 0.0;
  return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

}  // namespace htgnn
