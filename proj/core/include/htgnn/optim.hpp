// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "htgnn/parameters.hpp"

namespace htgnn {

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step = 0;
};

/// One AdamW update of `param` in place. Weight decay is applied to the
/// parameter directly, not folded into the moments.
void adamw_step(std::span<double> param, std::span<const double> grad, AdamWState& state,
                const AdamWOptions& options);

class AdamW {
 public:
  AdamW(ParameterStore& params, AdamWOptions options);

  void step();
  const AdamWOptions& options() const { return options_; }
  const std::vector<AdamWState>& state() const { return state_; }

 private:
  ParameterStore& params_;
  AdamWOptions options_;
  std::vector<AdamWState> state_;
};

}  // namespace htgnn
