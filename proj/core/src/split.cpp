// SPDX-License-Identifier: Apache-2.0
#include "htgnn/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "htgnn/json_fields.hpp"

namespace htgnn {

void SplitConfig::validate() const {
  if (!(train_share > 0.0 && train_share < 1.0)) throw ConfigError("split.train_share must lie in (0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("split.validation_fraction must lie in (0, 1)");
  }
}

nlohmann::json SplitConfig::to_json() const {
  return {{"holdout", holdout}, {"train_share", train_share}, {"validation_fraction", validation_fraction},
          {"seed", seed}};
}

SplitConfig SplitConfig::from_json(const nlohmann::json& j) {
  constexpr std::string_view section = "split";
  json_fields::require_known(j, {"holdout", "train_share", "validation_fraction", "seed"}, section);
  SplitConfig c;
  json_fields::read(j, "holdout", c.holdout, section);
  json_fields::read(j, "train_share", c.train_share, section);
  json_fields::read(j, "validation_fraction", c.validation_fraction, section);
  json_fields::read(j, "seed", c.seed, section);
  c.validate();
  return c;
}

bool SplitPlan::is_unseen(std::size_t condition) const {
  return std::binary_search(unseen.begin(), unseen.end(), condition);
}

std::vector<std::size_t> SplitPlan::test_conditions() const {
  std::vector<std::size_t> all(seen);
  all.insert(all.end(), unseen.begin(), unseen.end());
  std::sort(all.begin(), all.end());
  return all;
}

SplitPlan make_split(std::size_t conditions, const SplitConfig& cfg) {
  cfg.validate();
  if (cfg.holdout >= conditions) {
    throw ConfigError("cannot hold out " + std::to_string(cfg.holdout) + " of " + std::to_string(conditions) +
                      " conditions");
  }
  const std::size_t n_seen = conditions - cfg.holdout;
  const double head = cfg.train_share * static_cast<double>(conditions) / static_cast<double>(n_seen);
  if (head >= 1.0) {
    throw ConfigError("train share " + std::to_string(cfg.train_share) + " unreachable with " +
                      std::to_string(n_seen) + " seen conditions");
  }
  std::vector<std::size_t> ids(conditions);
  std::iota(ids.begin(), ids.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  SplitPlan plan;
  plan.unseen.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(cfg.holdout));
  plan.seen.assign(ids.begin() + static_cast<std::ptrdiff_t>(cfg.holdout), ids.end());
  std::sort(plan.unseen.begin(), plan.unseen.end());
  std::sort(plan.seen.begin(), plan.seen.end());
  plan.seen_head_fraction = head;
  plan.validation_fraction = cfg.validation_fraction;
  plan.seed = cfg.seed;
  return plan;
}

WindowAssignment assign_windows(std::span<const WindowSample> windows, std::span<const std::size_t> case_length,
                                const SplitPlan& plan) {
  WindowAssignment out;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (w.case_id >= case_length.size()) throw DataError("window refers to unknown case " + std::to_string(w.case_id));
    if (plan.is_unseen(w.case_id)) {
      out.test.push_back(i);
      continue;
    }
    const auto boundary =
        static_cast<std::size_t>(std::floor(plan.seen_head_fraction * static_cast<double>(case_length[w.case_id])));
    const std::size_t begin = w.end_index + 1 - w.window;
    if (w.end_index < boundary) {
      pool.push_back(i);
    } else if (begin >= boundary) {
      out.test.push_back(i);
    }
  }
  std::mt19937_64 rng(plan.seed ^ 0x5851F42D4C957F2DULL);
  std::shuffle(pool.begin(), pool.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(plan.validation_fraction * static_cast<double>(pool.size())));
  out.validation.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_val));
  out.train.assign(pool.begin() + static_cast<std::ptrdiff_t>(n_val), pool.end());
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

}  // namespace htgnn
