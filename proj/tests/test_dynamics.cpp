// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "htgnn/dynamics.hpp"
#include "htgnn/error.hpp"
#include "support.hpp"

using namespace htgnn;
using htgnn::test::check_gradients;
using htgnn::test::random_tensor;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.window = 12;
  c.speed_dim = 3;
  c.temperature_dim = 3;
  c.vibration_dim = 2;
  return c;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

GruWeights random_gru(std::size_t in, std::size_t d, std::mt19937_64& rng, bool grad = false) {
  GruWeights w;
  for (auto* t : {&w.W_z, &w.W_r, &w.W_h}) *t = random_tensor({in, d}, rng, -0.5, 0.5, grad);
  for (auto* t : {&w.U_z, &w.U_r, &w.U_h}) *t = random_tensor({d, d}, rng, -0.5, 0.5, grad);
  for (auto* t : {&w.b_z, &w.b_r, &w.b_h}) *t = random_tensor({d}, rng, -0.5, 0.5, grad);
  return w;
}

}  // namespace

TEST(EncoderConfig, PreProjectionLength) {
  EncoderConfig c;  // window 30, kernels 3, 5, 5: 30 - 2 - 4 - 4
  EXPECT_EQ(c.conv_output_length(), 20u);
  ParameterStore p;
  ConvEncoder enc(p, "enc", c, 10);
  EXPECT_EQ(enc.conv_features(Tensor::zeros({2, 30})).shape(), (Shape{2, 20}));
  c.window = 10;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SpeedEncoder, ZeroWindowZeroWeights) {
  ParameterStore p;
  DynamicsExtractor dyn(p, EncoderConfig{});
  p.fill_zero();
  const auto h = dyn.encode_speed(Tensor::zeros({30}));
  EXPECT_EQ(h.shape(), Shape{10});
  for (double v : h.values()) EXPECT_EQ(v, 0.0);
}

TEST(SpeedEncoder, ShortWindowRejected) {
  ParameterStore p;
  DynamicsExtractor dyn(p, small_config());
  EXPECT_THROW(dyn.encode_speed(Tensor::zeros({9})), DimensionError);
}

TEST(Gru, MatchesHandUnrolledThreeSteps) {
  std::mt19937_64 rng(21);
  const std::size_t d = 3, rows = 2;
  const auto w = random_gru(1, d, rng);
  const auto xs = random_tensor({rows, 3}, rng, -1, 1, false);
  auto h0 = random_tensor({rows, d}, rng, -1, 1, false);

  auto h = h0;
  for (std::size_t t = 0; t < 3; ++t) h = gru_cell(slice_cols(xs, t, 1), h, w);

  for (std::size_t m = 0; m < rows; ++m) {
    std::vector<double> s(h0.values().begin() + m * d, h0.values().begin() + (m + 1) * d);
    for (std::size_t t = 0; t < 3; ++t) {
      const double x = xs(m, t);
      std::vector<double> z(d), r(d), n(d), next(d);
      for (std::size_t j = 0; j < d; ++j) {
        double az = x * w.W_z(0, j) + w.b_z.values()[j], ar = x * w.W_r(0, j) + w.b_r.values()[j];
        for (std::size_t k = 0; k < d; ++k) {
          az += s[k] * w.U_z(k, j);
          ar += s[k] * w.U_r(k, j);
        }
        z[j] = sig(az);
        r[j] = sig(ar);
      }
      for (std::size_t j = 0; j < d; ++j) {
        double an = x * w.W_h(0, j) + w.b_h.values()[j];
        for (std::size_t k = 0; k < d; ++k) an += r[k] * s[k] * w.U_h(k, j);
        n[j] = std::tanh(an);
        next[j] = z[j] * s[j] + (1.0 - z[j]) * n[j];
      }
      s = next;
    }
    for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(h(m, j), s[j], 1e-12);
  }
}

TEST(Gru, ShapeChecks) {
  std::mt19937_64 rng(1);
  const auto w = random_gru(1, 3, rng);
  EXPECT_THROW(gru_cell(Tensor::zeros({2, 1}), Tensor::zeros({3, 3}), w), DimensionError);
  EXPECT_THROW(gru_cell(Tensor::zeros({2, 2}), Tensor::zeros({2, 3}), w), DimensionError);
}

class GruGradient : public ::testing::TestWithParam<int> {};

TEST_P(GruGradient, FiniteDifferences) {
  std::mt19937_64 rng(300 + GetParam());
  const auto w = random_gru(2, 3, rng, true);
  const auto r = check_gradients(
      [](const auto& in) {
        const GruWeights g{in[2], in[3], in[4], in[5], in[6], in[7], in[8], in[9], in[10]};
        return gru_cell(in[0], gru_cell(in[0], in[1], g), g);
      },
      {random_tensor({4, 2}, rng), random_tensor({4, 3}, rng), w.W_z, w.U_z, w.b_z, w.W_r, w.U_r, w.b_r, w.W_h,
       w.U_h, w.b_h});
  EXPECT_LT(r.max_error, htgnn::test::kFdRelTol) << r.where;
}

INSTANTIATE_TEST_SUITE_P(Instances, GruGradient, ::testing::Range(0, 5));

TEST(TemperatureEncoder, ZeroFixedPoint) {
  ParameterStore p;
  DynamicsExtractor dyn(p, EncoderConfig{});
  p.fill_zero();
  const auto h = dyn.encode_temperature(Tensor::zeros({20, 30}), Tensor::zeros({1, 10}), 20);
  EXPECT_EQ(h.shape(), (Shape{20, 10}));
  for (double v : h.values()) EXPECT_EQ(v, 0.0);
}

TEST(TemperatureEncoder, ProjectsContextOnlyWhenWidthsDiffer) {
  ParameterStore a, b;
  auto same = EncoderConfig{};
  TemperatureEncoder enc_same(a, "t", same);
  EXPECT_FALSE(enc_same.projects_context());
  auto diff = same;
  diff.speed_dim = 4;
  TemperatureEncoder enc_diff(b, "t", diff);
  EXPECT_TRUE(enc_diff.projects_context());
  EXPECT_TRUE(b.contains("t.init_proj.weight"));
}

TEST(TemperatureEncoder, FinalStateWithSilu) {
  std::mt19937_64 rng(22);
  ParameterStore p;
  auto cfg = small_config();
  TemperatureEncoder enc(p, "t", cfg);
  p.initialize(rng);
  const auto series = random_tensor({2, cfg.window}, rng, -1, 1, false);
  const auto ctx = random_tensor({1, cfg.temperature_dim}, rng, -1, 1, false);
  auto h = repeat_per_node(ctx, 2);
  for (std::size_t t = 0; t < cfg.window; ++t) h = gru_cell(slice_cols(series, t, 1), h, enc.weights());
  const auto expected = silu(h);
  const auto got = enc.forward(series, ctx, 2);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got.values()[i], expected.values()[i]);
}

TEST(VibrationEncoder, ContextConcatenation) {
  ParameterStore p;
  DynamicsExtractor dyn(p, EncoderConfig{});
  p.fill_zero();
  const auto hw = Tensor::from({1, 10}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const auto h = dyn.encode_vibration(Tensor::zeros({12, 30}), hw, 12);
  EXPECT_EQ(h.shape(), (Shape{12, 20}));
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      EXPECT_EQ(h(i, j), 0.0);
      EXPECT_EQ(h(i, 10 + j), hw(0, j));
    }
  }
}

TEST(VibrationEncoder, SharedWeightsGiveIdenticalRows) {
  std::mt19937_64 rng(23);
  ParameterStore p;
  DynamicsExtractor dyn(p, small_config());
  p.initialize(rng);
  const auto row = random_tensor({1, 12}, rng, -1, 1, false);
  const auto h = dyn.encode_vibration(concat_rows(row, row), random_tensor({1, 3}, rng, -1, 1, false), 2);
  for (std::size_t j = 0; j < h.dim(1); ++j) EXPECT_EQ(h(0, j), h(1, j));
}

TEST(Dynamics, NodeWiseLocality) {
  std::mt19937_64 rng(24);
  ParameterStore p;
  const auto cfg = small_config();
  DynamicsExtractor dyn(p, cfg);
  p.initialize(rng);
  const auto ctx = random_tensor({1, 3}, rng, -1, 1, false);
  auto t = random_tensor({4, 12}, rng, -1, 1, false);
  auto v = random_tensor({3, 12}, rng, -1, 1, false);
  const auto ht = dyn.encode_temperature(t, ctx, 4), hv = dyn.encode_vibration(v, ctx, 3);
  auto t2 = Tensor::from(t.shape(), {t.values().begin(), t.values().end()});
  t2.mutable_values()[2 * 12 + 5] += 0.5;
  auto v2 = Tensor::from(v.shape(), {v.values().begin(), v.values().end()});
  v2.mutable_values()[1 * 12 + 7] += 0.5;
  const auto ht2 = dyn.encode_temperature(t2, ctx, 4), hv2 = dyn.encode_vibration(v2, ctx, 3);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < ht.dim(1); ++j) {
      if (i == 2) continue;
      EXPECT_EQ(ht(i, j), ht2(i, j));
    }
  bool changed = false;
  for (std::size_t j = 0; j < ht.dim(1); ++j) changed |= ht(2, j) != ht2(2, j);
  EXPECT_TRUE(changed);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < hv.dim(1); ++j) {
      if (i != 1) {
        EXPECT_EQ(hv(i, j), hv2(i, j));
      }
    }
}

TEST(Dynamics, EmbeddingsDependOnSpeed) {
  std::mt19937_64 rng(25);
  ParameterStore p;
  DynamicsExtractor dyn(p, small_config());
  p.initialize(rng);
  auto speed = random_tensor({1, 12}, rng);
  const auto e = dyn.forward(random_tensor({4, 12}, rng, -1, 1, false), random_tensor({3, 12}, rng, -1, 1, false),
                             speed, 4, 3);
  for (const auto& h : {e.temperature, e.vibration}) {
    speed.zero_grad();
    sum(h).backward();
    double norm = 0.0;
    for (double g : speed.grad()) norm += g * g;
    EXPECT_GT(norm, 0.0);
  }
}

class DynamicsGradient : public ::testing::TestWithParam<int> {};

TEST_P(DynamicsGradient, FullExtractorFiniteDifferences) {
  std::mt19937_64 rng(400 + GetParam());
  ParameterStore p;
  DynamicsExtractor dyn(p, small_config());
  p.initialize(rng);
  std::vector<Tensor> inputs{random_tensor({2 * 2, 12}, rng), random_tensor({2 * 2, 12}, rng),
                             random_tensor({2, 12}, rng)};
  for (const auto& e : p.entries()) inputs.push_back(e.tensor);
  const auto r = check_gradients(
      [&](const auto& in) {
        const auto e = dyn.forward(in[0], in[1], in[2], 2, 2);
        return concat_cols(reshape(e.temperature, {1, e.temperature.size()}),
                           reshape(e.vibration, {1, e.vibration.size()}));
      },
      inputs);
  EXPECT_LT(r.max_error, htgnn::test::kFdRelTol) << r.where;
}

INSTANTIATE_TEST_SUITE_P(Instances, DynamicsGradient, ::testing::Range(0, 5));
