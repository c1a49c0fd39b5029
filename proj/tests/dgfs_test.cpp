/* Copyright 2026 The DeepSelective Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "deepselective/dgfs.hpp"
#include "deepselective/errors.hpp"
#include "deepselective/gradcheck.hpp"
#include "deepselective/ops.hpp"
#include "testing.hpp"

namespace deepselective::dgfs {
namespace {

using testing::random_tensor;

// Inverse of softmax at tau = 1 with zero noise: logits = log p.
SelectionState state_for(const std::vector<double>& p) {
  std::vector<double> logits(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) logits[i] = std::log(p[i]);
  return compute_selection(Tensor::from({p.size()}, logits, true), 1.0, std::nullopt);
}

std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& v : p) s += v = e(rng);
  for (auto& v : p) v /= s;
  return p;
}

TEST(SelectSupportTest, Examples) {
  EXPECT_EQ(select_support(std::vector<double>{0.6, 0.3, 0.1}), (std::vector<std::size_t>{0}));
  EXPECT_EQ(select_support(std::vector<double>{0.25, 0.25, 0.25, 0.25}),
            (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(select_support(std::vector<double>{0.1, 0.45, 0.45}), (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(select_support(std::vector<double>{0.2, 0.3, 0.5}), (std::vector<std::size_t>{2}));
}

TEST(SelectSupportTest, MatchesExhaustiveSearchAndIsMinimal) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 10;
    const auto p = random_simplex(n, rng);
    const auto s = select_support(p);
    ASSERT_EQ(s, testing::minimal_support_exhaustive(p));
    double mass = 0.0, least = 1.0;
    for (auto i : s) {
      mass += p[i];
      least = std::min(least, p[i]);
    }
    EXPECT_GE(mass, kSupportMass);
    EXPECT_LT(mass - least, kSupportMass);
  }
}

TEST(ComputeSelectionTest, InvariantsHold) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto lp = random_tensor({9}, seed, true, -2.0, 2.0);
    auto s = compute_selection(lp, 0.8, seed);
    double total = 0.0;
    for (double v : s.p.values()) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
    for (std::size_t i = 0; i < 9; ++i) {
      const bool in = std::find(s.support.begin(), s.support.end(), i) != s.support.end();
      EXPECT_EQ(s.selected(i), in);
    }
    EXPECT_TRUE(std::is_sorted(s.support.begin(), s.support.end()));
    auto again = compute_selection(lp, 0.8, seed);
    EXPECT_EQ(s.support, again.support);
  }
}

TEST(ComputeSelectionTest, NoSeedMeansZeroNoise) {
  auto lp = Tensor::vector({0.0, 1.0, 2.0});
  auto s = compute_selection(lp, 1.0, std::nullopt);
  for (double g : s.noise.values()) EXPECT_EQ(g, 0.0);
  EXPECT_EQ(s.support, (std::vector<std::size_t>{2}));
}

TEST(MaskTest, IdentityAndZeroMasks) {
  auto x = random_tensor({3, 4}, 1, false);
  auto all = state_for({0.25, 0.25, 0.25, 0.25});
  all.mask.assign(4, 1.0);
  auto none = all;
  none.mask.assign(4, 0.0);
  auto y = apply_mask(x, all);
  auto z = apply_mask(x, none);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(y.at(i), x.at(i));
    EXPECT_EQ(z.at(i), 0.0);
  }
  EXPECT_THROW(apply_mask(random_tensor({3, 5}, 2, false), all), DimensionError);
}

TEST(MaskTest, StraightThroughForwardEqualsHardMask) {
  auto s = state_for({0.1, 0.4, 0.2, 0.3});
  auto x = random_tensor({5, 4}, 3, false);
  auto a = apply_mask(x, s);
  auto b = straight_through_mask(x, s);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST(MaskTest, UnselectedInputsGetExactlyZeroGradient) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto lp = random_tensor({7}, rng(), true, -2.0, 2.0);
    auto s = compute_selection(lp, 1.0, rng());
    auto x = random_tensor({3, 7}, rng(), true);
    auto w1 = random_tensor({7, 5}, rng(), false), w2 = random_tensor({5, 1}, rng(), false);
    auto h = ops::relu(ops::matmul(straight_through_mask(x, s), w1));
    ops::sum(ops::sigmoid(ops::matmul(h, w2))).backward();
    const auto g = x.grad();
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t i = 0; i < 7; ++i)
        if (!s.selected(i)) ASSERT_EQ(g[r * 7 + i], 0.0);
  }
}

TEST(MaskTest, LogitsReceiveGradientThroughSelectedCoordinates) {
  auto lp = random_tensor({6}, 8, true, -1.0, 1.0);
  auto s = compute_selection(lp, 1.0, 9);
  auto x = random_tensor({2, 6}, 10, false);
  ops::sum(ops::sigmoid(straight_through_mask(x, s))).backward();
  double norm = 0.0;
  for (double g : lp.grad()) norm += std::abs(g);
  EXPECT_GT(norm, 0.0);
}

TEST(MaskTest, RelaxedForwardGradientMatchesFiniteDifferences) {
  // With support fixed by the draw, the relaxed forward x * p_S is a smooth
  // function of the logits and the estimator's backward is its exact gradient.
  auto lp = random_tensor({6}, 11, true, -0.5, 0.5);
  auto x = random_tensor({3, 6}, 12, true);
  auto noise = Tensor::zeros({6});
  const auto support = compute_selection(lp, 1.0, noise).support;
  auto loss = [&] {
    auto s = compute_selection(lp, 1.0, noise);
    if (s.support != support) throw std::runtime_error("support moved under perturbation");
    return ops::sum(ops::sigmoid(straight_through_mask(x, s, MaskForward::kRelaxed)));
  };
  EXPECT_LT(gradient_check(loss, {lp, x}).max_relative_error, 1e-4);
}

TEST(SparsityPenaltyTest, Extremes) {
  auto uniform = state_for({0.25, 0.25, 0.25, 0.25});
  EXPECT_NEAR(sparsity_penalty(uniform, 0.3).item(), 0.0, 1e-15);
  auto onehot = compute_selection(Tensor::vector({0.0, 60.0, 0.0, 0.0}), 0.1, std::nullopt);
  EXPECT_NEAR(sparsity_penalty(onehot, 0.3).item(), 0.3, 1e-12);
  auto half = state_for({0.5 - 1e-13, 0.5 - 1e-13, 1e-13, 1e-13});
  EXPECT_NEAR(sparsity_penalty(half, 1.0).item(), 0.5, 1e-9);
  auto single = state_for({1.0});
  EXPECT_EQ(sparsity_penalty(single, 1.0).item(), 0.0);
}

TEST(SparsityPenaltyTest, GradientMatchesFiniteDifferences) {
  auto lp = random_tensor({5}, 13, true);
  auto g = random_tensor({5}, 14, false);
  auto loss = [&] { return sparsity_penalty(compute_selection(lp, 0.7, g), 0.2); };
  EXPECT_LT(gradient_check(loss, {lp}).max_relative_error, 1e-4);
}

TEST(SupportJsonTest, ListsSupportProbabilitiesAndNames) {
  auto s = state_for({0.1, 0.6, 0.3});
  const std::vector<std::string> names{"a", "b", "c"};
  auto j = nlohmann::json::parse(support_json(s, names));
  EXPECT_EQ(j["support"], nlohmann::json({1}));
  EXPECT_EQ(j["feature_names"], nlohmann::json(names));
  ASSERT_EQ(j["probabilities"].size(), 3u);
  EXPECT_NEAR(j["probabilities"][1].get<double>(), 0.6, 1e-12);
}

}  // namespace
}  // namespace deepselective::dgfs
