// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "grpo_ground/policy.hpp"
#include "grpo_ground/response.hpp"
#include "grpo_ground/rng.hpp"
#include "oracles.hpp"

namespace grpo_ground {
namespace {

using testing::random_features;
using testing::random_params;

// Puts +big on one logit per head through the biases.
PolicyParams one_hot_params(const PolicyShape& s, const ActionTokens& tokens, double big) {
  PolicyParams p(s);
  for (int k = 0; k < kNumHeads; ++k) p.tensor(head_bias(k))[static_cast<std::size_t>(tokens[static_cast<std::size_t>(k)])] = big;
  return p;
}

TEST(Forward, ZeroWeightsAreUniform) {
  const PolicyShape s{6, 4, 8};
  PolicyParams p(s);
  Rng rng(1);
  const auto probs = head_probabilities(p, random_features(6, rng));
  for (int k = 0; k < 4; ++k) {
    for (double v : probs[static_cast<std::size_t>(k)]) EXPECT_DOUBLE_EQ(v, 1.0 / 8);
  }
  EXPECT_DOUBLE_EQ(probs[kFormatHead][0], 0.5);
  EXPECT_DOUBLE_EQ(probs[kFormatHead][1], 0.5);
}

TEST(Forward, HeadsSumToOne) {
  const PolicyShape s{8, 8, 16};
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_params(s, 100 + i, 2.0);
    const auto probs = head_probabilities(p, random_features(8, rng));
    for (const auto& h : probs) {
      double total = 0;
      for (double v : h) total += v;
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Forward, ShiftInvariant) {
  const PolicyShape s{5, 3, 6};
  auto p = random_params(s, 3, 1.0);
  Rng rng(3);
  const auto x = random_features(5, rng);
  const auto before = head_probabilities(p, x);
  for (double& b : p.tensor(head_bias(2))) b += 17.0;
  const auto after = head_probabilities(p, x);
  for (std::size_t g = 0; g < before[2].size(); ++g) EXPECT_NEAR(before[2][g], after[2][g], 1e-12);
}

TEST(Forward, MatchesReferenceNetwork) {
  const PolicyShape s{7, 5, 4};
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto p = random_params(s, 200 + i, 1.5);
    const auto x = random_features(7, rng);
    const auto got = head_probabilities(p, x);
    const auto want = testing::reference_probs(p, x);
    for (int k = 0; k < kNumHeads; ++k) {
      for (std::size_t g = 0; g < got[k].size(); ++g) EXPECT_NEAR(got[k][g], static_cast<double>(want[k][g]), 1e-14);
    }
  }
}

TEST(Forward, DimensionMismatchThrows) {
  PolicyParams p(PolicyShape{4, 2, 3});
  std::vector<double> x(5, 0.0);
  EXPECT_THROW(forward(p, x), std::invalid_argument);
}

TEST(Sample, DegeneratePolicyIsDeterministic) {
  const PolicyShape s{3, 2, 8};
  const ActionTokens t{1, 2, 5, 7, kFormatOk};
  const auto p = one_hot_params(s, t, 1e6);
  Rng rng(5);
  const std::vector<double> x{0.1, 0.2, 0.3};
  const auto rs = sample(p, x, rng, 8);
  ASSERT_EQ(rs.size(), 8u);
  for (const auto& r : rs) {
    EXPECT_EQ(r.tokens(), t);
    EXPECT_NEAR(r.logprob_old, 0.0, 1e-12);
    EXPECT_EQ(r.rendered, render(kThinkPlaceholder, {1, 2, 5, 7}, false));
  }
}

TEST(Sample, UniformLogprob) {
  const PolicyShape s{3, 2, 8};
  PolicyParams p(s);
  Rng rng(6);
  const std::vector<double> x{0.5, -0.5, 0.0};
  for (const auto& r : sample(p, x, rng, 16)) EXPECT_NEAR(r.logprob_old, 4 * std::log(1.0 / 8) + std::log(0.5), 1e-12);
}

TEST(Sample, SeedDeterminism) {
  const auto p = random_params({4, 3, 5}, 7, 1.0);
  const std::vector<double> x{0.1, 0.9, -0.3, 0.2};
  Rng a(77), b(77);
  const auto ra = sample(p, x, a, 10), rb = sample(p, x, b, 10);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    EXPECT_EQ(ra[i].tokens(), rb[i].tokens());
    EXPECT_EQ(ra[i].logprob_old, rb[i].logprob_old);
  }
}

TEST(Sample, RejectsSingleDraw) {
  PolicyParams p(PolicyShape{2, 2, 2});
  Rng rng(1);
  const std::vector<double> x{0, 0};
  EXPECT_THROW(sample(p, x, rng, 1), std::invalid_argument);
}

TEST(Sample, BrokenFormatRendersCorrupt) {
  const PolicyShape s{2, 2, 4};
  const auto p = one_hot_params(s, {0, 0, 3, 3, kFormatBroken}, 1e6);
  Rng rng(8);
  const std::vector<double> x{0, 0};
  const auto r = sample(p, x, rng, 2).front();
  EXPECT_EQ(r.format_token, kFormatBroken);
  EXPECT_FALSE(parse(r.rendered, 4).format_ok);
}

TEST(Sample, FrequenciesMatchProbabilities) {
  const PolicyShape s{4, 4, 5};
  const auto p = random_params(s, 9, 1.5);
  const std::vector<double> x{0.3, -0.7, 0.2, 0.9};
  const auto probs = head_probabilities(p, x);
  Rng rng(10);
  const int n = 100000;
  std::array<std::vector<int>, kNumHeads> counts;
  for (int k = 0; k < kNumHeads; ++k) counts[k].assign(probs[k].size(), 0);
  for (const auto& r : sample(p, x, rng, n)) {
    const auto t = r.tokens();
    for (int k = 0; k < kNumHeads; ++k) ++counts[k][static_cast<std::size_t>(t[k])];
  }
  for (int k = 0; k < kNumHeads; ++k) {
    for (std::size_t g = 0; g < probs[k].size(); ++g) {
      const double pk = probs[k][g];
      const double se = std::sqrt(pk * (1 - pk) / n);
      EXPECT_NEAR(counts[k][g] / static_cast<double>(n), pk, 3 * se + 1e-12) << "head " << k << " bin " << g;
    }
  }
}

TEST(Logprob, MatchesSamplingTime) {
  const auto p = random_params({5, 4, 6}, 11, 1.0);
  const std::vector<double> x{0.2, 0.1, -0.4, 0.0, 0.8};
  Rng rng(12);
  for (const auto& r : sample(p, x, rng, 20)) EXPECT_NEAR(logprob(p, x, r), r.logprob_old, 1e-12);
}

TEST(Logprob, OneHotIsZero) {
  const PolicyShape s{2, 2, 4};
  const ActionTokens t{3, 2, 1, 0, kFormatOk};
  const auto p = one_hot_params(s, t, 1e6);
  const std::vector<double> x{0.3, 0.3};
  SampledResponse r;
  r.bins = {3, 2, 1, 0};
  r.format_token = kFormatOk;
  EXPECT_NEAR(logprob(p, x, r), 0.0, 1e-12);
}

TEST(Logprob, UniformClosedForm) {
  for (int G : {2, 5, 16}) {
    PolicyParams p(PolicyShape{2, 2, G});
    const std::vector<double> x{1, 1};
    SampledResponse r;
    r.bins = {0, G - 1, 1, 0};
    EXPECT_NEAR(logprob(p, x, r), 4 * std::log(1.0 / G) + std::log(0.5), 1e-12);
  }
}

TEST(Logprob, OutOfRangeThrows) {
  PolicyParams p(PolicyShape{2, 2, 4});
  const std::vector<double> x{0, 0};
  SampledResponse r;
  r.bins = {0, 4, 0, 0};
  EXPECT_THROW(logprob(p, x, r), std::out_of_range);
}

TEST(Logprob, EnumerationSumsToOne) {
  const auto p = random_params({3, 3, 4}, 13, 2.0);
  const std::vector<double> x{0.5, -0.2, 0.9};
  const auto pass = forward(p, x);
  double total = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d)
          for (int f = 0; f < 2; ++f) total += std::exp(logprob(pass, {a, b, c, d, f}));
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Greedy, ArgmaxLowestOnTies) {
  PolicyParams p(PolicyShape{2, 2, 4});
  const std::vector<double> x{0, 0};
  EXPECT_EQ(greedy(p, x), (ActionTokens{0, 0, 0, 0, 0}));
  const auto q = one_hot_params(p.shape(), {2, 3, 1, 0, 1}, 5.0);
  EXPECT_EQ(greedy(q, x), (ActionTokens{2, 3, 1, 0, 1}));
}

TEST(SftLoss, PerfectParamsGiveZero) {
  const PolicyShape s{2, 2, 4};
  const auto p = one_hot_params(s, {1, 1, 2, 3, kFormatOk}, 1e3);
  const std::vector<SftExample> batch{{{0.1, 0.2}, {1, 1, 2, 3}}};
  const auto lg = sft_loss_and_grad(p, batch);
  EXPECT_NEAR(lg.loss, 0.0, 1e-12);
  for (double g : lg.grad.values()) EXPECT_NEAR(g, 0.0, 1e-12);
}

TEST(SftLoss, UniformClosedForm) {
  PolicyParams p(PolicyShape{2, 2, 8});
  const std::vector<SftExample> batch{{{0.1, 0.2}, {1, 1, 2, 3}}, {{0.5, 0.5}, {7, 0, 0, 7}}};
  EXPECT_NEAR(sft_loss_and_grad(p, batch).loss, 4 * std::log(8.0) + std::log(2.0), 1e-12);
}

TEST(SftLoss, EmptyBatchThrows) {
  PolicyParams p(PolicyShape{2, 2, 8});
  EXPECT_THROW(sft_loss_and_grad(p, std::vector<SftExample>{}), std::invalid_argument);
}

TEST(SftLoss, GradientMatchesFiniteDifferences) {
  Rng rng(14);
  for (int seed = 0; seed < 5; ++seed) {
    const PolicyShape s{rng.uniform_int(2, 8), rng.uniform_int(2, 8), rng.uniform_int(2, 4)};
    const auto p = random_params(s, 300 + seed, 0.5);
    std::vector<SftExample> batch;
    for (int i = 0; i < 3; ++i) {
      batch.push_back({random_features(s.features, rng),
                       {rng.uniform_int(0, s.bins - 1), rng.uniform_int(0, s.bins - 1),
                        rng.uniform_int(0, s.bins - 1), rng.uniform_int(0, s.bins - 1)}});
    }
    const auto analytic = sft_loss_and_grad(p, batch).grad;
    const auto numeric = testing::finite_difference(
        p, [&](const PolicyParams& q) { return sft_loss_and_grad(q, batch).loss; }, 1e-5);
    EXPECT_LT(testing::max_relative_error(analytic.values(), numeric), 1e-4) << "seed " << seed;
  }
}

TEST(Snapshot, IndependentCopy) {
  auto p = random_params({3, 2, 4}, 15, 1.0);
  const auto snap = clone_snapshot(p);
  EXPECT_EQ(snap, p);
  const std::vector<double> x{0.1, 0.2, 0.3};
  SampledResponse r;
  r.bins = {1, 2, 3, 0};
  const double before = logprob(snap, x, r);
  p.values()[0] += 1.0;
  EXPECT_FALSE(snap == p);
  EXPECT_EQ(logprob(snap, x, r), before);
}

TEST(Params, InitializeRangeAndDeterminism) {
  const PolicyShape s{10, 6, 5};
  const auto a = PolicyParams::initialize(s, 99);
  EXPECT_EQ(a, PolicyParams::initialize(s, 99));
  EXPECT_FALSE(a == PolicyParams::initialize(s, 100));
  for (int t = 0; t < 12; ++t) {
    const auto tensor = static_cast<Tensor>(t);
    const bool bias = t % 2 == 1;
    for (double v : a.tensor(tensor)) {
      if (bias) {
        EXPECT_EQ(v, 0.0);
      } else {
        EXPECT_LE(std::abs(v), 0.05);
      }
    }
  }
  EXPECT_EQ(a.size(), static_cast<std::size_t>(10 * 6 + 6 + 4 * (6 * 5 + 5) + 6 * 2 + 2));
}

}  // namespace
}  // namespace grpo_ground
