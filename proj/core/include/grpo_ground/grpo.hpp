// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "grpo_ground/env.hpp"
#include "grpo_ground/optimizer.hpp"
#include "grpo_ground/policy.hpp"
#include "grpo_ground/reward.hpp"

namespace grpo_ground {

struct GrpoConfig {
  int group_size = 8;
  double beta = 0.04;
  PhiKind phi_kind = PhiKind::ExpComplement;
  double learning_rate = 1e-3;
  double std_epsilon = 1e-8;
  bool salvage = true;
  /// PPO-style ratio clipping; inert for a single on-policy update.
  bool clip = false;
  double clip_epsilon = 0.2;
  /// Rescale group weights so their batch mean is 1.
  bool normalize_weights = false;
  OptimizerConfig optimizer;

  void validate() const;
  friend bool operator==(const GrpoConfig&, const GrpoConfig&) = default;
};

struct GroupRollout {
  TaskInstance task;
  std::vector<SampledResponse> responses;
  std::vector<RewardBreakdown> rewards;
  std::vector<double> advantages;
  double miou = 0.0;
  double weight = 1.0;
};

struct StepMetrics {
  int step = 0;
  double mean_total_reward = 0.0;
  double mean_miou = 0.0;
  double easy_frac = 0.0;
  double medium_frac = 0.0;
  double hard_frac = 0.0;
  double mean_weight = 0.0;
  double mean_kl = 0.0;
  double objective = 0.0;
  std::optional<double> eval_acc_at_05;

  friend bool operator==(const StepMetrics&, const StepMetrics&) = default;
};

struct BucketFractions {
  double easy = 0.0;
  double medium = 0.0;
  double hard = 0.0;
};

/// Group-normalised advantages with the population standard deviation.
/// All zeros when the deviation is at most `std_epsilon`. Needs >= 2 rewards.
std::vector<double> advantages(std::span<const double> rewards, double std_epsilon = 1e-8);

/// Per-sample KL estimate rho - log(rho) - 1 with rho = pi_ref / pi_theta.
double kl_estimate(double logp_theta, double logp_ref);

GroupRollout build_group(const TaskInstance& task, const PolicyParams& params,
                         const GrpoConfig& config, Rng& rng);

/// Scores already-sampled responses: rewards, advantages, mIoU and weight.
void score_group(GroupRollout& group, const GrpoConfig& config, int bins);

/// Surrogate objective of one group. The ratio is taken against the
/// sampling-time log-probabilities recorded in the group; the difficulty
/// weight multiplies only the ratio-advantage term.
double grpo_objective(const GroupRollout& group, const PolicyParams& theta,
                      const PolicyParams& ref, const GrpoConfig& config);

/// Exact gradient of grpo_objective with respect to theta.
PolicyParams grpo_grad(const GroupRollout& group, const PolicyParams& theta,
                       const PolicyParams& ref, const GrpoConfig& config);

BucketFractions difficulty_proportions(std::span<const GroupRollout> groups);

/// One gradient-ascent update on the mean group objective. `params` must be
/// the policy the groups were sampled from. Fills every metric except
/// `step` and `eval_acc_at_05`.
StepMetrics grpo_step(PolicyParams& params, std::span<const GroupRollout> groups,
                      OptimizerState& state, const PolicyParams& ref, const GrpoConfig& config);

}  // namespace grpo_ground
