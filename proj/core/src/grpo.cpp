// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "grpo_ground/errors.hpp"
#include "grpo_ground/parallel.hpp"

namespace grpo_ground {

namespace {

void check_group(const GroupRollout& group, const GrpoConfig& config) {
  const auto n = static_cast<std::size_t>(config.group_size);
  if (group.responses.size() != n || group.advantages.size() != n || group.rewards.size() != n) {
    throw std::invalid_argument("group size does not match config (expected " +
                                std::to_string(config.group_size) + ")");
  }
}

// Ratio-advantage term and whether it depends on theta (false when clipped).
std::pair<double, bool> surrogate(double weight, double ratio, double advantage,
                                  const GrpoConfig& config) {
  const double plain = weight * ratio * advantage;
  if (!config.clip) return {plain, true};
  const double clipped_ratio = std::clamp(ratio, 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon);
  const double clipped = weight * clipped_ratio * advantage;
  if (plain <= clipped) return {plain, true};
  return {clipped, false};
}

struct GroupTerms {
  double objective = 0.0;
  double mean_kl = 0.0;
};

// Objective of one group with an explicit weight; adds the gradient into
// `grad` when given.
GroupTerms group_terms(const GroupRollout& group, const PolicyParams& theta,
                       const PolicyParams& ref, const GrpoConfig& config, double weight,
                       PolicyParams* grad) {
  check_group(group, config);
  const auto& features = group.task.features;
  const auto pass_theta = forward(theta, features);
  const auto pass_ref = forward(ref, features);
  const double inv_n = 1.0 / static_cast<double>(config.group_size);

  std::array<std::vector<double>, kNumHeads> dlogits;
  if (grad != nullptr) {
    for (int k = 0; k < kNumHeads; ++k) {
      dlogits[static_cast<std::size_t>(k)].assign(pass_theta.log_probs[static_cast<std::size_t>(k)].size(), 0.0);
    }
  }

  GroupTerms out;
  double sum = 0.0;
  double kl_sum = 0.0;
  for (std::size_t i = 0; i < group.responses.size(); ++i) {
    const auto tokens = group.responses[i].tokens();
    const double lp_theta = logprob(pass_theta, tokens);
    const double lp_ref = logprob(pass_ref, tokens);
    const double ratio = std::exp(lp_theta - group.responses[i].logprob_old);
    const auto [term, active] = surrogate(weight, ratio, group.advantages[i], config);
    const double kl = kl_estimate(lp_theta, lp_ref);
    sum += term - config.beta * kl;
    kl_sum += kl;

    if (grad != nullptr) {
      // d/d(lp_theta): ratio term gives w * ratio * A; the KL term gives
      // -beta * (1 - rho) with rho = pi_ref / pi_theta.
      const double rho = std::exp(lp_ref - lp_theta);
      double coef = config.beta * (rho - 1.0);
      if (active) coef += weight * ratio * group.advantages[i];
      coef *= inv_n;
      // d lp / d logits = onehot(token) - p
      for (int k = 0; k < kNumHeads; ++k) {
        const auto& lp = pass_theta.log_probs[static_cast<std::size_t>(k)];
        auto& dz = dlogits[static_cast<std::size_t>(k)];
        for (std::size_t g = 0; g < lp.size(); ++g) dz[g] -= coef * std::exp(lp[g]);
        dz[static_cast<std::size_t>(tokens[static_cast<std::size_t>(k)])] += coef;
      }
    }
  }
  out.objective = sum / static_cast<double>(config.group_size);
  out.mean_kl = kl_sum / static_cast<double>(config.group_size);
  if (grad != nullptr) accumulate_backward(theta, features, pass_theta, dlogits, *grad);
  return out;
}

}  // namespace

void GrpoConfig::validate() const {
  if (group_size < 2) throw ConfigError("grpo.group_size must be at least 2");
  if (!(beta >= 0.0)) throw ConfigError("grpo.beta must be non-negative");
  if (!(learning_rate >= 0.0)) throw ConfigError("grpo.learning_rate must be non-negative");
  if (!(std_epsilon >= 0.0)) throw ConfigError("grpo.std_epsilon must be non-negative");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("grpo.clip_epsilon must be in (0, 1)");
}

std::vector<double> advantages(std::span<const double> rewards, double std_epsilon) {
  if (rewards.size() < 2) throw std::invalid_argument("advantages need at least 2 rewards");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;

  std::vector<double> centred(rewards.begin(), rewards.end());
  for (double& c : centred) c -= mean;
  // Second pass removes the rounding residue of the first mean.
  double residue = 0.0;
  for (double c : centred) residue += c;
  residue /= n;
  for (double& c : centred) c -= residue;

  double var = 0.0;
  for (double c : centred) var += c * c;
  const double sd = std::sqrt(var / n);
  if (!(sd > std_epsilon)) return std::vector<double>(rewards.size(), 0.0);
  for (double& c : centred) c /= sd;
  return centred;
}

double kl_estimate(double logp_theta, double logp_ref) {
  if (!std::isfinite(logp_theta) || !std::isfinite(logp_ref)) {
    throw std::invalid_argument("kl_estimate: non-finite log-probability");
  }
  const double d = logp_ref - logp_theta;
  // rho - log(rho) - 1 = expm1(d) - d; the series keeps tiny |d| from
  // cancelling to zero.
  if (std::abs(d) < 1e-4) return d * d * (0.5 + d * (1.0 / 6.0 + d / 24.0));
  return std::max(0.0, std::expm1(d) - d);
}

void score_group(GroupRollout& group, const GrpoConfig& config, int bins) {
  group.rewards.clear();
  std::vector<double> totals;
  totals.reserve(group.responses.size());
  for (const auto& r : group.responses) {
    group.rewards.push_back(total_reward(parse(r.rendered, bins), group.task.gt_box, config.salvage));
    totals.push_back(group.rewards.back().total);
  }
  group.advantages = advantages(totals, config.std_epsilon);
  group.miou = mean_iou(group.rewards);
  group.weight = phi(config.phi_kind, group.miou);
}

GroupRollout build_group(const TaskInstance& task, const PolicyParams& params,
                         const GrpoConfig& config, Rng& rng) {
  GroupRollout group;
  group.task = task;
  group.responses = sample(params, task.features, rng, config.group_size);
  score_group(group, config, params.shape().bins);
  return group;
}

double grpo_objective(const GroupRollout& group, const PolicyParams& theta,
                      const PolicyParams& ref, const GrpoConfig& config) {
  return group_terms(group, theta, ref, config, group.weight, nullptr).objective;
}

PolicyParams grpo_grad(const GroupRollout& group, const PolicyParams& theta,
                       const PolicyParams& ref, const GrpoConfig& config) {
  PolicyParams grad(theta.shape());
  group_terms(group, theta, ref, config, group.weight, &grad);
  return grad;
}

BucketFractions difficulty_proportions(std::span<const GroupRollout> groups) {
  if (groups.empty()) throw std::invalid_argument("difficulty_proportions of an empty batch");
  std::size_t easy = 0, medium = 0, hard = 0;
  for (const auto& g : groups) {
    switch (bucket(g.miou)) {
      case DifficultyBucket::Easy: ++easy; break;
      case DifficultyBucket::Medium: ++medium; break;
      case DifficultyBucket::Hard: ++hard; break;
    }
  }
  const double n = static_cast<double>(groups.size());
  return {static_cast<double>(easy) / n, static_cast<double>(medium) / n, static_cast<double>(hard) / n};
}

StepMetrics grpo_step(PolicyParams& params, std::span<const GroupRollout> groups,
                      OptimizerState& state, const PolicyParams& ref, const GrpoConfig& config) {
  if (groups.empty()) throw std::invalid_argument("grpo_step: empty batch");
  const std::size_t n = groups.size();

  std::vector<double> weights(n);
  for (std::size_t g = 0; g < n; ++g) weights[g] = groups[g].weight;
  if (config.normalize_weights) {
    double mean_w = 0.0;
    for (double w : weights) mean_w += w;
    mean_w /= static_cast<double>(n);
    if (mean_w > 0.0) {
      for (double& w : weights) w /= mean_w;
    }
  }

  std::vector<PolicyParams> grads(n, PolicyParams(params.shape()));
  std::vector<GroupTerms> terms(n);
  parallel_for(n, [&](std::size_t g) {
    terms[g] = group_terms(groups[g], params, ref, config, weights[g], &grads[g]);
  });

  PolicyParams total(params.shape());
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t g = 0; g < n; ++g) total.add_scaled(grads[g], inv);

  StepMetrics m;
  const auto fractions = difficulty_proportions(groups);
  m.easy_frac = fractions.easy;
  m.medium_frac = fractions.medium;
  m.hard_frac = fractions.hard;
  for (std::size_t g = 0; g < n; ++g) {
    double reward_sum = 0.0;
    for (const auto& r : groups[g].rewards) reward_sum += r.total;
    m.mean_total_reward += reward_sum / static_cast<double>(groups[g].rewards.size());
    m.mean_miou += groups[g].miou;
    m.mean_weight += weights[g];
    m.mean_kl += terms[g].mean_kl;
    m.objective += terms[g].objective;
  }
  m.mean_total_reward *= inv;
  m.mean_miou *= inv;
  m.mean_weight *= inv;
  m.mean_kl *= inv;
  m.objective *= inv;

  apply_update(params, total, state, config.optimizer, config.learning_rate, Direction::Ascend);
  return m;
}

}  // namespace grpo_ground
