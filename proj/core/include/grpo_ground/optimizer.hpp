// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "grpo_ground/policy.hpp"

namespace grpo_ground {

enum class OptimizerKind { Adam, Sgd };

std::string_view to_string(OptimizerKind k);
std::optional<OptimizerKind> parse_optimizer_kind(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  long steps = 0;
};

enum class Direction { Descend, Ascend };

/// One update with bias-corrected moments (Adam) or a plain gradient step.
void apply_update(PolicyParams& params, const PolicyParams& grad, OptimizerState& state,
                  const OptimizerConfig& config, double learning_rate, Direction direction);

}  // namespace grpo_ground
