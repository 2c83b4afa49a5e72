// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace grpo_ground {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

std::optional<OptimizerKind> parse_optimizer_kind(std::string_view name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "sgd") return OptimizerKind::Sgd;
  return std::nullopt;
}

void apply_update(PolicyParams& params, const PolicyParams& grad, OptimizerState& state,
                  const OptimizerConfig& config, double learning_rate, Direction direction) {
  if (grad.size() != params.size()) throw std::invalid_argument("apply_update: shape mismatch");
  const double sign = direction == Direction::Ascend ? 1.0 : -1.0;
  auto p = params.values();
  const auto g = grad.values();
  ++state.steps;

  if (config.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += sign * learning_rate * g[i];
    return;
  }

  if (state.m.size() != p.size()) {
    state.m.assign(p.size(), 0.0);
    state.v.assign(p.size(), 0.0);
  }
  const double t = static_cast<double>(state.steps);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < p.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    p[i] += sign * learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

}  // namespace grpo_ground
