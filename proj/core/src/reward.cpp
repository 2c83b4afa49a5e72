// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace grpo_ground {

double accuracy_reward(const ParsedResponse& p, const BBox& gt, bool salvage) {
  if (!p.box) return 0.0;
  if (!p.format_ok && !salvage) return 0.0;
  return iou(*p.box, gt);
}

int format_reward(const ParsedResponse& p) { return p.format_ok ? 1 : 0; }

RewardBreakdown total_reward(const ParsedResponse& p, const BBox& gt, bool salvage) {
  RewardBreakdown r;
  r.acc = accuracy_reward(p, gt, salvage);
  r.format = format_reward(p);
  r.total = r.acc + static_cast<double>(r.format);
  return r;
}

double mean_iou(std::span<const RewardBreakdown> group) {
  if (group.empty()) throw std::invalid_argument("mean_iou of an empty group");
  double sum = 0.0;
  for (const auto& r : group) sum += r.acc;
  return sum / static_cast<double>(group.size());
}

DifficultyBucket bucket(double miou) {
  if (miou > kEasyThreshold) return DifficultyBucket::Easy;
  if (miou < kHardThreshold) return DifficultyBucket::Hard;
  return DifficultyBucket::Medium;
}

double phi(PhiKind kind, double miou) {
  switch (kind) {
    case PhiKind::NegLog:
      return -std::log(std::clamp(miou, kNegLogFloor, 1.0));
    case PhiKind::SquaredComplement:
      return (1.0 - miou) * (1.0 - miou);
    case PhiKind::ExpComplement:
      return std::exp(1.0 - miou);
    case PhiKind::None:
      return 1.0;
  }
  return 1.0;
}

std::string_view to_string(PhiKind kind) {
  switch (kind) {
    case PhiKind::NegLog: return "neg_log";
    case PhiKind::SquaredComplement: return "squared_complement";
    case PhiKind::ExpComplement: return "exp_complement";
    case PhiKind::None: return "none";
  }
  return "none";
}

std::optional<PhiKind> parse_phi_kind(std::string_view name) {
  for (auto k : {PhiKind::NegLog, PhiKind::SquaredComplement, PhiKind::ExpComplement, PhiKind::None}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(DifficultyBucket b) {
  switch (b) {
    case DifficultyBucket::Easy: return "easy";
    case DifficultyBucket::Medium: return "medium";
    case DifficultyBucket::Hard: return "hard";
  }
  return "medium";
}

}  // namespace grpo_ground
