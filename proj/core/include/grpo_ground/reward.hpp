// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "grpo_ground/geometry.hpp"
#include "grpo_ground/response.hpp"

namespace grpo_ground {

struct RewardBreakdown {
  double acc = 0.0;
  int format = 0;
  double total = 0.0;

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

enum class DifficultyBucket { Easy, Medium, Hard };

/// Difficulty coefficient family. `None` is vanilla GRPO (weight 1).
enum class PhiKind { NegLog, SquaredComplement, ExpComplement, None };

inline constexpr double kEasyThreshold = 0.7;
inline constexpr double kHardThreshold = 0.3;
inline constexpr double kNegLogFloor = 1e-6;

/// IoU of the parsed box with `gt`. A box recovered from a malformed
/// response only counts when `salvage` is set.
double accuracy_reward(const ParsedResponse& p, const BBox& gt, bool salvage);

int format_reward(const ParsedResponse& p);

RewardBreakdown total_reward(const ParsedResponse& p, const BBox& gt, bool salvage);

/// Mean accuracy reward over a group. Throws std::invalid_argument when empty.
double mean_iou(std::span<const RewardBreakdown> group);

/// Easy above 0.7, Hard below 0.3, Medium otherwise (both boundaries Medium).
DifficultyBucket bucket(double miou);

double phi(PhiKind kind, double miou);

std::string_view to_string(PhiKind kind);
std::optional<PhiKind> parse_phi_kind(std::string_view name);
std::string_view to_string(DifficultyBucket b);

}  // namespace grpo_ground
