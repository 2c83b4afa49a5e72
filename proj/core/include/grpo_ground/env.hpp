// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "grpo_ground/geometry.hpp"
#include "grpo_ground/rng.hpp"

namespace grpo_ground {

struct EnvSpec {
  int min_objects = 3;
  int max_objects = 8;
  int attr_dim = 8;
  /// Cosine ceiling of distractor attributes against the target attribute.
  double distractor_similarity = 0.5;
  double min_box_area = kDefaultMinBoxArea;
  int bins = 16;
  double feature_noise_sigma = 0.05;

  /// Throws ConfigError on an invalid spec.
  void validate() const;
  int feature_dim() const { return max_objects * (4 + attr_dim) + attr_dim; }

  friend bool operator==(const EnvSpec&, const EnvSpec&) = default;
};

// Scene layout. An object's attribute places its box: the first four
// attribute components (scaled by sqrt(attr_dim)) drive centre x, centre y,
// width and height through tanh. Boxes are jittered, snapped to the bin
// grid, and kept from overlapping earlier objects by more than
// kMaxPairwiseIoU, widening the jitter after each rejection.
inline constexpr double kCentreSpread = 0.3;
inline constexpr double kSizeBase = 0.4;
inline constexpr double kSizeSpread = 0.1;
inline constexpr double kPlacementJitter = 0.02;
inline constexpr double kJitterGrowth = 0.01;
inline constexpr double kMaxJitter = 0.5;
inline constexpr double kMaxPairwiseIoU = 0.35;
/// Minimum lead of the target's instruction score over every distractor.
inline constexpr double kTargetMargin = 0.05;
/// Width of the band below the ceiling that distractor cosines are drawn from.
inline constexpr double kSimilarityBand = 0.5;
inline constexpr int kMaxRejections = 10000;

class InfeasibleSpec : public std::runtime_error {
 public:
  InfeasibleSpec() : std::runtime_error("infeasible spec") {}
};

struct FeatureLayout {
  int max_objects = 0;
  int attr_dim = 0;

  int box_offset(int slot) const { return 4 * slot; }
  int attr_offset(int slot) const { return 4 * max_objects + attr_dim * slot; }
  int instruction_offset() const { return max_objects * (4 + attr_dim); }
  int dim() const { return max_objects * (4 + attr_dim) + attr_dim; }
  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

inline FeatureLayout layout_of(const EnvSpec& s) { return {s.max_objects, s.attr_dim}; }

struct TaskInstance {
  std::vector<double> features;
  BBox gt_box;
  /// Feature slot holding the target object.
  int target_index = 0;
  int n_objects = 0;
  /// Ceiling the distractors were drawn under.
  double distractor_similarity = 0.0;
  /// Largest realised distractor cosine to the target attribute.
  double max_distractor_cosine = -1.0;
  FeatureLayout layout;

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

TaskInstance generate_task(Rng& rng, const EnvSpec& spec);

/// n tasks, task i drawn from its own stream derive_seed(seed, i).
std::vector<TaskInstance> generate_dataset(std::uint64_t seed, int n, const EnvSpec& spec);

/// Box of the object whose attribute best matches the instruction.
BBox oracle_solve(const TaskInstance& task);

/// Slot whose attribute has the largest inner product with the instruction.
int oracle_slot(const TaskInstance& task);

/// Draws from `primary`, or from `secondary` with probability `secondary_fraction`.
struct TaskDistribution {
  EnvSpec primary;
  std::optional<EnvSpec> secondary;
  double secondary_fraction = 0.0;

  void validate() const;
  TaskInstance draw(std::uint64_t seed) const;
  std::vector<TaskInstance> draw_many(std::uint64_t seed, std::uint64_t stream, int n) const;
};

}  // namespace grpo_ground
