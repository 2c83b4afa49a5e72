// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "grpo_ground/errors.hpp"
#include "grpo_ground/response.hpp"

namespace grpo_ground {

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool normalize(Vec& v) {
  const double n = std::sqrt(dot(v, v));
  if (!(n > 1e-12)) return false;
  for (double& x : v) x /= n;
  return true;
}

Vec random_unit(Rng& rng, int dim) {
  Vec v(static_cast<std::size_t>(dim));
  do {
    for (double& x : v) x = rng.normal();
  } while (!normalize(v));
  return v;
}

// Distractor with cosine to `target` drawn below the similarity ceiling.
Vec draw_distractor(Rng& rng, const Vec& target, const Vec& instruction, double ceiling) {
  const int dim = static_cast<int>(target.size());
  const double target_score = dot(instruction, target);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const double c = rng.uniform(std::max(-1.0, ceiling - kSimilarityBand), ceiling);
    Vec o(static_cast<std::size_t>(dim));
    for (double& x : o) x = rng.normal();
    const double proj = dot(o, target);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= proj * target[i];
    if (!normalize(o)) continue;
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    Vec d(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = c * target[i] + s * o[i];
    if (dot(d, target) > ceiling + 1e-12) continue;
    if (target_score - dot(instruction, d) < kTargetMargin) continue;
    return d;
  }
  throw InfeasibleSpec();
}

BBox place_box(Rng& rng, const Vec& attr, const std::vector<BBox>& placed, const EnvSpec& spec) {
  const int dim = spec.attr_dim;
  auto z = [&](int i) {
    return std::sqrt(static_cast<double>(dim)) * attr[static_cast<std::size_t>(i % dim)];
  };
  const double cx = 0.5 + kCentreSpread * std::tanh(z(0));
  const double cy = 0.5 + kCentreSpread * std::tanh(z(1));
  const double w = kSizeBase + kSizeSpread * std::tanh(z(2));
  const double h = kSizeBase + kSizeSpread * std::tanh(z(3));
  const int G = spec.bins;

  double radius = kPlacementJitter;
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const double x = cx + rng.uniform(-radius, radius);
    const double y = cy + rng.uniform(-radius, radius);
    radius = std::min(kMaxJitter, radius + kJitterGrowth);
    const int bx1 = std::min(coord_to_bin(x - w / 2, G), G - 2);
    const int by1 = std::min(coord_to_bin(y - h / 2, G), G - 2);
    const int bx2 = std::max(coord_to_bin(x + w / 2, G), bx1 + 1);
    const int by2 = std::max(coord_to_bin(y + h / 2, G), by1 + 1);
    const BBox box = bins_to_box({bx1, by1, bx2, by2}, G);
    if (!valid_ground_truth(box, spec.min_box_area)) continue;
    const bool clear = std::all_of(placed.begin(), placed.end(),
                                   [&](const BBox& other) { return iou(box, other) <= kMaxPairwiseIoU; });
    if (clear) return box;
  }
  throw InfeasibleSpec();
}

}  // namespace

void EnvSpec::validate() const {
  if (min_objects < 2) throw ConfigError("env.min_objects must be at least 2");
  if (max_objects < min_objects) throw ConfigError("env.max_objects must be >= env.min_objects");
  if (attr_dim < 2) throw ConfigError("env.attr_dim must be at least 2");
  if (!(distractor_similarity >= 0.0 && distractor_similarity < 1.0)) {
    throw ConfigError("env.distractor_similarity must be in [0, 1)");
  }
  if (!(min_box_area > 0.0 && min_box_area <= 1.0)) throw ConfigError("env.min_box_area must be in (0, 1]");
  if (bins < 2) throw ConfigError("env.bins must be at least 2");
  if (!(feature_noise_sigma >= 0.0) || !std::isfinite(feature_noise_sigma)) {
    throw ConfigError("env.feature_noise_sigma must be a non-negative number");
  }
}

TaskInstance generate_task(Rng& rng, const EnvSpec& spec) {
  spec.validate();
  const int A = spec.attr_dim;
  const int K = rng.uniform_int(spec.min_objects, spec.max_objects);

  const Vec target = random_unit(rng, A);
  Vec instruction = target;
  if (spec.feature_noise_sigma > 0.0) {
    for (double& x : instruction) x += spec.feature_noise_sigma * rng.normal();
    if (!normalize(instruction)) throw InfeasibleSpec();
  }

  std::vector<Vec> attrs{target};
  TaskInstance task;
  for (int k = 1; k < K; ++k) {
    attrs.push_back(draw_distractor(rng, target, instruction, spec.distractor_similarity));
    task.max_distractor_cosine = std::max(task.max_distractor_cosine, dot(attrs.back(), target));
  }

  std::vector<int> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<int>(order));
  std::vector<BBox> boxes(static_cast<std::size_t>(K));
  std::vector<BBox> placed;
  for (int k : order) {
    boxes[static_cast<std::size_t>(k)] = place_box(rng, attrs[static_cast<std::size_t>(k)], placed, spec);
    placed.push_back(boxes[static_cast<std::size_t>(k)]);
  }

  std::vector<int> slots(static_cast<std::size_t>(spec.max_objects));
  std::iota(slots.begin(), slots.end(), 0);
  rng.shuffle(std::span<int>(slots));

  task.layout = layout_of(spec);
  task.features.assign(static_cast<std::size_t>(spec.feature_dim()), 0.0);
  for (int k = 0; k < K; ++k) {
    const int slot = slots[static_cast<std::size_t>(k)];
    const BBox& b = boxes[static_cast<std::size_t>(k)];
    auto* f = task.features.data();
    const int bo = task.layout.box_offset(slot);
    f[bo] = b.x1;
    f[bo + 1] = b.y1;
    f[bo + 2] = b.x2;
    f[bo + 3] = b.y2;
    std::copy(attrs[static_cast<std::size_t>(k)].begin(), attrs[static_cast<std::size_t>(k)].end(),
              task.features.begin() + task.layout.attr_offset(slot));
  }
  std::copy(instruction.begin(), instruction.end(),
            task.features.begin() + task.layout.instruction_offset());
  task.gt_box = boxes[0];
  task.target_index = slots[0];
  task.n_objects = K;
  task.distractor_similarity = spec.distractor_similarity;
  return task;
}

std::vector<TaskInstance> generate_dataset(std::uint64_t seed, int n, const EnvSpec& spec) {
  if (n < 1) throw ConfigError("n must be positive");
  spec.validate();
  std::vector<TaskInstance> tasks;
  tasks.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, 0, static_cast<std::uint64_t>(i)));
    tasks.push_back(generate_task(rng, spec));
  }
  return tasks;
}

int oracle_slot(const TaskInstance& task) {
  const auto& L = task.layout;
  const auto* f = task.features.data();
  const double* q = f + L.instruction_offset();
  int best = -1;
  double best_score = -INFINITY;
  for (int s = 0; s < L.max_objects; ++s) {
    const double* a = f + L.attr_offset(s);
    double norm = 0.0;
    double score = 0.0;
    for (int i = 0; i < L.attr_dim; ++i) {
      norm += a[i] * a[i];
      score += a[i] * q[i];
    }
    if (norm == 0.0) continue;  // empty slot
    if (score > best_score) {
      best_score = score;
      best = s;
    }
  }
  return best;
}

BBox oracle_solve(const TaskInstance& task) {
  const int s = oracle_slot(task);
  if (s < 0) return {};
  const auto* f = task.features.data() + task.layout.box_offset(s);
  return {f[0], f[1], f[2], f[3]};
}

void TaskDistribution::validate() const {
  primary.validate();
  if (!(secondary_fraction >= 0.0 && secondary_fraction <= 1.0)) {
    throw ConfigError("mix.fraction must be in [0, 1]");
  }
  if (secondary) {
    secondary->validate();
    if (!(layout_of(*secondary) == layout_of(primary)) || secondary->bins != primary.bins) {
      throw ConfigError("mix.env must share max_objects, attr_dim and bins with env");
    }
  }
}

TaskInstance TaskDistribution::draw(std::uint64_t seed) const {
  Rng rng(seed);
  if (secondary && rng.uniform() < secondary_fraction) return generate_task(rng, *secondary);
  return generate_task(rng, primary);
}

std::vector<TaskInstance> TaskDistribution::draw_many(std::uint64_t seed, std::uint64_t stream,
                                                      int n) const {
  std::vector<TaskInstance> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) out.push_back(draw(derive_seed(seed, stream, static_cast<std::uint64_t>(i))));
  return out;
}

}  // namespace grpo_ground
