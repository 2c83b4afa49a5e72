// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace grpo_ground {

namespace {
bool unit(double v) { return v >= 0.0 && v <= 1.0; }
}  // namespace

bool in_unit_square(const BBox& b) { return unit(b.x1) && unit(b.y1) && unit(b.x2) && unit(b.y2); }

bool valid_ground_truth(const BBox& b, double min_area) {
  return in_unit_square(b) && !b.degenerate() && area(b) >= min_area;
}

double area(const BBox& b) { return std::max(0.0, b.x2 - b.x1) * std::max(0.0, b.y2 - b.y1); }

double iou(const BBox& a, const BBox& b) {
  if (a.degenerate() || b.degenerate()) return 0.0;
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = area(a) + area(b) - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double acc_at_threshold(std::span<const std::pair<BBox, BBox>> pairs, double tau) {
  if (pairs.empty()) throw std::invalid_argument("no samples");
  std::size_t hits = 0;
  for (const auto& [pred, gt] : pairs) {
    if (iou(pred, gt) > tau) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

}  // namespace grpo_ground
