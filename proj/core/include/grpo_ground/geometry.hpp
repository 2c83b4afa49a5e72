// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <utility>

namespace grpo_ground {

/// Axis-aligned box in normalized unit-square coordinates.
///
/// Ground-truth boxes are always proper (x1 < x2, y1 < y2). Predicted boxes
/// may be degenerate; a degenerate box has zero area and zero IoU with
/// everything, including itself.
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  bool degenerate() const { return !(x1 < x2) || !(y1 < y2); }
  friend bool operator==(const BBox&, const BBox&) = default;
};

inline constexpr double kDefaultMinBoxArea = 0.0025;
inline constexpr double kDefaultAccThreshold = 0.5;

bool in_unit_square(const BBox& b);

/// True for a non-degenerate box inside the unit square with at least `min_area`.
bool valid_ground_truth(const BBox& b, double min_area = kDefaultMinBoxArea);

double area(const BBox& b);

/// Intersection over union. Zero when either box is degenerate.
double iou(const BBox& a, const BBox& b);

/// Fraction of (prediction, ground truth) pairs whose IoU strictly exceeds `tau`.
/// Throws std::invalid_argument("no samples") on an empty list.
double acc_at_threshold(std::span<const std::pair<BBox, BBox>> pairs,
                        double tau = kDefaultAccThreshold);

}  // namespace grpo_ground
