// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "grpo_ground/geometry.hpp"

namespace grpo_ground {

/// Corner bins (x1, y1, x2, y2) on a G-point grid; bin k sits at k / (G - 1).
using BinBox = std::array<int, 4>;

struct ParsedResponse {
  std::string think_text;
  std::optional<BBox> box;
  bool format_ok = false;
};

/// Placeholder reasoning emitted by the toy policy.
inline constexpr std::string_view kThinkPlaceholder = "locate the referred object";

/// Serializes `<think>T</think><answer>(x1, y1), (x2, y2)</answer>`. With
/// `corrupt` the closing `</answer>` is dropped. Throws std::invalid_argument
/// ("unserializable reasoning text") when `think` contains `</think>`.
std::string render(std::string_view think, const BinBox& bins, bool corrupt);

/// Total parser: never throws. A box is still recovered from a malformed
/// response when a `(a, b), (c, d)` pattern appears anywhere in it; in that
/// case `format_ok` stays false.
ParsedResponse parse(std::string_view text, int bins);

/// The stage-2 prompt suffix asking for the tagged response layout.
std::string_view canonical_instruction();

/// Maps a bin coordinate (possibly fractional) onto [0, 1].
double bin_to_coord(double bin, int bins);

/// Nearest bin for a coordinate in [0, 1]; exact halves go to the lower bin.
int coord_to_bin(double coord, int bins);

BBox bins_to_box(const BinBox& bins, int grid);
BinBox box_to_bins(const BBox& box, int grid);

}  // namespace grpo_ground
