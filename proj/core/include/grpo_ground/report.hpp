// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "grpo_ground/grpo.hpp"

namespace grpo_ground {

std::vector<StepMetrics> read_metrics(std::istream& in);
std::vector<StepMetrics> load_metrics(const std::filesystem::path& path);

struct MetricsRun {
  std::string label;
  std::vector<StepMetrics> steps;
};

/// Columns step,easy,medium,hard,eval_acc; with two runs a leading run column.
std::string metrics_csv(std::span<const MetricsRun> runs);

/// 800x400 polyline chart: bucket fractions and eval accuracy against step,
/// one <path> per series, runs after the first drawn dashed.
std::string metrics_svg(std::span<const MetricsRun> runs);

}  // namespace grpo_ground
