// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "grpo_ground/env.hpp"
#include "grpo_ground/trainer.hpp"

namespace grpo_ground {

/// Config files mirror TrainConfig field for field. Absent fields take
/// their defaults; unknown fields raise ConfigError naming the key path.
std::string config_to_json(const TrainConfig& config, int indent = 2);
TrainConfig config_from_json(const std::string& text);
TrainConfig load_config(const std::filesystem::path& path);

EnvSpec env_spec_from_json(const std::string& text);

/// Hex FNV-1a of the canonical config document.
std::string config_hash(const TrainConfig& config);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);

std::string step_metrics_to_json(const StepMetrics& m);
/// Throws std::runtime_error when a required field is missing.
StepMetrics step_metrics_from_json(const std::string& line);
std::string sft_metrics_to_json(const SftEpochMetrics& m);

}  // namespace grpo_ground
