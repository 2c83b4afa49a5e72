// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grpo_ground/env.hpp"
#include "grpo_ground/grpo.hpp"
#include "grpo_ground/optimizer.hpp"
#include "grpo_ground/policy.hpp"

namespace grpo_ground {

enum class StageMode { SftThenGrpo, PureRl, SftOnly, SftThenCotSftMore };

std::string_view to_string(StageMode m);
std::optional<StageMode> parse_stage_mode(std::string_view name);

struct SftConfig {
  int n_examples = 2000;
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-2;
  OptimizerConfig optimizer;

  friend bool operator==(const SftConfig&, const SftConfig&) = default;
};

struct GrpoRunConfig {
  GrpoConfig algo;
  int steps = 500;
  int tasks_per_step = 8;
  /// 0 draws fresh tasks every step; otherwise tasks come from a fixed pool.
  int pool_size = 0;

  friend bool operator==(const GrpoRunConfig&, const GrpoRunConfig&) = default;
};

struct EvalConfig {
  int n_tasks = 500;
  int every_k_steps = 25;
  double tau = kDefaultAccThreshold;
  /// Greedy (argmax) decoding; sampling otherwise.
  bool greedy = true;

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

/// Optional second task distribution mixed into training and evaluation.
struct EnvMixConfig {
  double fraction = 0.0;
  EnvSpec env;

  friend bool operator==(const EnvMixConfig&, const EnvMixConfig&) = default;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  EnvSpec env;
  std::optional<EnvMixConfig> mix;
  int hidden = 32;
  SftConfig sft;
  GrpoRunConfig grpo;
  EvalConfig eval;
  StageMode stage_mode = StageMode::SftThenGrpo;

  /// Throws ConfigError.
  void validate() const;
  PolicyShape policy_shape() const;
  TaskDistribution task_distribution() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Number of mini-batch updates run_sft performs.
int sft_gradient_steps(const SftConfig& sft);

struct SftEpochMetrics {
  int epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> eval_acc_at_05;

  friend bool operator==(const SftEpochMetrics&, const SftEpochMetrics&) = default;
};

struct EvalResult {
  double acc_at_tau = 0.0;
  double mean_iou = 0.0;
  double format_rate = 0.0;
  int n = 0;

  friend bool operator==(const EvalResult&, const EvalResult&) = default;
};

struct SftResult {
  PolicyParams params;
  std::vector<SftEpochMetrics> metrics;
  int gradient_steps = 0;
};

struct GrpoResult {
  PolicyParams params;
  std::vector<StepMetrics> metrics;
  int gradient_steps = 0;
  std::uint64_t ref_checksum_start = 0;
  std::uint64_t ref_checksum_end = 0;
};

/// Stream ids for derive_seed.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSftData = 2;
inline constexpr std::uint64_t kSftShuffle = 3;
inline constexpr std::uint64_t kEval = 4;
inline constexpr std::uint64_t kGrpoTasks = 5;
inline constexpr std::uint64_t kGrpoSampling = 6;
inline constexpr std::uint64_t kPool = 7;
inline constexpr std::uint64_t kPoolPick = 8;
inline constexpr std::uint64_t kEvalSampling = 9;
inline constexpr std::uint64_t kSftMore = 10;
}  // namespace streams

std::vector<TaskInstance> eval_tasks(const TrainConfig& config);

SftExample make_sft_example(const TaskInstance& task, int bins);

SftResult run_sft(const TrainConfig& config);

/// Extra mini-batch SFT updates on a fresh draw of the SFT data, used when
/// stage 2 continues supervised training instead of GRPO.
SftResult continue_sft(const TrainConfig& config, const PolicyParams& initial, int steps);

GrpoResult run_grpo(const TrainConfig& config, const PolicyParams& initial);

EvalResult evaluate(const PolicyParams& params, std::span<const TaskInstance> tasks,
                    double tau = kDefaultAccThreshold, bool salvage = true);

/// Sampling-based evaluation (one draw per task from `seed`-derived streams).
EvalResult evaluate_sampled(const PolicyParams& params, std::span<const TaskInstance> tasks,
                            std::uint64_t seed, double tau = kDefaultAccThreshold,
                            bool salvage = true);

struct ExperimentReport {
  TrainConfig config;
  std::string generated_by;
  int sft_gradient_steps = 0;
  int stage2_gradient_steps = 0;
  std::optional<EvalResult> stage1_eval;
  EvalResult final_eval;
  std::optional<StepMetrics> final_step;
  std::uint64_t final_checksum = 0;
  std::map<std::string, std::string> files;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

struct ExperimentResult {
  ExperimentReport report;
  PolicyParams params;
  PolicyParams stage1_params;
  std::vector<SftEpochMetrics> sft_metrics;
  std::vector<StepMetrics> grpo_metrics;
  std::vector<SftEpochMetrics> sft_more_metrics;
};

/// Runs the stages selected by config.stage_mode. With `out_dir`, writes
/// metrics JSONL, stage checkpoints and report.json there.
ExperimentResult run_experiment(const TrainConfig& config,
                                const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace grpo_ground
