// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "grpo_ground/checkpoint.hpp"
#include "grpo_ground/config.hpp"
#include "grpo_ground/errors.hpp"
#include "grpo_ground/parallel.hpp"

namespace grpo_ground {

namespace {

constexpr std::array<std::pair<StageMode, std::string_view>, 4> kStageNames = {{
    {StageMode::SftThenGrpo, "sft_then_grpo"},
    {StageMode::PureRl, "pure_rl"},
    {StageMode::SftOnly, "sft_only"},
    {StageMode::SftThenCotSftMore, "sft_then_sft_more"},
}};

std::vector<SftExample> sft_examples(const std::vector<TaskInstance>& tasks, int bins) {
  std::vector<SftExample> out;
  out.reserve(tasks.size());
  for (const auto& t : tasks) out.push_back(make_sft_example(t, bins));
  return out;
}

double run_sft_pass(PolicyParams& params, OptimizerState& state, const SftConfig& sft,
                    const std::vector<SftExample>& data, std::span<const std::size_t> order) {
  std::vector<SftExample> batch;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(sft.batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(sft.batch_size));
    batch.clear();
    for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
    auto lg = sft_loss_and_grad(params, batch);
    loss_sum += lg.loss * static_cast<double>(batch.size());
    apply_update(params, lg.grad, state, sft.optimizer, sft.learning_rate, Direction::Descend);
  }
  return order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

EvalResult evaluate_config(const TrainConfig& config, const PolicyParams& params,
                           std::span<const TaskInstance> tasks, double tau) {
  if (config.eval.greedy) return evaluate(params, tasks, tau, config.grpo.algo.salvage);
  return evaluate_sampled(params, tasks, derive_seed(config.seed, streams::kEvalSampling), tau,
                          config.grpo.algo.salvage);
}

EvalResult score_predictions(std::span<const TaskInstance> tasks,
                             const std::vector<ActionTokens>& predictions, int bins, double tau,
                             bool salvage) {
  if (tasks.empty()) throw std::invalid_argument("evaluate: empty task set");
  EvalResult out;
  out.n = static_cast<int>(tasks.size());
  std::size_t hits = 0;
  std::size_t formats = 0;
  double iou_sum = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto parsed = parse(render_tokens(predictions[i]), bins);
    const auto r = total_reward(parsed, tasks[i].gt_box, salvage);
    if (r.acc > tau) ++hits;
    formats += static_cast<std::size_t>(r.format);
    iou_sum += r.acc;
  }
  const double n = static_cast<double>(tasks.size());
  out.acc_at_tau = static_cast<double>(hits) / n;
  out.mean_iou = iou_sum / n;
  out.format_rate = static_cast<double>(formats) / n;
  return out;
}

void check_layout(const PolicyParams& params, std::span<const TaskInstance> tasks) {
  for (const auto& t : tasks) {
    if (static_cast<int>(t.features.size()) != params.shape().features) {
      throw std::invalid_argument("task feature dimension " + std::to_string(t.features.size()) +
                                  " does not match policy D=" + std::to_string(params.shape().features));
    }
  }
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

std::string_view to_string(StageMode m) {
  for (const auto& [mode, name] : kStageNames) {
    if (mode == m) return name;
  }
  return "sft_then_grpo";
}

std::optional<StageMode> parse_stage_mode(std::string_view name) {
  for (const auto& [mode, n] : kStageNames) {
    if (n == name) return mode;
  }
  return std::nullopt;
}

void TrainConfig::validate() const {
  task_distribution().validate();
  if (hidden < 1) throw ConfigError("policy.hidden must be positive");
  if (sft.n_examples < 1) throw ConfigError("sft.n_examples must be positive");
  if (sft.epochs < 0) throw ConfigError("sft.epochs must be non-negative");
  if (sft.batch_size < 1) throw ConfigError("sft.batch_size must be positive");
  if (!(sft.learning_rate >= 0.0)) throw ConfigError("sft.learning_rate must be non-negative");
  grpo.algo.validate();
  if (grpo.steps < 0) throw ConfigError("grpo.steps must be non-negative");
  if (grpo.tasks_per_step < 1) throw ConfigError("grpo.tasks_per_step must be positive");
  if (grpo.pool_size < 0) throw ConfigError("grpo.pool_size must be non-negative");
  if (eval.n_tasks < 1) throw ConfigError("eval.n_tasks must be positive");
  if (eval.every_k_steps < 1) throw ConfigError("eval.every_k_steps must be positive");
  if (!(eval.tau > 0.0 && eval.tau < 1.0)) throw ConfigError("eval.tau must be in (0, 1)");
}

PolicyShape TrainConfig::policy_shape() const { return {env.feature_dim(), hidden, env.bins}; }

TaskDistribution TrainConfig::task_distribution() const {
  TaskDistribution d;
  d.primary = env;
  if (mix) {
    d.secondary = mix->env;
    d.secondary_fraction = mix->fraction;
  }
  return d;
}

int sft_gradient_steps(const SftConfig& sft) {
  const int per_epoch = (sft.n_examples + sft.batch_size - 1) / sft.batch_size;
  return sft.epochs * per_epoch;
}

std::vector<TaskInstance> eval_tasks(const TrainConfig& config) {
  return config.task_distribution().draw_many(config.seed, streams::kEval, config.eval.n_tasks);
}

SftExample make_sft_example(const TaskInstance& task, int bins) {
  return {task.features, box_to_bins(task.gt_box, bins)};
}

SftResult run_sft(const TrainConfig& config) {
  config.validate();
  SftResult out;
  out.params = PolicyParams::initialize(config.policy_shape(), derive_seed(config.seed, streams::kInit));
  const auto data = sft_examples(
      config.task_distribution().draw_many(config.seed, streams::kSftData, config.sft.n_examples),
      config.env.bins);
  const auto eval_set = eval_tasks(config);
  OptimizerState state;
  for (int epoch = 0; epoch < config.sft.epochs; ++epoch) {
    const auto order = epoch_order(data.size(), derive_seed(config.seed, streams::kSftShuffle,
                                                            static_cast<std::uint64_t>(epoch)));
    SftEpochMetrics m;
    m.epoch = epoch + 1;
    m.mean_loss = run_sft_pass(out.params, state, config.sft, data, order);
    m.eval_acc_at_05 = evaluate_config(config, out.params, eval_set, kDefaultAccThreshold).acc_at_tau;
    out.metrics.push_back(m);
  }
  out.gradient_steps = static_cast<int>(state.steps);
  return out;
}

SftResult continue_sft(const TrainConfig& config, const PolicyParams& initial, int steps) {
  config.validate();
  SftResult out;
  out.params = initial;
  const auto data = sft_examples(
      config.task_distribution().draw_many(config.seed, streams::kSftMore, config.sft.n_examples),
      config.env.bins);
  const auto eval_set = eval_tasks(config);
  const auto per_epoch = static_cast<int>((data.size() + static_cast<std::size_t>(config.sft.batch_size) - 1) /
                                          static_cast<std::size_t>(config.sft.batch_size));
  OptimizerState state;
  int done = 0;
  for (int epoch = 0; done < steps; ++epoch) {
    auto order = epoch_order(data.size(), derive_seed(config.seed, streams::kSftMore + 100,
                                                      static_cast<std::uint64_t>(epoch)));
    const int take = std::min(per_epoch, steps - done);
    order.resize(std::min(order.size(), static_cast<std::size_t>(take) * static_cast<std::size_t>(config.sft.batch_size)));
    SftEpochMetrics m;
    m.epoch = epoch + 1;
    m.mean_loss = run_sft_pass(out.params, state, config.sft, data, order);
    m.eval_acc_at_05 = evaluate_config(config, out.params, eval_set, kDefaultAccThreshold).acc_at_tau;
    out.metrics.push_back(m);
    done += take;
  }
  out.gradient_steps = static_cast<int>(state.steps);
  return out;
}

GrpoResult run_grpo(const TrainConfig& config, const PolicyParams& initial) {
  config.validate();
  if (!(initial.shape() == config.policy_shape())) {
    throw std::invalid_argument("initial policy shape does not match the config");
  }
  const auto& run = config.grpo;
  const PolicyParams ref = clone_snapshot(initial);
  GrpoResult out;
  out.params = initial;
  out.ref_checksum_start = ref.checksum();

  const auto dist = config.task_distribution();
  std::vector<TaskInstance> pool;
  if (run.pool_size > 0) pool = dist.draw_many(config.seed, streams::kPool, run.pool_size);
  const auto eval_set = eval_tasks(config);

  OptimizerState state;
  const auto slots = static_cast<std::size_t>(run.tasks_per_step);
  for (int step = 1; step <= run.steps; ++step) {
    const auto s = static_cast<std::uint64_t>(step);
    // The sampling snapshot is the current policy; it is not mutated until
    // every group has been built.
    const PolicyParams& sampling = out.params;
    std::vector<GroupRollout> groups(slots);
    parallel_for(slots, [&](std::size_t slot) {
      TaskInstance task;
      if (pool.empty()) {
        task = dist.draw(derive_seed(derive_seed(config.seed, streams::kGrpoTasks, s), 0, slot));
      } else {
        Rng pick(derive_seed(derive_seed(config.seed, streams::kPoolPick, s), 0, slot));
        task = pool[static_cast<std::size_t>(pick.uniform_int(0, run.pool_size - 1))];
      }
      Rng rng(derive_seed(derive_seed(config.seed, streams::kGrpoSampling, s), 0, slot));
      groups[slot] = build_group(task, sampling, run.algo, rng);
    });

    StepMetrics m = grpo_step(out.params, groups, state, ref, run.algo);
    m.step = step;
    if (step % config.eval.every_k_steps == 0 || step == run.steps) {
      m.eval_acc_at_05 = evaluate_config(config, out.params, eval_set, kDefaultAccThreshold).acc_at_tau;
    }
    out.metrics.push_back(m);
  }
  out.gradient_steps = static_cast<int>(state.steps);
  out.ref_checksum_end = ref.checksum();
  return out;
}

EvalResult evaluate(const PolicyParams& params, std::span<const TaskInstance> tasks, double tau,
                    bool salvage) {
  if (tasks.empty()) throw std::invalid_argument("evaluate: empty task set");
  check_layout(params, tasks);
  std::vector<ActionTokens> predictions(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) { predictions[i] = greedy(params, tasks[i].features); });
  return score_predictions(tasks, predictions, params.shape().bins, tau, salvage);
}

EvalResult evaluate_sampled(const PolicyParams& params, std::span<const TaskInstance> tasks,
                            std::uint64_t seed, double tau, bool salvage) {
  if (tasks.empty()) throw std::invalid_argument("evaluate: empty task set");
  check_layout(params, tasks);
  std::vector<ActionTokens> predictions(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    Rng rng(derive_seed(seed, 0, i));
    const auto draws = sample(params, tasks[i].features, rng, 2);
    predictions[i] = draws.front().tokens();
  });
  return score_predictions(tasks, predictions, params.shape().bins, tau, salvage);
}

ExperimentResult run_experiment(const TrainConfig& config,
                                const std::optional<std::filesystem::path>& out_dir) {
  config.validate();
  ExperimentResult res;
  auto& report = res.report;
  report.config = config;
  report.generated_by = "grpo-ground " + config_hash(config);

  const bool runs_sft = config.stage_mode != StageMode::PureRl;
  if (runs_sft) {
    auto sft = run_sft(config);
    res.stage1_params = sft.params;
    res.sft_metrics = std::move(sft.metrics);
    report.sft_gradient_steps = sft.gradient_steps;
  } else {
    res.stage1_params = PolicyParams::initialize(config.policy_shape(), derive_seed(config.seed, streams::kInit));
  }

  switch (config.stage_mode) {
    case StageMode::SftOnly:
      res.params = res.stage1_params;
      break;
    case StageMode::SftThenGrpo:
    case StageMode::PureRl: {
      auto grpo = run_grpo(config, res.stage1_params);
      res.params = std::move(grpo.params);
      res.grpo_metrics = std::move(grpo.metrics);
      report.stage2_gradient_steps = grpo.gradient_steps;
      break;
    }
    case StageMode::SftThenCotSftMore: {
      auto more = continue_sft(config, res.stage1_params, config.grpo.steps);
      res.params = std::move(more.params);
      res.sft_more_metrics = std::move(more.metrics);
      report.stage2_gradient_steps = more.gradient_steps;
      break;
    }
  }

  const auto eval_set = eval_tasks(config);
  if (runs_sft) report.stage1_eval = evaluate_config(config, res.stage1_params, eval_set, config.eval.tau);
  report.final_eval = evaluate_config(config, res.params, eval_set, config.eval.tau);
  if (!res.grpo_metrics.empty()) report.final_step = res.grpo_metrics.back();
  report.final_checksum = res.params.checksum();

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    report.files["metrics"] = "metrics.jsonl";
    report.files["sft_metrics"] = "sft_metrics.jsonl";
    report.files["checkpoint_final"] = "checkpoint_final.json";
    if (runs_sft) report.files["checkpoint_stage1"] = "checkpoint_stage1.json";
    if (config.stage_mode == StageMode::SftThenCotSftMore) report.files["sft_more_metrics"] = "sft_more_metrics.jsonl";

    std::vector<std::string> lines;
    for (const auto& m : res.grpo_metrics) lines.push_back(step_metrics_to_json(m));
    write_lines(*out_dir / "metrics.jsonl", lines);
    lines.clear();
    for (const auto& m : res.sft_metrics) lines.push_back(sft_metrics_to_json(m));
    write_lines(*out_dir / "sft_metrics.jsonl", lines);
    if (config.stage_mode == StageMode::SftThenCotSftMore) {
      lines.clear();
      for (const auto& m : res.sft_more_metrics) lines.push_back(sft_metrics_to_json(m));
      write_lines(*out_dir / "sft_more_metrics.jsonl", lines);
    }
    if (runs_sft) save_checkpoint(*out_dir / "checkpoint_stage1.json", res.stage1_params, {config.seed, "sft"});
    const std::string final_stage = config.stage_mode == StageMode::SftOnly           ? "sft"
                                    : config.stage_mode == StageMode::SftThenCotSftMore ? "sft_more"
                                                                                        : "grpo";
    save_checkpoint(*out_dir / "checkpoint_final.json", res.params, {config.seed, final_stage});
    std::ofstream out(*out_dir / "report.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report.json");
    out << report_to_json(report);
  }
  return res;
}

}  // namespace grpo_ground
