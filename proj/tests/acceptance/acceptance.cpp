// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Directional criteria print the per-seed numbers they rest on.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"

#include "grpo_ground/config.hpp"
#include "grpo_ground/env.hpp"
#include "grpo_ground/geometry.hpp"
#include "grpo_ground/grpo.hpp"
#include "grpo_ground/policy.hpp"
#include "grpo_ground/response.hpp"
#include "grpo_ground/reward.hpp"
#include "grpo_ground/rng.hpp"
#include "grpo_ground/trainer.hpp"

namespace {

using namespace grpo_ground;
using grpo_ground::testing::random_features;
using grpo_ground::testing::random_params;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr int kSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%.3f") {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(f, x);
  return s;
}

BBox random_box(Rng& rng) {
  const double x1 = rng.uniform(), x2 = rng.uniform(), y1 = rng.uniform(), y2 = rng.uniform();
  return {std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)};
}

// Both sides at least 0.05, the side of the smallest ground-truth box. The
// raster counts each side to within one cell, so thinner boxes (slivers with
// a small union) move the oracle itself by more than the tolerance.
BBox sized_box(Rng& rng) {
  for (;;) {
    const BBox b = random_box(rng);
    if (b.x2 - b.x1 >= 0.05 && b.y2 - b.y1 >= 0.05) return b;
  }
}

Outcome iou_oracle() {
  const auto t0 = Clock::now();
  Rng rng(20260001);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const BBox a = sized_box(rng), b = sized_box(rng);
    worst = std::max(worst, std::abs(iou(a, b) - testing::raster_iou(a, b, 2000)));
  }
  // Unconstrained corners, and pairs sharing both y edges (the raster's
  // worst case): the closed form must sit inside the raster's rounding bounds.
  int outside = 0;
  for (int i = 0; i < 2000; ++i) {
    const BBox a = random_box(rng);
    const BBox b = i % 2 == 0 ? random_box(rng)
                              : BBox{a.x1 + 0.1 * (a.x2 - a.x1), a.y1, std::min(1.0, a.x2 + 0.05), a.y2};
    const auto [lo, hi] = testing::raster_iou_bounds(a, b, 2000);
    const double x = iou(a, b);
    outside += x < lo - 1e-12 || x > hi + 1e-12;
  }
  const double secs = seconds_since(t0);
  return {worst <= 2e-3 && outside == 0 && secs < 30.0,
          "max |iou - raster| = " + fmt("%.2e", worst) + "; pairs outside raster rounding bounds " +
              std::to_string(outside) + "/2000, " + fmt("%.2f", secs) + " s"};
}

// Group sampled from `old` whose rewards vary, so advantages are nonzero.
GroupRollout varied_group(const PolicyShape& s, const PolicyParams& old, const GrpoConfig& cfg, Rng& rng) {
  const BBox gt = bins_to_box({0, 0, s.bins - 1, s.bins - 1}, s.bins);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    TaskInstance task;
    task.features = random_features(s.features, rng);
    task.gt_box = gt;
    auto g = build_group(task, old, cfg, rng);
    for (double a : g.advantages) {
      if (a != 0.0) return g;
    }
  }
  throw std::runtime_error("no group with varied rewards");
}

Outcome gradients() {
  const auto t0 = Clock::now();
  double worst_sft = 0, worst_grpo = 0;
  for (int inst = 0; inst < 20; ++inst) {
    Rng rng(derive_seed(20260002, 0, static_cast<std::uint64_t>(inst)));
    const PolicyShape s{rng.uniform_int(2, 8), rng.uniform_int(2, 8), rng.uniform_int(2, 4)};

    const auto p = random_params(s, derive_seed(20260002, 1, static_cast<std::uint64_t>(inst)), 0.5);
    std::vector<SftExample> batch(3);
    for (auto& ex : batch) {
      ex.features = random_features(s.features, rng);
      for (int& b : ex.target) b = rng.uniform_int(0, s.bins - 1);
    }
    const auto sft = sft_loss_and_grad(p, batch);
    const auto sft_fd = testing::finite_difference(
        p, [&](const PolicyParams& q) { return sft_loss_and_grad(q, batch).loss; }, 1e-5);
    worst_sft = std::max(worst_sft, testing::max_relative_error(sft.grad.values(), sft_fd));

    GrpoConfig cfg;
    cfg.group_size = 4;
    cfg.beta = 0.1;
    const auto old = random_params(s, derive_seed(20260002, 2, static_cast<std::uint64_t>(inst)), 0.5);
    auto theta = old;
    theta.add_scaled(random_params(s, derive_seed(20260002, 3, static_cast<std::uint64_t>(inst)), 0.1), 1.0);
    const auto ref = random_params(s, derive_seed(20260002, 4, static_cast<std::uint64_t>(inst)), 0.5);
    const auto g = varied_group(s, old, cfg, rng);
    const auto grad = grpo_grad(g, theta, ref, cfg);
    const auto grpo_fd = testing::finite_difference(
        theta, [&](const PolicyParams& q) { return grpo_objective(g, q, ref, cfg); }, 1e-5);
    worst_grpo = std::max(worst_grpo, testing::max_relative_error(grad.values(), grpo_fd));
  }
  const double secs = seconds_since(t0);
  return {worst_sft < 1e-4 && worst_grpo < 1e-4 && secs < 60.0,
          "max rel err sft " + fmt("%.2e", worst_sft) + ", grpo " + fmt("%.2e", worst_grpo) + ", " +
              fmt("%.2f", secs) + " s"};
}

Outcome advantage_invariants() {
  const auto t0 = Clock::now();
  Rng rng(20260003);
  double worst_mean = 0, worst_std = 0;
  int zero_groups = 0;
  bool zero_ok = true;
  for (int t = 0; t < 10000; ++t) {
    const int n = rng.uniform_int(2, 16);
    std::vector<double> r(static_cast<std::size_t>(n));
    if (t % 10 == 0) {
      std::fill(r.begin(), r.end(), rng.uniform(0.0, 2.0));
    } else {
      for (double& v : r) v = rng.uniform(0.0, 2.0);
    }
    long double m = 0, sq = 0;
    for (double v : r) m += v;
    m /= n;
    for (double v : r) sq += (v - m) * (v - m);
    const double input_std = static_cast<double>(std::sqrt(sq / n));
    const auto a = advantages(r);
    if (input_std > 1e-8) {
      double am = 0, as = 0;
      for (double v : a) am += v;
      am /= n;
      for (double v : a) as += (v - am) * (v - am);
      worst_mean = std::max(worst_mean, std::abs(am));
      worst_std = std::max(worst_std, std::abs(std::sqrt(as / n) - 1.0));
    } else {
      ++zero_groups;
      for (double v : a) zero_ok = zero_ok && v == 0.0;
    }
  }
  const double secs = seconds_since(t0);
  return {worst_mean <= 1e-9 && worst_std <= 1e-9 && zero_ok && zero_groups > 0 && secs < 10.0,
          "max |mean| " + fmt("%.1e", worst_mean) + ", max |std-1| " + fmt("%.1e", worst_std) + ", " +
              std::to_string(zero_groups) + " zero-variance groups all zero: " + (zero_ok ? "yes" : "no")};
}

Outcome kl_properties() {
  const auto t0 = Clock::now();
  Rng rng(20260004);
  bool sign_ok = true;
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform(-20.0, 0.0);
    const double b = i % 20 == 0 ? a : rng.uniform(-20.0, 0.0);
    const double k = kl_estimate(a, b);
    sign_ok = sign_ok && k >= 0.0 && ((k == 0.0) == (a == b));
  }
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const PolicyShape s{3, 3, 3};
    const auto theta = random_params(s, derive_seed(20260004, 1, static_cast<std::uint64_t>(i)), 1.0);
    const auto ref = random_params(s, derive_seed(20260004, 2, static_cast<std::uint64_t>(i)), 1.0);
    const auto x = random_features(3, rng);
    worst = std::max(worst, static_cast<double>(std::abs(testing::enumerated_k3(theta, ref, x) -
                                                         testing::analytic_kl(theta, ref, x))));
  }
  const double secs = seconds_since(t0);
  return {sign_ok && worst <= 1e-9 && secs < 60.0,
          std::string("non-negativity/equality ") + (sign_ok ? "ok" : "violated") +
              ", max |E[k3] - KL| over 50 G=3 policies " + fmt("%.1e", worst)};
}

Outcome phi_family() {
  bool monotone = true;
  for (auto kind : {PhiKind::NegLog, PhiKind::SquaredComplement, PhiKind::ExpComplement}) {
    double prev = INFINITY;
    for (int i = 0; i < 1000; ++i) {
      const double v = phi(kind, i / 999.0);
      monotone = monotone && v <= prev;
      prev = v;
    }
  }
  const bool points = std::abs(phi(PhiKind::ExpComplement, 0.0) - std::numbers::e) <= 1e-12 &&
                      std::abs(phi(PhiKind::ExpComplement, 1.0) - 1.0) <= 1e-12 &&
                      std::abs(phi(PhiKind::NegLog, 1.0)) <= 1e-12 &&
                      std::abs(phi(PhiKind::SquaredComplement, 0.5) - 0.25) <= 1e-12;
  const bool finite = std::isfinite(phi(PhiKind::NegLog, 0.0));
  return {monotone && points && finite, std::string("monotone ") + (monotone ? "yes" : "no") + ", point values " +
                                            (points ? "ok" : "off") + ", neglog(0) = " +
                                            fmt("%.4f", phi(PhiKind::NegLog, 0.0))};
}

Outcome vanilla_recovery() {
  int equal = 0;
  for (int i = 0; i < 100; ++i) {
    Rng rng(derive_seed(20260006, 0, static_cast<std::uint64_t>(i)));
    const PolicyShape s{rng.uniform_int(2, 8), rng.uniform_int(2, 8), rng.uniform_int(2, 8)};
    GrpoConfig cfg;
    cfg.phi_kind = PhiKind::None;
    const auto old = random_params(s, derive_seed(20260006, 1, static_cast<std::uint64_t>(i)), 0.5);
    const auto theta = random_params(s, derive_seed(20260006, 2, static_cast<std::uint64_t>(i)), 0.5);
    const auto ref = random_params(s, derive_seed(20260006, 3, static_cast<std::uint64_t>(i)), 0.5);
    const auto g = varied_group(s, old, cfg, rng);
    // Unweighted surrogate: mean of ratio * A - beta * KL.
    double sum = 0.0;
    for (std::size_t k = 0; k < g.responses.size(); ++k) {
      const double lp = logprob(theta, g.task.features, g.responses[k]);
      const double lr = logprob(ref, g.task.features, g.responses[k]);
      sum += std::exp(lp - g.responses[k].logprob_old) * g.advantages[k] - cfg.beta * kl_estimate(lp, lr);
    }
    const double unweighted = sum / static_cast<double>(g.responses.size());
    equal += grpo_objective(g, theta, ref, cfg) == unweighted ? 1 : 0;
  }
  return {equal == 100, std::to_string(equal) + "/100 groups bit-identical"};
}

TrainConfig benchmark_config(std::uint64_t seed) {
  TrainConfig c;
  c.seed = seed;
  c.env.distractor_similarity = 0.7;
  return c;
}

struct DefaultRuns {
  std::vector<double> stage1, grpo, pure_rl;
  int sft_steps = 0;
  int pure_steps = 0;
  int grpo_budget = 0;
};

DefaultRuns default_runs() {
  DefaultRuns r;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    auto c = benchmark_config(seed);
    const auto two_stage = run_experiment(c);
    r.stage1.push_back(two_stage.report.stage1_eval->acc_at_tau);
    r.grpo.push_back(two_stage.report.final_eval.acc_at_tau);
    r.sft_steps = two_stage.report.sft_gradient_steps;
    r.grpo_budget = two_stage.report.sft_gradient_steps + two_stage.report.stage2_gradient_steps;

    auto pure = c;
    pure.stage_mode = StageMode::PureRl;
    pure.grpo.steps = sft_gradient_steps(c.sft) + c.grpo.steps;
    const auto rl = run_experiment(pure);
    r.pure_rl.push_back(rl.report.final_eval.acc_at_tau);
    r.pure_steps = rl.report.stage2_gradient_steps;
  }
  return r;
}

Outcome stage_ablation(const DefaultRuns& r, double secs) {
  int wins = 0;
  for (int i = 0; i < kSeeds; ++i) wins += r.grpo[static_cast<std::size_t>(i)] > r.pure_rl[static_cast<std::size_t>(i)];
  const bool matched = r.pure_steps == r.grpo_budget;
  return {wins >= 4 && matched,
          std::to_string(wins) + "/5 seeds; sft+grpo [" + join(r.grpo) + "] vs pure rl [" + join(r.pure_rl) +
              "]; budget " + std::to_string(r.grpo_budget) + " vs " + std::to_string(r.pure_steps) + " steps, " +
              fmt("%.0f", secs) + " s"};
}

Outcome grpo_over_sft(const DefaultRuns& r) {
  double gap = 0;
  std::vector<double> gaps;
  for (int i = 0; i < kSeeds; ++i) {
    gaps.push_back(r.grpo[static_cast<std::size_t>(i)] - r.stage1[static_cast<std::size_t>(i)]);
    gap += gaps.back() / kSeeds;
  }
  return {gap > 0.0, "mean gain " + fmt("%+.4f", gap) + "; per seed [" + join(gaps, "%+.3f") + "]"};
}

Outcome difficulty_weighting() {
  std::vector<double> exp_acc, none_acc, gaps;
  int wins = 0;
  double mean_gap = 0;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    auto c = benchmark_config(seed);
    EnvMixConfig mix;
    mix.fraction = 0.5;
    mix.env = c.env;
    mix.env.distractor_similarity = 0.9;
    c.mix = mix;
    c.grpo.algo.phi_kind = PhiKind::ExpComplement;
    const double e = run_experiment(c).report.final_eval.acc_at_tau;
    c.grpo.algo.phi_kind = PhiKind::None;
    const double n = run_experiment(c).report.final_eval.acc_at_tau;
    exp_acc.push_back(e);
    none_acc.push_back(n);
    gaps.push_back(e - n);
    wins += e >= n;
    mean_gap += (e - n) / kSeeds;
  }
  return {wins >= 4, std::to_string(wins) + "/5 seeds exp >= none; mean gap " + fmt("%+.4f", mean_gap) +
                         "; exp [" + join(exp_acc) + "] none [" + join(none_acc) + "]"};
}

Outcome difficulty_drift() {
  int ok = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    auto c = benchmark_config(seed);
    c.grpo.pool_size = 1000;
    c.grpo.steps = 400;
    const auto sft = run_sft(c);
    const auto run = run_grpo(c, sft.params);
    const std::size_t window = run.metrics.size() / 10;
    double e0 = 0, e1 = 0, h0 = 0, h1 = 0;
    for (std::size_t i = 0; i < window; ++i) {
      e0 += run.metrics[i].easy_frac / window;
      h0 += run.metrics[i].hard_frac / window;
      e1 += run.metrics[run.metrics.size() - window + i].easy_frac / window;
      h1 += run.metrics[run.metrics.size() - window + i].hard_frac / window;
    }
    ok += e1 > e0 && h1 < h0;
    detail += (detail.empty() ? "" : "; ") + std::string("easy ") + fmt("%.3f", e0) + "->" + fmt("%.3f", e1) +
              " hard " + fmt("%.3f", h0) + "->" + fmt("%.3f", h1);
  }
  return {ok >= 4, std::to_string(ok) + "/5 seeds; " + detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_tool(const std::string& args) {
  const std::string cmd = std::string("\"") + GRPO_GROUND_CLI_PATH + "\" " + args + " > /dev/null";
  return std::system(cmd.c_str());
}

Outcome determinism(const fs::path& work) {
  TrainConfig c = benchmark_config(7);
  c.sft.epochs = 5;
  c.grpo.steps = 100;
  c.eval.n_tasks = 200;
  std::ofstream(work / "config.json") << config_to_json(c);
  // Different worker counts must not change any byte.
  const int a = run_tool("train --config \"" + (work / "config.json").string() + "\" --out-dir \"" +
                         (work / "run_a").string() + "\"");
  setenv("GRPO_GROUND_THREADS", "3", 1);
  const int b = run_tool("train --config \"" + (work / "config.json").string() + "\" --out-dir \"" +
                         (work / "run_b").string() + "\"");
  unsetenv("GRPO_GROUND_THREADS");
  if (a != 0 || b != 0) return {false, "train exited with " + std::to_string(a) + "/" + std::to_string(b)};
  int same = 0;
  const std::vector<std::string> files{"metrics.jsonl", "sft_metrics.jsonl", "checkpoint_stage1.json",
                                       "checkpoint_final.json"};
  for (const auto& f : files) {
    const auto x = slurp(work / "run_a" / f);
    same += !x.empty() && x == slurp(work / "run_b" / f);
  }
  return {same == static_cast<int>(files.size()),
          std::to_string(same) + "/" + std::to_string(files.size()) + " artifacts byte-identical"};
}

std::string prediction_line(int id, const std::string& text, const BBox& gt) {
  return nlohmann::json{{"id", std::to_string(id)}, {"prediction_text", text}, {"gt", {gt.x1, gt.y1, gt.x2, gt.y2}}}
             .dump() +
         "\n";
}

nlohmann::json score_file(const fs::path& file, const std::string& extra) {
  const fs::path out = file.string() + ".out";
  const std::string cmd = std::string("\"") + GRPO_GROUND_CLI_PATH + "\" score --predictions \"" + file.string() +
                          "\" " + extra + " > \"" + out.string() + "\"";
  if (std::system(cmd.c_str()) != 0) return nullptr;
  return nlohmann::json::parse(slurp(out));
}

Outcome scoring_round_trip(const fs::path& work) {
  const auto tasks = generate_dataset(20260012, 1000, EnvSpec{});
  std::ofstream clean(work / "clean.jsonl"), broken(work / "broken.jsonl");
  for (int i = 0; i < 1000; ++i) {
    const auto& t = tasks[static_cast<std::size_t>(i)];
    const auto bins = box_to_bins(t.gt_box, 16);
    clean << prediction_line(i, render(kThinkPlaceholder, bins, false), t.gt_box);
    broken << prediction_line(i, render(kThinkPlaceholder, bins, true), t.gt_box);
  }
  clean.close();
  broken.close();
  const auto c = score_file(work / "clean.jsonl", "");
  const auto s = score_file(work / "broken.jsonl", "");
  const auto n = score_file(work / "broken.jsonl", "--no-salvage");
  if (c.is_null() || s.is_null() || n.is_null()) return {false, "score exited nonzero"};
  const bool ok = c["acc_at_0.5"] == 1.0 && c["format_rate"] == 1.0 && s["format_rate"] == 0.0 &&
                  s["acc_at_0.5"] == 1.0 && n["format_rate"] == 0.0 && n["acc_at_0.5"] == 0.0;
  return {ok, "clean acc " + fmt("%.3f", c["acc_at_0.5"].get<double>()) + " fmt " +
                  fmt("%.3f", c["format_rate"].get<double>()) + "; corrupted fmt " +
                  fmt("%.3f", s["format_rate"].get<double>()) + ", acc salvage " +
                  fmt("%.3f", s["acc_at_0.5"].get<double>()) + " / no salvage " +
                  fmt("%.3f", n["acc_at_0.5"].get<double>())};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "grpo_ground_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "iou matches raster oracle", iou_oracle);
  report(2, "analytic gradients match finite differences", gradients);
  report(3, "advantage invariants", advantage_invariants);
  report(4, "k3 estimator properties", kl_properties);
  report(5, "difficulty coefficient family", phi_family);
  report(6, "phi none recovers the unweighted objective", vanilla_recovery);

  DefaultRuns runs;
  double runs_secs = 0;
  std::string runs_error;
  try {
    const auto t0 = Clock::now();
    runs = default_runs();
    runs_secs = seconds_since(t0);
  } catch (const std::exception& e) {
    runs_error = e.what();
  }
  auto needs_runs = [&](auto f) {
    return [&, f]() -> Outcome {
      if (!runs_error.empty()) return {false, "exception: " + runs_error};
      return f();
    };
  };
  report(7, "sft then grpo beats pure rl at matched budget", needs_runs([&] { return stage_ablation(runs, runs_secs); }));
  report(8, "difficulty weighting on the hard mix", difficulty_weighting);
  report(9, "fixed-pool difficulty drift", difficulty_drift);
  report(10, "grpo improves over the sft checkpoint", needs_runs([&] { return grpo_over_sft(runs); }));
  report(11, "train is byte-deterministic", [&] { return determinism(work); });
  report(12, "score round trip and salvage gating", [&] { return scoring_round_trip(work); });

  fs::remove_all(work);
  std::printf("%d/12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
