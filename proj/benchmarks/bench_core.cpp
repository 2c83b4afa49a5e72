// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <vector>

#include "grpo_ground/env.hpp"
#include "grpo_ground/geometry.hpp"
#include "grpo_ground/grpo.hpp"
#include "grpo_ground/policy.hpp"
#include "grpo_ground/rng.hpp"

namespace {

using namespace grpo_ground;

void BM_Iou(benchmark::State& state) {
  Rng rng(1);
  std::vector<BBox> boxes(1024);
  for (auto& b : boxes) {
    const double x = rng.uniform(0, 0.5), y = rng.uniform(0, 0.5);
    b = {x, y, x + rng.uniform(0.01, 0.5), y + rng.uniform(0.01, 0.5)};
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou(boxes[i % 1024], boxes[(i * 7 + 3) % 1024]));
    ++i;
  }
}
BENCHMARK(BM_Iou);

void BM_Forward(benchmark::State& state) {
  const EnvSpec spec;
  const auto task = generate_dataset(2, 1, spec).front();
  const auto p = PolicyParams::initialize({spec.feature_dim(), static_cast<int>(state.range(0)), spec.bins}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, task.features));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(32)->Arg(64);

void BM_GrpoGrad(benchmark::State& state) {
  const EnvSpec spec;
  const auto task = generate_dataset(4, 1, spec).front();
  const auto p = PolicyParams::initialize({spec.feature_dim(), 32, spec.bins}, 5);
  GrpoConfig cfg;
  cfg.group_size = static_cast<int>(state.range(0));
  Rng rng(6);
  const auto group = build_group(task, p, cfg, rng);
  for (auto _ : state) benchmark::DoNotOptimize(grpo_grad(group, p, p, cfg));
}
BENCHMARK(BM_GrpoGrad)->Arg(8)->Arg(16);

void BM_GenerateTask(benchmark::State& state) {
  const EnvSpec spec;
  Rng rng(7);
  for (auto _ : state) benchmark::DoNotOptimize(generate_task(rng, spec));
}
BENCHMARK(BM_GenerateTask);

}  // namespace

BENCHMARK_MAIN();
