// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "grpo_ground/parallel.hpp"

namespace grpo_ground {
namespace {

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, EmptyRangeIsNoop) {
  bool called = false;
  parallel_for(0, [&](std::size_t) { called = true; });
  EXPECT_FALSE(called);
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(100,
                            [](std::size_t i) {
                              if (i == 37) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(WorkerCount, HonoursEnvironment) {
  ::setenv("GRPO_GROUND_THREADS", "3", 1);
  EXPECT_EQ(worker_count(), 3);
  ::setenv("GRPO_GROUND_THREADS", "4", 1);
  std::vector<int> out(64);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
  ::unsetenv("GRPO_GROUND_THREADS");
  EXPECT_GE(worker_count(), 1);
}

}  // namespace
}  // namespace grpo_ground
