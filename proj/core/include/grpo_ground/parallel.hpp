// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace grpo_ground {

/// Worker cap from GRPO_GROUND_THREADS, else hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [0, n). Each index is handled exactly once; callers
/// write results by index so output does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace grpo_ground
