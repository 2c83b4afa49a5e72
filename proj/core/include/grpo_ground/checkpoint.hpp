// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "grpo_ground/policy.hpp"

namespace grpo_ground {

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string stage;

  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  PolicyParams params;
  CheckpointMeta meta;
};

/// Single JSON document; see docs/FORMATS.md. Doubles are written in
/// shortest round-trip form, so load(save(p)) is bit-exact.
std::string checkpoint_to_string(const PolicyParams& params, const CheckpointMeta& meta);
Checkpoint checkpoint_from_string(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const CheckpointMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace grpo_ground
