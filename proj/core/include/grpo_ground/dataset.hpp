// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "grpo_ground/env.hpp"

namespace grpo_ground {

struct Dataset {
  std::uint64_t seed = 0;
  EnvSpec spec;
  std::vector<TaskInstance> tasks;
};

/// JSON Lines: a header line echoing the spec, then one task per line.
void write_dataset(std::ostream& out, const Dataset& ds);
Dataset read_dataset(std::istream& in);

void save_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& path);

std::string env_spec_to_json(const EnvSpec& spec);

}  // namespace grpo_ground
