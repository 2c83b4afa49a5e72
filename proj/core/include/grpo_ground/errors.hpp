// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace grpo_ground {

/// Invalid configuration or usage. The CLI maps it to exit status 2; every
/// other exception is a runtime failure (exit status 1).
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace grpo_ground
