// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "grpo_ground/response.hpp"
#include "grpo_ground/rng.hpp"

namespace grpo_ground {

inline constexpr int kNumHeads = 5;
inline constexpr int kFormatHead = 4;
inline constexpr int kFormatOk = 0;
inline constexpr int kFormatBroken = 1;

struct PolicyShape {
  int features = 0;  // D
  int hidden = 0;    // H
  int bins = 0;      // G

  int head_size(int head) const { return head == kFormatHead ? 2 : bins; }
  void validate() const;
  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

/// Named parameter tensors, in storage order.
enum class Tensor : int {
  InputWeight = 0,  // D x H, row-major by feature
  InputBias,        // H
  X1Weight,         // H x G, row-major by hidden unit
  X1Bias,
  Y1Weight,
  Y1Bias,
  X2Weight,
  X2Bias,
  Y2Weight,
  Y2Bias,
  FormatWeight,  // H x 2
  FormatBias,
};
inline constexpr int kNumTensors = 12;

std::string_view tensor_name(Tensor t);
Tensor head_weight(int head);
Tensor head_bias(int head);

/// Parameters of the factorized categorical policy: one tanh hidden layer
/// feeding four coordinate heads and a two-way format head. Gradients use
/// the same type. All tensors live in one contiguous buffer.
class PolicyParams {
 public:
  PolicyParams() = default;
  /// All-zero parameters (every head uniform).
  explicit PolicyParams(const PolicyShape& shape);

  /// Weights i.i.d. uniform in [-0.05, 0.05], biases zero.
  static PolicyParams initialize(const PolicyShape& shape, std::uint64_t seed);

  const PolicyShape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  std::span<double> tensor(Tensor t);
  std::span<const double> tensor(Tensor t) const;

  void fill(double v);
  /// this += scale * other (shapes must match).
  void add_scaled(const PolicyParams& other, double scale);
  bool all_finite() const;
  /// FNV-1a over the raw parameter bytes.
  std::uint64_t checksum() const;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  std::size_t offset(Tensor t) const;
  std::size_t extent(Tensor t) const;

  PolicyShape shape_;
  std::vector<double> data_;
};

/// Deep value copy, used for the sampling and reference snapshots.
inline PolicyParams clone_snapshot(const PolicyParams& p) { return p; }

struct ForwardPass {
  std::vector<double> hidden;
  std::array<std::vector<double>, kNumHeads> log_probs;

  double prob(int head, int token) const;
};

/// Action tokens: four coordinate bins then the format token.
using ActionTokens = std::array<int, kNumHeads>;

struct SampledResponse {
  BinBox bins{};
  int format_token = kFormatOk;
  double logprob_old = 0.0;
  std::string rendered;

  ActionTokens tokens() const { return {bins[0], bins[1], bins[2], bins[3], format_token}; }
};

ForwardPass forward(const PolicyParams& params, std::span<const double> features);

/// Probability vectors for the five heads.
std::array<std::vector<double>, kNumHeads> head_probabilities(const PolicyParams& params,
                                                              std::span<const double> features);

/// Joint log-probability of `tokens` from a cached forward pass.
double logprob(const ForwardPass& pass, const ActionTokens& tokens);
double logprob(const PolicyParams& params, std::span<const double> features,
               const SampledResponse& r);

/// Draws `n` independent responses (n >= 2).
std::vector<SampledResponse> sample(const PolicyParams& params, std::span<const double> features,
                                    Rng& rng, int n);

/// Argmax per head, lowest index on ties.
ActionTokens greedy(const PolicyParams& params, std::span<const double> features);

std::string render_tokens(const ActionTokens& tokens);

/// Backpropagates per-head logit gradients through the network and adds the
/// result into `grad`.
void accumulate_backward(const PolicyParams& params, std::span<const double> features,
                         const ForwardPass& pass,
                         const std::array<std::vector<double>, kNumHeads>& dlogits,
                         PolicyParams& grad);

struct SftExample {
  std::vector<double> features;
  BinBox target{};
};

struct LossAndGrad {
  double loss = 0.0;
  PolicyParams grad;
};

/// Mean over the batch of the summed five-head cross-entropy (format target
/// is always "ok"), with its exact gradient.
LossAndGrad sft_loss_and_grad(const PolicyParams& params, std::span<const SftExample> batch);

}  // namespace grpo_ground
