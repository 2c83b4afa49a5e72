// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace grpo_ground {

namespace {

constexpr std::array<std::string_view, kNumTensors> kTensorNames = {
    "input_weight", "input_bias", "x1_weight", "x1_bias",     "y1_weight",  "y1_bias",
    "x2_weight",    "x2_bias",    "y2_weight", "y2_bias",     "format_weight", "format_bias",
};

void log_softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : z) v -= lse;
}

void check_features(const PolicyShape& shape, std::span<const double> features) {
  if (static_cast<int>(features.size()) != shape.features) {
    throw std::invalid_argument("feature dimension mismatch: policy expects " +
                                std::to_string(shape.features) + ", got " +
                                std::to_string(features.size()));
  }
}

int draw_token(const std::vector<double>& log_probs, double u) {
  double cum = 0.0;
  int last_nonzero = 0;
  for (std::size_t g = 0; g < log_probs.size(); ++g) {
    const double p = std::exp(log_probs[g]);
    if (p > 0.0) last_nonzero = static_cast<int>(g);
    cum += p;
    if (u < cum) return static_cast<int>(g);
  }
  return last_nonzero;
}

}  // namespace

void PolicyShape::validate() const {
  if (features < 1 || hidden < 1 || bins < 2) {
    throw std::invalid_argument("invalid policy shape (need D >= 1, H >= 1, G >= 2)");
  }
}

std::string_view tensor_name(Tensor t) { return kTensorNames[static_cast<std::size_t>(t)]; }

Tensor head_weight(int head) { return static_cast<Tensor>(2 + 2 * head); }
Tensor head_bias(int head) { return static_cast<Tensor>(3 + 2 * head); }

PolicyParams::PolicyParams(const PolicyShape& shape) : shape_(shape) {
  shape_.validate();
  data_.assign(offset(Tensor::FormatBias) + extent(Tensor::FormatBias), 0.0);
}

PolicyParams PolicyParams::initialize(const PolicyShape& shape, std::uint64_t seed) {
  PolicyParams p(shape);
  Rng rng(seed);
  for (int t = 0; t < kNumTensors; t += 2) {
    for (double& w : p.tensor(static_cast<Tensor>(t))) w = rng.uniform(-0.05, 0.05);
  }
  return p;
}

std::size_t PolicyParams::extent(Tensor t) const {
  const auto D = static_cast<std::size_t>(shape_.features);
  const auto H = static_cast<std::size_t>(shape_.hidden);
  const int idx = static_cast<int>(t);
  if (t == Tensor::InputWeight) return D * H;
  if (t == Tensor::InputBias) return H;
  const int head = (idx - 2) / 2;
  const auto size = static_cast<std::size_t>(shape_.head_size(head));
  return (idx % 2 == 0) ? H * size : size;
}

std::size_t PolicyParams::offset(Tensor t) const {
  std::size_t off = 0;
  for (int i = 0; i < static_cast<int>(t); ++i) off += extent(static_cast<Tensor>(i));
  return off;
}

std::span<double> PolicyParams::tensor(Tensor t) {
  return std::span<double>(data_).subspan(offset(t), extent(t));
}

std::span<const double> PolicyParams::tensor(Tensor t) const {
  return std::span<const double>(data_).subspan(offset(t), extent(t));
}

void PolicyParams::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void PolicyParams::add_scaled(const PolicyParams& other, double scale) {
  if (!(shape_ == other.shape_)) throw std::invalid_argument("add_scaled: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

bool PolicyParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::uint64_t PolicyParams::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : data_) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

double ForwardPass::prob(int head, int token) const {
  return std::exp(log_probs[static_cast<std::size_t>(head)][static_cast<std::size_t>(token)]);
}

ForwardPass forward(const PolicyParams& params, std::span<const double> features) {
  const auto& shape = params.shape();
  check_features(shape, features);
  const int D = shape.features;
  const int H = shape.hidden;

  ForwardPass pass;
  const auto b_in = params.tensor(Tensor::InputBias);
  pass.hidden.assign(b_in.begin(), b_in.end());
  const auto w_in = params.tensor(Tensor::InputWeight);
  for (int d = 0; d < D; ++d) {
    const double x = features[static_cast<std::size_t>(d)];
    if (x == 0.0) continue;
    const double* row = w_in.data() + static_cast<std::size_t>(d) * H;
    for (int j = 0; j < H; ++j) pass.hidden[static_cast<std::size_t>(j)] += x * row[j];
  }
  for (double& h : pass.hidden) h = std::tanh(h);

  for (int k = 0; k < kNumHeads; ++k) {
    const int S = shape.head_size(k);
    const auto w = params.tensor(head_weight(k));
    const auto b = params.tensor(head_bias(k));
    auto& z = pass.log_probs[static_cast<std::size_t>(k)];
    z.assign(b.begin(), b.end());
    for (int j = 0; j < H; ++j) {
      const double h = pass.hidden[static_cast<std::size_t>(j)];
      const double* row = w.data() + static_cast<std::size_t>(j) * S;
      for (int g = 0; g < S; ++g) z[static_cast<std::size_t>(g)] += h * row[g];
    }
    log_softmax_inplace(z);
  }
  return pass;
}

std::array<std::vector<double>, kNumHeads> head_probabilities(const PolicyParams& params,
                                                              std::span<const double> features) {
  auto pass = forward(params, features);
  for (auto& head : pass.log_probs) {
    for (double& v : head) v = std::exp(v);
  }
  return std::move(pass.log_probs);
}

double logprob(const ForwardPass& pass, const ActionTokens& tokens) {
  double lp = 0.0;
  for (int k = 0; k < kNumHeads; ++k) {
    const auto& head = pass.log_probs[static_cast<std::size_t>(k)];
    const int t = tokens[static_cast<std::size_t>(k)];
    if (t < 0 || t >= static_cast<int>(head.size())) {
      throw std::out_of_range("token out of range for head " + std::to_string(k));
    }
    lp += head[static_cast<std::size_t>(t)];
  }
  return lp;
}

double logprob(const PolicyParams& params, std::span<const double> features,
               const SampledResponse& r) {
  return logprob(forward(params, features), r.tokens());
}

std::string render_tokens(const ActionTokens& tokens) {
  return render(kThinkPlaceholder, {tokens[0], tokens[1], tokens[2], tokens[3]},
                tokens[kFormatHead] == kFormatBroken);
}

std::vector<SampledResponse> sample(const PolicyParams& params, std::span<const double> features,
                                    Rng& rng, int n) {
  if (n < 2) throw std::invalid_argument("group size must be at least 2");
  const auto pass = forward(params, features);
  std::vector<SampledResponse> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ActionTokens tokens{};
    for (int k = 0; k < kNumHeads; ++k) {
      tokens[static_cast<std::size_t>(k)] = draw_token(pass.log_probs[static_cast<std::size_t>(k)], rng.uniform());
    }
    SampledResponse r;
    r.bins = {tokens[0], tokens[1], tokens[2], tokens[3]};
    r.format_token = tokens[kFormatHead];
    r.logprob_old = logprob(pass, tokens);
    r.rendered = render_tokens(tokens);
    out.push_back(std::move(r));
  }
  return out;
}

ActionTokens greedy(const PolicyParams& params, std::span<const double> features) {
  const auto pass = forward(params, features);
  ActionTokens tokens{};
  for (int k = 0; k < kNumHeads; ++k) {
    const auto& head = pass.log_probs[static_cast<std::size_t>(k)];
    tokens[static_cast<std::size_t>(k)] =
        static_cast<int>(std::max_element(head.begin(), head.end()) - head.begin());
  }
  return tokens;
}

void accumulate_backward(const PolicyParams& params, std::span<const double> features,
                         const ForwardPass& pass,
                         const std::array<std::vector<double>, kNumHeads>& dlogits,
                         PolicyParams& grad) {
  const auto& shape = params.shape();
  const int D = shape.features;
  const int H = shape.hidden;
  std::vector<double> dh(static_cast<std::size_t>(H), 0.0);

  for (int k = 0; k < kNumHeads; ++k) {
    const int S = shape.head_size(k);
    const auto& dz = dlogits[static_cast<std::size_t>(k)];
    const auto w = params.tensor(head_weight(k));
    auto gw = grad.tensor(head_weight(k));
    auto gb = grad.tensor(head_bias(k));
    for (int g = 0; g < S; ++g) gb[static_cast<std::size_t>(g)] += dz[static_cast<std::size_t>(g)];
    for (int j = 0; j < H; ++j) {
      const double h = pass.hidden[static_cast<std::size_t>(j)];
      const double* wrow = w.data() + static_cast<std::size_t>(j) * S;
      double* grow = gw.data() + static_cast<std::size_t>(j) * S;
      double acc = 0.0;
      for (int g = 0; g < S; ++g) {
        grow[g] += h * dz[static_cast<std::size_t>(g)];
        acc += wrow[g] * dz[static_cast<std::size_t>(g)];
      }
      dh[static_cast<std::size_t>(j)] += acc;
    }
  }

  for (int j = 0; j < H; ++j) {
    const double h = pass.hidden[static_cast<std::size_t>(j)];
    dh[static_cast<std::size_t>(j)] *= (1.0 - h * h);
  }
  auto gb_in = grad.tensor(Tensor::InputBias);
  for (int j = 0; j < H; ++j) gb_in[static_cast<std::size_t>(j)] += dh[static_cast<std::size_t>(j)];
  auto gw_in = grad.tensor(Tensor::InputWeight);
  for (int d = 0; d < D; ++d) {
    const double x = features[static_cast<std::size_t>(d)];
    if (x == 0.0) continue;
    double* row = gw_in.data() + static_cast<std::size_t>(d) * H;
    for (int j = 0; j < H; ++j) row[j] += x * dh[static_cast<std::size_t>(j)];
  }
}

LossAndGrad sft_loss_and_grad(const PolicyParams& params, std::span<const SftExample> batch) {
  if (batch.empty()) throw std::invalid_argument("empty SFT batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  LossAndGrad out{0.0, PolicyParams(params.shape())};
  std::array<std::vector<double>, kNumHeads> dlogits;
  for (const auto& ex : batch) {
    const auto pass = forward(params, ex.features);
    const ActionTokens target{ex.target[0], ex.target[1], ex.target[2], ex.target[3], kFormatOk};
    out.loss -= logprob(pass, target);
    for (int k = 0; k < kNumHeads; ++k) {
      const auto& lp = pass.log_probs[static_cast<std::size_t>(k)];
      auto& dz = dlogits[static_cast<std::size_t>(k)];
      dz.resize(lp.size());
      for (std::size_t g = 0; g < lp.size(); ++g) dz[g] = scale * std::exp(lp[g]);
      dz[static_cast<std::size_t>(target[static_cast<std::size_t>(k)])] -= scale;
    }
    accumulate_backward(params, ex.features, pass, dlogits, out.grad);
  }
  out.loss *= scale;
  return out;
}

}  // namespace grpo_ground
