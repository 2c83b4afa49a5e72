// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace grpo_ground {

using nlohmann::json;

namespace {
constexpr std::string_view kFormat = "grpo-ground-checkpoint";
constexpr int kVersion = 1;
}  // namespace

std::string checkpoint_to_string(const PolicyParams& params, const CheckpointMeta& meta) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["D"] = params.shape().features;
  doc["H"] = params.shape().hidden;
  doc["G"] = params.shape().bins;
  doc["seed"] = meta.seed;
  doc["stage"] = meta.stage;
  json tensors = json::object();
  for (int t = 0; t < kNumTensors; ++t) {
    const auto span = params.tensor(static_cast<Tensor>(t));
    tensors[std::string(tensor_name(static_cast<Tensor>(t)))] = std::vector<double>(span.begin(), span.end());
  }
  doc["tensors"] = std::move(tensors);
  return doc.dump() + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat) throw std::runtime_error("not a grpo-ground checkpoint");
    if (doc.at("version").get<int>() != kVersion) throw std::runtime_error("unsupported checkpoint version");
    const PolicyShape shape{doc.at("D").get<int>(), doc.at("H").get<int>(), doc.at("G").get<int>()};
    Checkpoint ck{PolicyParams(shape), {doc.at("seed").get<std::uint64_t>(), doc.at("stage").get<std::string>()}};
    const auto& tensors = doc.at("tensors");
    for (int t = 0; t < kNumTensors; ++t) {
      const auto name = std::string(tensor_name(static_cast<Tensor>(t)));
      const auto values = tensors.at(name).get<std::vector<double>>();
      auto dst = ck.params.tensor(static_cast<Tensor>(t));
      if (values.size() != dst.size()) {
        throw std::runtime_error("tensor " + name + " has " + std::to_string(values.size()) +
                                 " entries, expected " + std::to_string(dst.size()));
      }
      std::copy(values.begin(), values.end(), dst.begin());
    }
    if (!ck.params.all_finite()) throw std::runtime_error("checkpoint contains non-finite values");
    return ck;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << checkpoint_to_string(params, meta);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str());
}

}  // namespace grpo_ground
