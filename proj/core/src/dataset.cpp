// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace grpo_ground {

using nlohmann::json;

namespace {

constexpr std::string_view kFormat = "grpo-ground-dataset";
constexpr int kVersion = 1;

json spec_json(const EnvSpec& s) {
  return json{{"min_objects", s.min_objects},
              {"max_objects", s.max_objects},
              {"attr_dim", s.attr_dim},
              {"distractor_similarity", s.distractor_similarity},
              {"min_box_area", s.min_box_area},
              {"bins", s.bins},
              {"feature_noise_sigma", s.feature_noise_sigma}};
}

EnvSpec spec_from(const json& j) {
  EnvSpec s;
  s.min_objects = j.at("min_objects").get<int>();
  s.max_objects = j.at("max_objects").get<int>();
  s.attr_dim = j.at("attr_dim").get<int>();
  s.distractor_similarity = j.at("distractor_similarity").get<double>();
  s.min_box_area = j.at("min_box_area").get<double>();
  s.bins = j.at("bins").get<int>();
  s.feature_noise_sigma = j.at("feature_noise_sigma").get<double>();
  return s;
}

}  // namespace

std::string env_spec_to_json(const EnvSpec& spec) { return spec_json(spec).dump(); }

void write_dataset(std::ostream& out, const Dataset& ds) {
  json header{{"kind", "header"},
              {"format", kFormat},
              {"version", kVersion},
              {"seed", ds.seed},
              {"n", ds.tasks.size()},
              {"env", spec_json(ds.spec)}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < ds.tasks.size(); ++i) {
    const auto& t = ds.tasks[i];
    json line{{"kind", "task"},
              {"index", i},
              {"n_objects", t.n_objects},
              {"target_index", t.target_index},
              {"distractor_similarity", t.distractor_similarity},
              {"max_distractor_cosine", t.max_distractor_cosine},
              {"gt_box", {t.gt_box.x1, t.gt_box.y1, t.gt_box.x2, t.gt_box.y2}},
              {"features", t.features}};
    out << line.dump() << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      if (!have_header) {
        if (j.at("kind") != "header" || j.at("format") != kFormat) {
          throw std::runtime_error("missing dataset header");
        }
        if (j.at("version").get<int>() != kVersion) throw std::runtime_error("unsupported dataset version");
        ds.seed = j.at("seed").get<std::uint64_t>();
        ds.spec = spec_from(j.at("env"));
        expected = j.at("n").get<std::size_t>();
        have_header = true;
        continue;
      }
      if (j.at("kind") != "task") throw std::runtime_error("expected a task record");
      TaskInstance t;
      t.layout = layout_of(ds.spec);
      t.n_objects = j.at("n_objects").get<int>();
      t.target_index = j.at("target_index").get<int>();
      t.distractor_similarity = j.at("distractor_similarity").get<double>();
      t.max_distractor_cosine = j.at("max_distractor_cosine").get<double>();
      const auto box = j.at("gt_box").get<std::vector<double>>();
      if (box.size() != 4) throw std::runtime_error("gt_box must have 4 entries");
      t.gt_box = {box[0], box[1], box[2], box[3]};
      t.features = j.at("features").get<std::vector<double>>();
      if (static_cast<int>(t.features.size()) != t.layout.dim()) {
        throw std::runtime_error("features length does not match the header spec");
      }
      ds.tasks.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw std::runtime_error("empty dataset file");
  if (ds.tasks.size() != expected) {
    throw std::runtime_error("dataset header announces " + std::to_string(expected) + " tasks, found " +
                             std::to_string(ds.tasks.size()));
  }
  return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_dataset(out, ds);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_dataset(in);
}

}  // namespace grpo_ground
