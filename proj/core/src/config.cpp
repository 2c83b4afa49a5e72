// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <type_traits>

#include "json.hpp"

#include "grpo_ground/errors.hpp"

namespace grpo_ground {

namespace {

using json = nlohmann::json;

// Reads fields off one JSON object and remembers which keys were used, so
// leftovers can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!matches<T>(*v)) throw ConfigError(join(key) + " has the wrong type");
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(join(key) + " has the wrong type");
    }
  }

  // nlohmann converts between number kinds silently; 2.5 must not read as 2.
  template <typename T>
  static bool matches(const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      return v.is_boolean();
    } else if constexpr (std::is_unsigned_v<T>) {
      return v.is_number_unsigned();
    } else if constexpr (std::is_integral_v<T>) {
      return v.is_number_integer();
    } else if constexpr (std::is_floating_point_v<T>) {
      return v.is_number();
    } else {
      return true;
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    const json* v = take(key);
    if (v == nullptr) return;
    if (!v->is_string()) throw ConfigError(join(key) + " must be a string");
    auto parsed = parse(v->get<std::string>());
    if (!parsed) throw ConfigError(join(key) + ": unknown value '" + v->get<std::string>() + "'");
    out = *parsed;
  }

  const json* take(const char* key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ConfigError("unknown config key: " + join(k.c_str()));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json env_json(const EnvSpec& s) {
  return {{"min_objects", s.min_objects},
          {"max_objects", s.max_objects},
          {"attr_dim", s.attr_dim},
          {"distractor_similarity", s.distractor_similarity},
          {"min_box_area", s.min_box_area},
          {"bins", s.bins},
          {"feature_noise_sigma", s.feature_noise_sigma}};
}

void read_env(const json& j, const std::string& path, EnvSpec& s) {
  ObjectReader r(j, path);
  r.read("min_objects", s.min_objects);
  r.read("max_objects", s.max_objects);
  r.read("attr_dim", s.attr_dim);
  r.read("distractor_similarity", s.distractor_similarity);
  r.read("min_box_area", s.min_box_area);
  r.read("bins", s.bins);
  r.read("feature_noise_sigma", s.feature_noise_sigma);
  r.finish();
}

json optimizer_json(const OptimizerConfig& o) {
  return {{"kind", std::string(to_string(o.kind))},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"epsilon", o.epsilon}};
}

void read_optimizer(const json& j, const std::string& path, OptimizerConfig& o) {
  ObjectReader r(j, path);
  r.read_enum("kind", o.kind, parse_optimizer_kind);
  r.read("beta1", o.beta1);
  r.read("beta2", o.beta2);
  r.read("epsilon", o.epsilon);
  r.finish();
}

json config_json(const TrainConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["env"] = env_json(c.env);
  if (c.mix) {
    j["mix"] = {{"fraction", c.mix->fraction}, {"env", env_json(c.mix->env)}};
  } else {
    j["mix"] = nullptr;
  }
  j["policy"] = {{"hidden", c.hidden}};
  j["sft"] = {{"n_examples", c.sft.n_examples},
              {"epochs", c.sft.epochs},
              {"batch_size", c.sft.batch_size},
              {"learning_rate", c.sft.learning_rate},
              {"optimizer", optimizer_json(c.sft.optimizer)}};
  const auto& a = c.grpo.algo;
  j["grpo"] = {{"group_size", a.group_size},
               {"beta", a.beta},
               {"phi_kind", std::string(to_string(a.phi_kind))},
               {"learning_rate", a.learning_rate},
               {"std_epsilon", a.std_epsilon},
               {"salvage", a.salvage},
               {"clip", a.clip},
               {"clip_epsilon", a.clip_epsilon},
               {"normalize_weights", a.normalize_weights},
               {"optimizer", optimizer_json(a.optimizer)},
               {"steps", c.grpo.steps},
               {"tasks_per_step", c.grpo.tasks_per_step},
               {"pool_size", c.grpo.pool_size}};
  j["eval"] = {{"n_tasks", c.eval.n_tasks},
               {"every_k_steps", c.eval.every_k_steps},
               {"tau", c.eval.tau},
               {"greedy", c.eval.greedy}};
  j["stage_mode"] = std::string(to_string(c.stage_mode));
  return j;
}

TrainConfig config_from(const json& j) {
  TrainConfig c;
  ObjectReader r(j, "");
  r.read("seed", c.seed);
  if (const json* env = r.take("env")) read_env(*env, "env", c.env);
  if (const json* mix = r.take("mix"); mix != nullptr && !mix->is_null()) {
    ObjectReader m(*mix, "mix");
    EnvMixConfig cfg;
    // Unset mix.env fields inherit the primary environment.
    cfg.env = c.env;
    m.read("fraction", cfg.fraction);
    if (const json* env = m.take("env")) read_env(*env, "mix.env", cfg.env);
    m.finish();
    c.mix = cfg;
  }
  if (const json* p = r.take("policy")) {
    ObjectReader pr(*p, "policy");
    pr.read("hidden", c.hidden);
    pr.finish();
  }
  if (const json* s = r.take("sft")) {
    ObjectReader sr(*s, "sft");
    sr.read("n_examples", c.sft.n_examples);
    sr.read("epochs", c.sft.epochs);
    sr.read("batch_size", c.sft.batch_size);
    sr.read("learning_rate", c.sft.learning_rate);
    if (const json* o = sr.take("optimizer")) read_optimizer(*o, "sft.optimizer", c.sft.optimizer);
    sr.finish();
  }
  if (const json* g = r.take("grpo")) {
    ObjectReader gr(*g, "grpo");
    auto& a = c.grpo.algo;
    gr.read("group_size", a.group_size);
    gr.read("beta", a.beta);
    gr.read_enum("phi_kind", a.phi_kind, parse_phi_kind);
    gr.read("learning_rate", a.learning_rate);
    gr.read("std_epsilon", a.std_epsilon);
    gr.read("salvage", a.salvage);
    gr.read("clip", a.clip);
    gr.read("clip_epsilon", a.clip_epsilon);
    gr.read("normalize_weights", a.normalize_weights);
    if (const json* o = gr.take("optimizer")) read_optimizer(*o, "grpo.optimizer", a.optimizer);
    gr.read("steps", c.grpo.steps);
    gr.read("tasks_per_step", c.grpo.tasks_per_step);
    gr.read("pool_size", c.grpo.pool_size);
    gr.finish();
  }
  if (const json* e = r.take("eval")) {
    ObjectReader er(*e, "eval");
    er.read("n_tasks", c.eval.n_tasks);
    er.read("every_k_steps", c.eval.every_k_steps);
    er.read("tau", c.eval.tau);
    er.read("greedy", c.eval.greedy);
    er.finish();
  }
  r.read_enum("stage_mode", c.stage_mode, parse_stage_mode);
  r.finish();
  return c;
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

json eval_json(const EvalResult& e) {
  return {{"acc_at_tau", e.acc_at_tau}, {"mean_iou", e.mean_iou}, {"format_rate", e.format_rate}, {"n", e.n}};
}

EvalResult eval_from(const json& j) {
  return {j.at("acc_at_tau").get<double>(), j.at("mean_iou").get<double>(),
          j.at("format_rate").get<double>(), j.at("n").get<int>()};
}

json step_json(const StepMetrics& m) {
  json j{{"step", m.step},
         {"mean_total_reward", m.mean_total_reward},
         {"mean_miou", m.mean_miou},
         {"easy_frac", m.easy_frac},
         {"medium_frac", m.medium_frac},
         {"hard_frac", m.hard_frac},
         {"mean_weight", m.mean_weight},
         {"mean_kl", m.mean_kl},
         {"objective", m.objective}};
  j["eval_acc_at_05"] = m.eval_acc_at_05 ? json(*m.eval_acc_at_05) : json(nullptr);
  return j;
}

StepMetrics step_from(const json& j) {
  StepMetrics m;
  m.step = j.at("step").get<int>();
  m.mean_total_reward = j.at("mean_total_reward").get<double>();
  m.mean_miou = j.at("mean_miou").get<double>();
  m.easy_frac = j.at("easy_frac").get<double>();
  m.medium_frac = j.at("medium_frac").get<double>();
  m.hard_frac = j.at("hard_frac").get<double>();
  m.mean_weight = j.at("mean_weight").get<double>();
  m.mean_kl = j.at("mean_kl").get<double>();
  m.objective = j.at("objective").get<double>();
  if (auto it = j.find("eval_acc_at_05"); it != j.end() && !it->is_null()) {
    m.eval_acc_at_05 = it->get<double>();
  }
  return m;
}

}  // namespace

std::string config_to_json(const TrainConfig& config, int indent) { return config_json(config).dump(indent); }

TrainConfig config_from_json(const std::string& text) { return config_from(parse_json(text, "config")); }

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

EnvSpec env_spec_from_json(const std::string& text) {
  EnvSpec s;
  read_env(parse_json(text, "env spec"), "env", s);
  return s;
}

std::string config_hash(const TrainConfig& config) {
  const std::string doc = config_to_json(config, -1);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : doc) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string report_to_json(const ExperimentReport& r) {
  json j;
  j["generated_by"] = r.generated_by;
  j["config"] = config_json(r.config);
  j["sft_gradient_steps"] = r.sft_gradient_steps;
  j["stage2_gradient_steps"] = r.stage2_gradient_steps;
  j["stage1_eval"] = r.stage1_eval ? eval_json(*r.stage1_eval) : json(nullptr);
  j["final_eval"] = eval_json(r.final_eval);
  j["final_step"] = r.final_step ? step_json(*r.final_step) : json(nullptr);
  j["final_checksum"] = r.final_checksum;
  j["files"] = r.files;
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(const std::string& text) {
  const json j = parse_json(text, "report");
  ExperimentReport r;
  try {
    r.generated_by = j.at("generated_by").get<std::string>();
    r.config = config_from(j.at("config"));
    r.sft_gradient_steps = j.at("sft_gradient_steps").get<int>();
    r.stage2_gradient_steps = j.at("stage2_gradient_steps").get<int>();
    if (!j.at("stage1_eval").is_null()) r.stage1_eval = eval_from(j.at("stage1_eval"));
    r.final_eval = eval_from(j.at("final_eval"));
    if (!j.at("final_step").is_null()) r.final_step = step_from(j.at("final_step"));
    r.final_checksum = j.at("final_checksum").get<std::uint64_t>();
    r.files = j.at("files").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string step_metrics_to_json(const StepMetrics& m) { return step_json(m).dump(); }

StepMetrics step_metrics_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
    return step_from(j);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed metrics line: ") + e.what());
  }
}

std::string sft_metrics_to_json(const SftEpochMetrics& m) {
  json j{{"epoch", m.epoch}, {"mean_loss", m.mean_loss}};
  j["eval_acc_at_05"] = m.eval_acc_at_05 ? json(*m.eval_acc_at_05) : json(nullptr);
  return j.dump();
}

}  // namespace grpo_ground
