// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "grpo_ground/checkpoint.hpp"
#include "grpo_ground/config.hpp"
#include "grpo_ground/dataset.hpp"
#include "grpo_ground/errors.hpp"
#include "grpo_ground/report.hpp"
#include "grpo_ground/response.hpp"
#include "grpo_ground/reward.hpp"
#include "grpo_ground/trainer.hpp"

namespace grpo_ground::cli {

namespace {

using json = nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << body;
}

std::string tau_key(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "acc_at_%g", tau);
  return buf;
}

json summary_json(const EvalResult& r, double tau) {
  json j;
  j[tau_key(tau)] = r.acc_at_tau;
  j["tau"] = tau;
  j["mean_iou"] = r.mean_iou;
  j["format_rate"] = r.format_rate;
  j["n"] = r.n;
  return j;
}

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw UsageError("--tau must be in (0, 1)");
}

struct GenDataArgs {
  std::uint64_t seed = 0;
  int n = 0;
  std::string spec;
  std::string out;
};

int gen_data(const GenDataArgs& a, std::ostream& out) {
  EnvSpec spec;
  if (!a.spec.empty()) spec = env_spec_from_json(read_file(a.spec));
  Dataset ds;
  ds.seed = a.seed;
  ds.spec = spec;
  ds.tasks = generate_dataset(a.seed, a.n, spec);
  save_dataset(a.out, ds);
  out << json{{"out", a.out}, {"n", ds.tasks.size()}}.dump() << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::string stage_mode;
  std::string out_dir;
};

int train(const TrainArgs& a, std::ostream& out) {
  TrainConfig config = load_config(a.config);
  if (!a.stage_mode.empty()) {
    auto mode = parse_stage_mode(a.stage_mode);
    if (!mode) throw UsageError("unknown stage mode '" + a.stage_mode + "'");
    config.stage_mode = *mode;
  }
  const auto result = run_experiment(config, std::filesystem::path(a.out_dir));
  const auto& f = result.report.final_eval;
  out << json{{"out_dir", a.out_dir},
              {"generated_by", result.report.generated_by},
              {"final_acc_at_tau", f.acc_at_tau},
              {"final_mean_iou", f.mean_iou}}
             .dump()
      << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string dataset;
  double tau = kDefaultAccThreshold;
  bool no_salvage = false;
};

int eval(const EvalArgs& a, std::ostream& out) {
  check_tau(a.tau);
  const auto ck = load_checkpoint(a.checkpoint);
  const auto ds = load_dataset(a.dataset);
  if (ds.tasks.empty()) throw UsageError("dataset has no tasks");
  const int d = static_cast<int>(ds.tasks.front().features.size());
  if (d != ck.params.shape().features) {
    throw std::runtime_error("shape mismatch: checkpoint D=" + std::to_string(ck.params.shape().features) +
                             ", dataset D=" + std::to_string(d));
  }
  const auto r = evaluate(ck.params, ds.tasks, a.tau, !a.no_salvage);
  out << summary_json(r, a.tau).dump() << '\n';
  return kExitOk;
}

struct ScoreArgs {
  std::string predictions;
  double tau = kDefaultAccThreshold;
  bool no_salvage = false;
  int bins = 16;
  std::string per_record;
};

int score(const ScoreArgs& a, std::ostream& out) {
  check_tau(a.tau);
  if (a.bins < 2) throw UsageError("--bins must be at least 2");
  std::ifstream in(a.predictions, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + a.predictions);

  std::ostringstream records;
  std::string line;
  int line_no = 0;
  int n = 0;
  int hits = 0;
  int formats = 0;
  double iou_sum = 0.0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string id;
    std::string text;
    BBox gt;
    try {
      const json j = json::parse(line);
      id = j.at("id").get<std::string>();
      text = j.at("prediction_text").get<std::string>();
      const auto g = j.at("gt").get<std::vector<double>>();
      if (g.size() != 4) throw std::runtime_error("gt must have four values");
      gt = {g[0], g[1], g[2], g[3]};
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!valid_ground_truth(gt, 0.0)) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": gt box is degenerate");
    }
    const auto r = total_reward(parse(text, a.bins), gt, !a.no_salvage);
    ++n;
    hits += r.acc > a.tau ? 1 : 0;
    formats += r.format;
    iou_sum += r.acc;
    if (!a.per_record.empty()) {
      records << json{{"id", id}, {"iou", r.acc}, {"format", r.format}, {"hit", r.acc > a.tau}}.dump() << '\n';
    }
  }
  if (n == 0) throw UsageError("no records");
  if (!a.per_record.empty()) write_file(a.per_record, records.str());
  EvalResult r;
  r.n = n;
  r.acc_at_tau = static_cast<double>(hits) / n;
  r.mean_iou = iou_sum / n;
  r.format_rate = static_cast<double>(formats) / n;
  out << summary_json(r, a.tau).dump() << '\n';
  return kExitOk;
}

struct ReportArgs {
  std::string metrics;
  std::string compare;
  std::string svg;
  std::string csv;
};

int report(const ReportArgs& a, std::ostream& out) {
  std::vector<MetricsRun> runs;
  runs.push_back({a.metrics, load_metrics(a.metrics)});
  if (!a.compare.empty()) runs.push_back({a.compare, load_metrics(a.compare)});
  write_file(a.svg, metrics_svg(runs));
  write_file(a.csv, metrics_csv(runs));
  out << json{{"svg", a.svg}, {"csv", a.csv}}.dump() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Difficulty-weighted GRPO on a synthetic grounding task", "grpo-ground"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Write a seeded task dataset (JSON Lines)");
  gen_cmd->add_option("--seed", gen.seed, "Dataset seed");
  gen_cmd->add_option("--n", gen.n, "Number of tasks")->required();
  gen_cmd->add_option("--spec", gen.spec, "EnvSpec JSON file; defaults when omitted");
  gen_cmd->add_option("--out", gen.out, "Output path")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Run the configured training stages");
  train_cmd->add_option("--config", tr.config, "Config JSON file")->required();
  train_cmd->add_option("--stage-mode", tr.stage_mode,
                        "Override: sft_then_grpo, pure_rl, sft_only, sft_then_sft_more");
  train_cmd->add_option("--out-dir", tr.out_dir, "Directory for metrics, checkpoints, report")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Greedy Acc@tau of a checkpoint on a dataset");
  eval_cmd->add_option("--checkpoint", ev.checkpoint)->required();
  eval_cmd->add_option("--dataset", ev.dataset)->required();
  eval_cmd->add_option("--tau", ev.tau, "IoU threshold");
  eval_cmd->add_flag("--no-salvage", ev.no_salvage, "Malformed responses earn no accuracy reward");

  ScoreArgs sc;
  auto* score_cmd = app.add_subcommand("score", "Score external predictions (JSON Lines)");
  score_cmd->add_option("--predictions", sc.predictions)->required();
  score_cmd->add_option("--tau", sc.tau, "IoU threshold");
  score_cmd->add_flag("--no-salvage", sc.no_salvage, "Malformed responses earn no accuracy reward");
  score_cmd->add_option("--bins", sc.bins, "Bin count G that answer coordinates refer to");
  score_cmd->add_option("--per-record", sc.per_record, "Write per-record results (JSON Lines)");

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "CSV and SVG of difficulty fractions over steps");
  report_cmd->add_option("--metrics", rep.metrics)->required();
  report_cmd->add_option("--compare", rep.compare, "Second metrics file to overlay");
  report_cmd->add_option("--svg", rep.svg)->required();
  report_cmd->add_option("--csv", rep.csv)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return gen_data(gen, out);
    if (*train_cmd) return train(tr, out);
    if (*eval_cmd) return eval(ev, out);
    if (*score_cmd) return score(sc, out);
    if (*report_cmd) return report(rep, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace grpo_ground::cli
