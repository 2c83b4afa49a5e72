// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/report.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

#include "grpo_ground/config.hpp"

namespace grpo_ground {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 150.0;
constexpr double kTop = 20.0;
constexpr double kBottom = 40.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Shortest form that reads back to the same double.
std::string exact(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string escape_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Series {
  const char* name;
  const char* colour;
  double StepMetrics::*field;
};

constexpr Series kBuckets[] = {
    {"easy", "#2ca02c", &StepMetrics::easy_frac},
    {"medium", "#ff7f0e", &StepMetrics::medium_frac},
    {"hard", "#d62728", &StepMetrics::hard_frac},
};

}  // namespace

std::vector<StepMetrics> read_metrics(std::istream& in) {
  std::vector<StepMetrics> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(step_metrics_from_json(line));
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<StepMetrics> load_metrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  try {
    return read_metrics(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string metrics_csv(std::span<const MetricsRun> runs) {
  const bool labelled = runs.size() > 1;
  std::ostringstream out;
  if (labelled) out << "run,";
  out << "step,easy,medium,hard,eval_acc\n";
  for (const auto& run : runs) {
    for (const auto& m : run.steps) {
      if (labelled) out << escape_csv(run.label) << ',';
      out << m.step << ',' << exact(m.easy_frac) << ',' << exact(m.medium_frac) << ',' << exact(m.hard_frac) << ',';
      if (m.eval_acc_at_05) out << exact(*m.eval_acc_at_05);
      out << '\n';
    }
  }
  return out.str();
}

std::string metrics_svg(std::span<const MetricsRun> runs) {
  int lo = 0;
  int hi = 1;
  bool any = false;
  for (const auto& run : runs) {
    for (const auto& m : run.steps) {
      lo = any ? std::min(lo, m.step) : m.step;
      hi = any ? std::max(hi, m.step) : m.step;
      any = true;
    }
  }
  if (hi <= lo) hi = lo + 1;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](int step) { return kLeft + pw * (step - lo) / static_cast<double>(hi - lo); };
  auto py = [&](double v) { return kTop + ph * (1.0 - std::clamp(v, 0.0, 1.0)); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"400\" viewBox=\"0 0 800 400\">\n";
  out << "<rect width=\"800\" height=\"400\" fill=\"white\"/>\n";
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
      << num(kTop + ph) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft) << "\" y2=\""
      << num(kTop + ph) << "\" stroke=\"black\"/>\n";
  for (double tick : {0.0, 0.5, 1.0}) {
    out << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(tick) + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << num(tick) << "</text>\n";
  }
  out << "<text x=\"" << num(kLeft) << "\" y=\"" << num(kHeight - 12) << "\" font-size=\"11\">" << lo << "</text>\n";
  out << "<text x=\"" << num(kLeft + pw) << "\" y=\"" << num(kHeight - 12) << "\" font-size=\"11\" text-anchor=\"end\">"
      << hi << "</text>\n";
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12)
      << "\" font-size=\"12\" text-anchor=\"middle\">step</text>\n";

  int legend_row = 0;
  auto legend = [&](const std::string& label, const char* colour, bool dashed) {
    const double y = kTop + 14.0 * legend_row++;
    const double x = kWidth - kRight + 10;
    out << "<line x1=\"" << num(x) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x + 20) << "\" y2=\"" << num(y)
        << "\" stroke=\"" << colour << "\"" << (dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
    out << "<text x=\"" << num(x + 25) << "\" y=\"" << num(y + 4) << "\" font-size=\"11\">" << escape_xml(label)
        << "</text>\n";
  };
  auto path = [&](const std::string& d, const char* colour, bool dashed) {
    out << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\""
        << (dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
  };

  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    const bool dashed = r > 0;
    const std::string prefix = runs.size() > 1 ? run.label + " " : "";
    for (const auto& s : kBuckets) {
      std::string d;
      for (const auto& m : run.steps) {
        d += (d.empty() ? "M" : " L") + num(px(m.step)) + " " + num(py(m.*(s.field)));
      }
      if (d.empty()) continue;
      path(d, s.colour, dashed);
      legend(prefix + s.name, s.colour, dashed);
    }
    std::string d;
    for (const auto& m : run.steps) {
      if (!m.eval_acc_at_05) continue;
      d += (d.empty() ? "M" : " L") + num(px(m.step)) + " " + num(py(*m.eval_acc_at_05));
    }
    if (!d.empty()) {
      path(d, "#1f77b4", dashed);
      legend(prefix + "eval acc@0.5", "#1f77b4", dashed);
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace grpo_ground
