// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <charconv>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grpo_ground/config.hpp"
#include "grpo_ground/report.hpp"

namespace grpo_ground {
namespace {

std::vector<StepMetrics> three_steps() {
  // Fractions in thirds of a 3-group batch; their decimal forms do not sum
  // to 1 exactly, which the CSV must still preserve to 1e-9.
  return {{1, 1.0, 0.2, 1.0 / 3, 1.0 / 3, 1.0 / 3, 2.0, 0.0, 0.0, std::nullopt},
          {2, 1.1, 0.3, 2.0 / 3, 0.0, 1.0 / 3, 1.9, 0.01, 0.1, 0.25},
          {3, 1.2, 0.4, 0.0, 1.0 / 3, 2.0 / 3, 1.8, 0.02, 0.2, std::nullopt}};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

double to_double(const std::string& s) {
  double v = 0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

// Every opened tag is closed in order; self-closing tags stand alone.
bool balanced_xml(const std::string& s) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while ((i = s.find('<', i)) != std::string::npos) {
    const auto end = s.find('>', i);
    if (end == std::string::npos) return false;
    const std::string tag = s.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.empty()) return false;
    if (tag.back() == '/') continue;
    if (tag.front() == '/') {
      if (stack.empty() || stack.back() != tag.substr(1)) return false;
      stack.pop_back();
      continue;
    }
    stack.push_back(tag.substr(0, tag.find(' ')));
  }
  return stack.empty();
}

int count(const std::string& s, const std::string& needle) {
  int n = 0;
  for (auto i = s.find(needle); i != std::string::npos; i = s.find(needle, i + 1)) ++n;
  return n;
}

TEST(Report, CsvOneRowPerStep) {
  const std::vector<MetricsRun> runs{{"a", three_steps()}};
  const auto rows = parse_csv(metrics_csv(runs));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"step", "easy", "medium", "hard", "eval_acc"}));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ASSERT_EQ(rows[r].size(), 5u);
    EXPECT_EQ(rows[r][0], std::to_string(r));
    EXPECT_NEAR(to_double(rows[r][1]) + to_double(rows[r][2]) + to_double(rows[r][3]), 1.0, 1e-9);
  }
  EXPECT_EQ(rows[1][4], "");
  EXPECT_EQ(to_double(rows[2][4]), 0.25);
}

TEST(Report, CsvCompareAddsRunColumn) {
  const std::vector<MetricsRun> runs{{"exp", three_steps()}, {"none", three_steps()}};
  const auto rows = parse_csv(metrics_csv(runs));
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0][0], "run");
  EXPECT_EQ(rows[1][0], "exp");
  EXPECT_EQ(rows[6][0], "none");
}

TEST(Report, SvgIsWellFormedWithOnePathPerSeries) {
  const std::vector<MetricsRun> one{{"a", three_steps()}};
  const auto svg = metrics_svg(one);
  EXPECT_TRUE(balanced_xml(svg));
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("viewBox=\"0 0 800 400\""), std::string::npos);
  EXPECT_EQ(count(svg, "<path"), 4);
  EXPECT_EQ(count(svg, "stroke-dasharray"), 0);

  const std::vector<MetricsRun> two{{"a<b", three_steps()}, {"c", three_steps()}};
  const auto svg2 = metrics_svg(two);
  EXPECT_TRUE(balanced_xml(svg2));
  EXPECT_EQ(count(svg2, "<path"), 8);
  EXPECT_NE(svg2.find("a&lt;b easy"), std::string::npos);
  EXPECT_GT(count(svg2, "stroke-dasharray"), 0);
}

TEST(Report, SvgWithoutEvalPointsOmitsEvalSeries) {
  auto steps = three_steps();
  for (auto& m : steps) m.eval_acc_at_05.reset();
  const std::vector<MetricsRun> runs{{"a", steps}};
  EXPECT_EQ(count(metrics_svg(runs), "<path"), 3);
}

TEST(Report, ReadMetricsRoundTripAndErrors) {
  std::ostringstream text;
  for (const auto& m : three_steps()) text << step_metrics_to_json(m) << "\n\n";
  std::istringstream in(text.str());
  EXPECT_EQ(read_metrics(in), three_steps());

  std::istringstream bad(step_metrics_to_json(three_steps()[0]) + "\n{\"step\": 2}\n");
  try {
    read_metrics(bad);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("line 2: ", 0), 0u) << e.what();
  }
  EXPECT_THROW(load_metrics("/nonexistent/metrics.jsonl"), std::runtime_error);
}

}  // namespace
}  // namespace grpo_ground
