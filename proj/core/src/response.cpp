// Copyright 2026 The grpo-ground Authors
// SPDX-License-Identifier: Apache-2.0

#include "grpo_ground/response.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace grpo_ground {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// digits+ ('.' digits+)?
std::optional<double> match_number(std::string_view s, std::size_t& pos) {
  const std::size_t start = pos;
  std::size_t i = pos;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i == start) return std::nullopt;
  if (i < s.size() && s[i] == '.') {
    std::size_t j = i + 1;
    while (j < s.size() && is_digit(s[j])) ++j;
    if (j == i + 1) return std::nullopt;
    i = j;
  }
  double value = 0.0;
  const auto res = std::from_chars(s.data() + start, s.data() + i, value);
  if (res.ec == std::errc::result_out_of_range) {
    value = HUGE_VAL;
  } else if (res.ec != std::errc{}) {
    return std::nullopt;
  }
  pos = i;
  return value;
}

bool match_literal(std::string_view s, std::size_t& pos, std::string_view lit) {
  if (s.substr(pos, lit.size()) != lit) return false;
  pos += lit.size();
  return true;
}

// `(a, b), (c, d)` starting exactly at `pos`.
std::optional<std::array<double, 4>> match_box(std::string_view s, std::size_t& pos) {
  std::size_t i = pos;
  std::array<double, 4> v{};
  if (!match_literal(s, i, "(")) return std::nullopt;
  auto a = match_number(s, i);
  if (!a || !match_literal(s, i, ", ")) return std::nullopt;
  auto b = match_number(s, i);
  if (!b || !match_literal(s, i, "), (")) return std::nullopt;
  auto c = match_number(s, i);
  if (!c || !match_literal(s, i, ", ")) return std::nullopt;
  auto d = match_number(s, i);
  if (!d || !match_literal(s, i, ")")) return std::nullopt;
  v = {*a, *b, *c, *d};
  pos = i;
  return v;
}

BBox to_box(const std::array<double, 4>& v, int bins) {
  return {bin_to_coord(v[0], bins), bin_to_coord(v[1], bins), bin_to_coord(v[2], bins),
          bin_to_coord(v[3], bins)};
}

std::optional<ParsedResponse> parse_strict(std::string_view text, int bins) {
  std::size_t pos = 0;
  if (!match_literal(text, pos, kThinkOpen)) return std::nullopt;
  const std::size_t close = text.find(kThinkClose, pos);
  if (close == std::string_view::npos) return std::nullopt;
  ParsedResponse out;
  out.think_text = std::string(text.substr(pos, close - pos));
  pos = close + kThinkClose.size();
  if (!match_literal(text, pos, kAnswerOpen)) return std::nullopt;
  auto box = match_box(text, pos);
  if (!box) return std::nullopt;
  if (!match_literal(text, pos, kAnswerClose)) return std::nullopt;
  for (; pos < text.size(); ++pos) {
    if (!is_space(text[pos])) return std::nullopt;
  }
  out.box = to_box(*box, bins);
  out.format_ok = true;
  return out;
}

}  // namespace

double bin_to_coord(double bin, int bins) {
  if (bins < 2) throw std::invalid_argument("bin count must be at least 2");
  return std::clamp(bin / static_cast<double>(bins - 1), 0.0, 1.0);
}

int coord_to_bin(double coord, int bins) {
  if (bins < 2) throw std::invalid_argument("bin count must be at least 2");
  const double scaled = std::clamp(coord, 0.0, 1.0) * static_cast<double>(bins - 1);
  const double lower = std::floor(scaled);
  const int b = (scaled - lower > 0.5) ? static_cast<int>(lower) + 1 : static_cast<int>(lower);
  return std::clamp(b, 0, bins - 1);
}

BBox bins_to_box(const BinBox& bins, int grid) {
  return {bin_to_coord(bins[0], grid), bin_to_coord(bins[1], grid), bin_to_coord(bins[2], grid),
          bin_to_coord(bins[3], grid)};
}

BinBox box_to_bins(const BBox& box, int grid) {
  return {coord_to_bin(box.x1, grid), coord_to_bin(box.y1, grid), coord_to_bin(box.x2, grid),
          coord_to_bin(box.y2, grid)};
}

std::string render(std::string_view think, const BinBox& bins, bool corrupt) {
  if (think.find(kThinkClose) != std::string_view::npos) {
    throw std::invalid_argument("unserializable reasoning text");
  }
  std::string out;
  out.reserve(think.size() + 64);
  out.append(kThinkOpen).append(think).append(kThinkClose).append(kAnswerOpen);
  out.append("(").append(std::to_string(bins[0])).append(", ").append(std::to_string(bins[1]));
  out.append("), (").append(std::to_string(bins[2])).append(", ").append(std::to_string(bins[3]));
  out.append(")");
  if (!corrupt) out.append(kAnswerClose);
  return out;
}

ParsedResponse parse(std::string_view text, int bins) {
  if (auto strict = parse_strict(text, bins)) return *std::move(strict);

  ParsedResponse out;
  if (text.substr(0, kThinkOpen.size()) == kThinkOpen) {
    const std::size_t close = text.find(kThinkClose, kThinkOpen.size());
    if (close != std::string_view::npos) {
      out.think_text = std::string(text.substr(kThinkOpen.size(), close - kThinkOpen.size()));
    }
  }
  for (std::size_t pos = text.find('('); pos != std::string_view::npos; pos = text.find('(', pos + 1)) {
    std::size_t cursor = pos;
    if (auto box = match_box(text, cursor)) {
      out.box = to_box(*box, bins);
      break;
    }
  }
  return out;
}

std::string_view canonical_instruction() {
  return "First output the thinking process in <think> </think> tags and then output the "
         "bounding box in <answer> </answer> tags.";
}

}  // namespace grpo_ground
