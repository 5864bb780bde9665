// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "chronosteer/errors.hpp"
#include "chronosteer/eval.hpp"
#include "chronosteer/random.hpp"

namespace chronosteer::eval {

std::vector<EvalCase> generate_cases(const CaseGenConfig& cfg) {
  const auto sources = datagen::generate_source_series(cfg.sources);
  std::vector<datagen::TaggedSlice> windows = datagen::window_sources(sources, cfg.windows);
  if (windows.size() < cfg.count)
    throw UsageError("case generator: " + std::to_string(windows.size()) +
                     " windows cannot supply " + std::to_string(cfg.count) + " cases");
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  Rng pick = substream(cfg.seed, 1);
  std::shuffle(order.begin(), order.end(), pick);

  std::vector<EvalCase> cases;
  cases.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    datagen::TaggedSlice& w = windows[order[i]];
    Rng rng = substream(cfg.seed, 2, i);
    const auto kind = series::transform_from_index(
        std::uniform_int_distribution<std::size_t>(0, series::kTransformCount - 1)(rng));
    const series::FactorRange range = series::factor_range(kind);
    const double factor = kind == series::TransformKind::kKeepUnchanged
                              ? 0.0
                              : uniform(rng, range.min_factor, range.max_factor);
    w.slice.future = series::apply_transform(kind, w.slice.future, factor);
    cases.push_back({std::move(w.slice), std::string(series::anchor_text(kind)), w.domain});
  }
  return cases;
}

std::vector<EvalCase> cases_from_series(std::span<const double> values, const std::string& domain,
                                        const series::WindowSpec& spec) {
  std::vector<EvalCase> out;
  for (series::Slice& s : series::slide_windows(values, spec))
    out.push_back({std::move(s), std::nullopt, domain});
  return out;
}

namespace {

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

series::Series load_csv_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open CSV " + path);
  series::Series values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::size_t comma = line.rfind(',');
    const std::string_view field =
        comma == std::string::npos ? std::string_view(line) : std::string_view(line).substr(comma + 1);
    double v = 0.0;
    if (!parse_double(field, v)) {
      if (values.empty() && line_no == 1) continue;  // header
      throw FormatError(path + ":" + std::to_string(line_no) + ": non-numeric value");
    }
    values.push_back(v);
  }
  if (values.empty()) throw FormatError(path + ": no values");
  return values;
}

}  // namespace chronosteer::eval
