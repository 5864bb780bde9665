// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronosteer/datagen.hpp"
#include "chronosteer/seriesops.hpp"
#include "chronosteer/steering.hpp"

namespace chronosteer::eval {

// Raw-frame history and future with an optional instruction.
struct EvalCase {
  series::Slice slice;
  std::optional<std::string> instruction;
  std::string domain;
};

enum class Method { kUnimodal = 0, kSteered, kFunction, kOracle };
inline constexpr std::size_t kMethodCount = 4;
const std::array<Method, kMethodCount>& all_methods();
std::string_view method_name(Method m);

struct Score {
  double mse = 0.0;
  double mae = 0.0;
};

// Metrics are taken in the frame of the case's history normalization.
struct CaseRecord {
  std::string domain;
  std::optional<std::string> instruction;
  std::optional<std::size_t> matched_anchor;
  std::size_t oracle_anchor = 0;
  std::array<Score, kMethodCount> scores{};
  // Steered MSE under every anchor.
  std::array<double, series::kTransformCount> anchor_mse{};
};

struct MethodSummary {
  Score mean;
  std::size_t count = 0;
};

struct EvalReport {
  // domain -> method -> means; the "all" domain aggregates every case.
  std::map<std::string, std::array<MethodSummary, kMethodCount>> domains;
  std::vector<CaseRecord> cases;
  nlohmann::json config = nlohmann::json::object();

  // (unimodal - steered) / unimodal on mean MSE for a domain.
  double relative_improvement(const std::string& domain, Method method = Method::kSteered) const;
};

inline constexpr const char* kAllDomains = "all";

// Per-case predictions in the normalized frame of the history.
struct CaseOutputs {
  series::Normalized history;
  series::Series future;
  series::Series unimodal;
  series::Series steered;
  series::Series function;
  std::optional<steering::AnchorMatch> match;
  std::array<series::Series, series::kTransformCount> per_anchor;
};
CaseOutputs run_case(const steering::ModelBundle& bundle, const EvalCase& c);
CaseRecord score_case(const CaseOutputs& out, const EvalCase& c);

EvalReport evaluate(const steering::ModelBundle& bundle, const std::vector<EvalCase>& cases,
                    nlohmann::json config = nlohmann::json::object());

// Machine-readable form; to_json(from_json(j)) reproduces j.
nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
// Aligned text table: one row per domain, MSE/MAE per method.
std::string summarize_text(const EvalReport& report);
// Stable serialization used for report files.
std::string summarize_json(const EvalReport& report);

// Cases with a transformation planted in the real future: the instruction
// is the planted anchor's text.
struct CaseGenConfig {
  datagen::SyntheticSourceConfig sources{.count = 100, .seed = 1001};
  std::size_t count = 300;
  std::uint64_t seed = 13;
  series::WindowSpec windows;
};
std::vector<EvalCase> generate_cases(const CaseGenConfig& cfg);

// Every window of a series as an instruction-free case.
std::vector<EvalCase> cases_from_series(std::span<const double> values, const std::string& domain,
                                        const series::WindowSpec& spec = {});
// Numeric value column of a "timestamp,value" CSV; a non-numeric first line
// is taken as a header.
series::Series load_csv_series(const std::string& path);

}  // namespace chronosteer::eval
