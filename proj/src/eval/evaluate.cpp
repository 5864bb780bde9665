// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <limits>

#include "chronosteer/errors.hpp"
#include "chronosteer/eval.hpp"

namespace chronosteer::eval {

const std::array<Method, kMethodCount>& all_methods() {
  static const std::array<Method, kMethodCount> kAll{Method::kUnimodal, Method::kSteered,
                                                     Method::kFunction, Method::kOracle};
  return kAll;
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kUnimodal: return "unimodal";
    case Method::kSteered: return "steered";
    case Method::kFunction: return "function";
    case Method::kOracle: return "oracle";
  }
  return "?";
}

double EvalReport::relative_improvement(const std::string& domain, Method method) const {
  const auto it = domains.find(domain);
  if (it == domains.end()) throw LookupError("no domain '" + domain + "' in report");
  const double base = it->second[static_cast<std::size_t>(Method::kUnimodal)].mean.mse;
  const double other = it->second[static_cast<std::size_t>(method)].mean.mse;
  return base > 0.0 ? (base - other) / base : 0.0;
}

namespace {

std::vector<CaseOutputs> run_cases(const steering::ModelBundle& bundle,
                                   const std::vector<EvalCase>& cases) {
  const auto& cfg = bundle.backbone.config;
  std::vector<CaseOutputs> outs(cases.size());
  std::vector<series::Series> histories;
  std::vector<std::optional<std::size_t>> anchors;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const EvalCase& c = cases[i];
    if (c.slice.history.size() != cfg.history || c.slice.future.size() != cfg.horizon)
      throw UsageError("eval case " + std::to_string(i) + ": expected " +
                       std::to_string(cfg.history) + " history and " +
                       std::to_string(cfg.horizon) + " future values");
    if (c.instruction && c.instruction->empty())
      throw UsageError("eval case " + std::to_string(i) + ": empty instruction");
    CaseOutputs& o = outs[i];
    o.history = series::normalize(c.slice.history);
    o.future = series::normalize_with(c.slice.future, o.history.record);
    if (c.instruction) o.match = bundle.codebook.match(bundle.embedder.embed(*c.instruction));
    histories.push_back(o.history.values);
    anchors.push_back(o.match ? std::optional<std::size_t>(o.match->index) : std::nullopt);
  }
  const std::vector<series::Series> unimodal = backbone::predict(bundle.backbone, histories);
  const std::vector<series::Series> steered = steering::steer_normalized(bundle, histories, anchors);
  const auto per_anchor = steering::steer_all_anchors(bundle, histories);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CaseOutputs& o = outs[i];
    o.unimodal = unimodal[i];
    o.steered = steered[i];
    o.per_anchor = per_anchor[i];
    if (o.match) {
      const series::TransformKind kind = series::transform_from_index(o.match->index);
      o.function = series::apply_transform(kind, o.unimodal, series::factor_range(kind).midpoint());
    } else {
      o.function = o.unimodal;
    }
  }
  return outs;
}

Score score(std::span<const double> pred, std::span<const double> truth) {
  return {series::mse(pred, truth), series::mae(pred, truth)};
}

}  // namespace

CaseOutputs run_case(const steering::ModelBundle& bundle, const EvalCase& c) {
  return run_cases(bundle, {c}).front();
}

CaseRecord score_case(const CaseOutputs& o, const EvalCase& c) {
  CaseRecord r;
  r.domain = c.domain;
  r.instruction = c.instruction;
  if (o.match) r.matched_anchor = o.match->index;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < series::kTransformCount; ++a) {
    r.anchor_mse[a] = series::mse(o.per_anchor[a], o.future);
    if (r.anchor_mse[a] < best) {
      best = r.anchor_mse[a];
      r.oracle_anchor = a;
    }
  }
  r.scores[static_cast<std::size_t>(Method::kUnimodal)] = score(o.unimodal, o.future);
  r.scores[static_cast<std::size_t>(Method::kSteered)] = score(o.steered, o.future);
  r.scores[static_cast<std::size_t>(Method::kFunction)] = score(o.function, o.future);
  r.scores[static_cast<std::size_t>(Method::kOracle)] = score(o.per_anchor[r.oracle_anchor], o.future);
  return r;
}

EvalReport evaluate(const steering::ModelBundle& bundle, const std::vector<EvalCase>& cases,
                    nlohmann::json config) {
  if (cases.empty()) throw UsageError("evaluate: no cases");
  EvalReport report;
  report.config = std::move(config);
  const std::vector<CaseOutputs> outs = run_cases(bundle, cases);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CaseRecord r = score_case(outs[i], cases[i]);
    for (const std::string& dom : {std::string(kAllDomains), r.domain}) {
      auto& row = report.domains[dom];
      for (std::size_t m = 0; m < kMethodCount; ++m) {
        row[m].mean.mse += r.scores[m].mse;
        row[m].mean.mae += r.scores[m].mae;
        ++row[m].count;
      }
      if (dom == r.domain) break;  // a domain literally named "all" is counted once
    }
    report.cases.push_back(std::move(r));
  }
  for (auto& [dom, row] : report.domains)
    for (MethodSummary& s : row) {
      s.mean.mse /= static_cast<double>(s.count);
      s.mean.mae /= static_cast<double>(s.count);
    }
  return report;
}

}  // namespace chronosteer::eval
