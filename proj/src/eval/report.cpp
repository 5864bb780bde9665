// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <fmt/format.h>

#include "chronosteer/errors.hpp"
#include "chronosteer/eval.hpp"
#include "chronosteer/json_io.hpp"

namespace chronosteer::eval {

using nlohmann::json;

json to_json(const EvalReport& report) {
  json j;
  j["config"] = report.config;
  json domains = json::object();
  json improvement = json::object();
  for (const auto& [dom, row] : report.domains) {
    json d = json::object();
    for (Method m : all_methods()) {
      const MethodSummary& s = row[static_cast<std::size_t>(m)];
      d[std::string(method_name(m))] = {{"mse", s.mean.mse}, {"mae", s.mean.mae}, {"count", s.count}};
    }
    domains[dom] = std::move(d);
    improvement[dom] = report.relative_improvement(dom);
  }
  j["domains"] = std::move(domains);
  j["relative_improvement"] = std::move(improvement);
  json cases = json::array();
  for (const CaseRecord& r : report.cases) {
    json c;
    c["domain"] = r.domain;
    c["instruction"] = r.instruction ? json(*r.instruction) : json(nullptr);
    c["matched_anchor"] = r.matched_anchor ? json(*r.matched_anchor) : json(nullptr);
    c["oracle_anchor"] = r.oracle_anchor;
    for (Method m : all_methods()) {
      const Score& s = r.scores[static_cast<std::size_t>(m)];
      c["scores"][std::string(method_name(m))] = {{"mse", s.mse}, {"mae", s.mae}};
    }
    c["anchor_mse"] = r.anchor_mse;
    cases.push_back(std::move(c));
  }
  j["cases"] = std::move(cases);
  return j;
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.config = j.at("config");
    for (const auto& [dom, d] : j.at("domains").items()) {
      auto& row = r.domains[dom];
      for (Method m : all_methods()) {
        const json& s = d.at(std::string(method_name(m)));
        row[static_cast<std::size_t>(m)] = {{s.at("mse").get<double>(), s.at("mae").get<double>()},
                                            s.at("count").get<std::size_t>()};
      }
    }
    for (const json& c : j.at("cases")) {
      CaseRecord rec;
      rec.domain = c.at("domain").get<std::string>();
      if (!c.at("instruction").is_null()) rec.instruction = c.at("instruction").get<std::string>();
      if (!c.at("matched_anchor").is_null())
        rec.matched_anchor = c.at("matched_anchor").get<std::size_t>();
      rec.oracle_anchor = c.at("oracle_anchor").get<std::size_t>();
      for (Method m : all_methods()) {
        const json& s = c.at("scores").at(std::string(method_name(m)));
        rec.scores[static_cast<std::size_t>(m)] = {s.at("mse").get<double>(), s.at("mae").get<double>()};
      }
      rec.anchor_mse = c.at("anchor_mse").get<std::array<double, series::kTransformCount>>();
      r.cases.push_back(std::move(rec));
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("eval report: ") + e.what());
  }
}

std::string summarize_json(const EvalReport& report) { return dump_json(to_json(report), 2) + "\n"; }

std::string summarize_text(const EvalReport& report) {
  std::string out = fmt::format("{:<12} {:>5}", "domain", "n");
  for (Method m : all_methods())
    out += fmt::format("  {:>10} {:>10}", fmt::format("{}.mse", method_name(m)),
                       fmt::format("{}.mae", method_name(m)));
  out += fmt::format("  {:>9}\n", "gain%");
  auto row = [&](const std::string& dom) {
    const auto& r = report.domains.at(dom);
    std::string line = fmt::format("{:<12} {:>5}", dom, r[0].count);
    for (const MethodSummary& s : r) line += fmt::format("  {:>10.6f} {:>10.6f}", s.mean.mse, s.mean.mae);
    line += fmt::format("  {:>9.2f}\n", 100.0 * report.relative_improvement(dom));
    return line;
  };
  for (const auto& [dom, r] : report.domains)
    if (dom != kAllDomains) out += row(dom);
  if (report.domains.count(kAllDomains)) out += row(kAllDomains);
  return out;
}

}  // namespace chronosteer::eval
