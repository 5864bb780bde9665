// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "chronosteer/errors.hpp"
#include "chronosteer/eval.hpp"

namespace chronosteer::eval {
namespace {

steering::ModelBundle tiny_bundle() {
  backbone::BackboneConfig c;
  c.history = 32;
  c.horizon = 8;
  c.patch = 8;
  c.width = 16;
  c.heads = 2;
  c.ffn = 16;
  return steering::ModelBundle::assemble(backbone::BackboneModel::initialize(c),
                                         steering::TextEmbedder::trigram(16), {});
}

CaseGenConfig small_cases() {
  CaseGenConfig g;
  g.sources.count = 12;
  g.sources.length = 200;
  g.count = 40;
  g.windows = {.window = 40, .stride = 8, .history = 32, .horizon = 8};
  return g;
}

std::size_t at(Method m) { return static_cast<std::size_t>(m); }

class EvalFixture : public ::testing::Test {
 protected:
  steering::ModelBundle bundle = tiny_bundle();
  std::vector<EvalCase> cases = generate_cases(small_cases());
};

TEST_F(EvalFixture, GeneratedCasesAreDeterministicAndInstructed) {
  ASSERT_EQ(cases.size(), 40u);
  const auto again = generate_cases(small_cases());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    EXPECT_EQ(cases[i].slice.history, again[i].slice.history);
    EXPECT_EQ(cases[i].slice.future, again[i].slice.future);
    ASSERT_TRUE(cases[i].instruction.has_value());
    EXPECT_EQ(cases[i].instruction, again[i].instruction);
    EXPECT_EQ(cases[i].slice.history.size(), 32u);
    EXPECT_EQ(cases[i].slice.future.size(), 8u);
  }
}

TEST_F(EvalFixture, MethodPropertiesHold) {
  const EvalReport r = evaluate(bundle, cases);
  for (const CaseRecord& c : r.cases) {
    const double oracle = c.scores[at(Method::kOracle)].mse;
    for (double m : c.anchor_mse) EXPECT_LE(oracle, m);
    EXPECT_EQ(oracle, c.anchor_mse[c.oracle_anchor]);
    ASSERT_TRUE(c.matched_anchor.has_value());
    EXPECT_EQ(c.scores[at(Method::kSteered)].mse, c.anchor_mse[*c.matched_anchor]);
    EXPECT_LE(oracle, c.scores[at(Method::kSteered)].mse);
  }
}

TEST_F(EvalFixture, KeepUnchangedFunctionEqualsUnimodal) {
  EvalCase c = cases.front();
  c.instruction = "Keep Unchanged";
  const CaseOutputs o = run_case(bundle, c);
  EXPECT_EQ(o.function, o.unimodal);
  c.instruction.reset();
  const CaseOutputs plain = run_case(bundle, c);
  EXPECT_EQ(plain.function, plain.unimodal);
  EXPECT_EQ(plain.steered, plain.unimodal);
}

TEST_F(EvalFixture, DomainMeansMatchCaseRecords) {
  const EvalReport r = evaluate(bundle, cases);
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const CaseRecord& c : r.cases) {
    sums[c.domain].first += c.scores[at(Method::kSteered)].mse;
    ++sums[c.domain].second;
    sums["all"].first += c.scores[at(Method::kSteered)].mse;
    ++sums["all"].second;
  }
  ASSERT_EQ(r.domains.size(), sums.size());
  for (const auto& [dom, s] : sums) {
    const MethodSummary& m = r.domains.at(dom)[at(Method::kSteered)];
    EXPECT_EQ(m.count, s.second);
    EXPECT_NEAR(m.mean.mse, s.first / s.second, 1e-12);
  }
  EXPECT_THROW(r.relative_improvement("nowhere"), LookupError);
  EXPECT_EQ(r.relative_improvement("all", Method::kUnimodal), 0.0);
}

TEST_F(EvalFixture, ReportJsonRoundTripsAndIsByteStable) {
  const EvalReport r = evaluate(bundle, cases, {{"seed", 1}});
  const nlohmann::json j = to_json(r);
  EXPECT_EQ(to_json(report_from_json(j)), j);
  EXPECT_EQ(summarize_json(r), summarize_json(evaluate(bundle, cases, {{"seed", 1}})));
  EXPECT_EQ(summarize_json(report_from_json(j)), summarize_json(r));
  const std::string text = summarize_text(r);
  EXPECT_NE(text.find("steered"), std::string::npos);
  EXPECT_NE(text.find("all"), std::string::npos);
}

TEST_F(EvalFixture, BadCasesAreRejected) {
  EXPECT_THROW(evaluate(bundle, {}), UsageError);
  EvalCase c = cases.front();
  c.slice.history.pop_back();
  EXPECT_THROW(evaluate(bundle, {c}), UsageError);
  c = cases.front();
  c.instruction = "";
  EXPECT_THROW(evaluate(bundle, {c}), UsageError);
}

TEST(EvalCsv, LoadsValueColumnWithOptionalHeader) {
  const auto path = std::filesystem::temp_directory_path() / "chronosteer_eval_test.csv";
  {
    std::ofstream out(path);
    out << "timestamp,value\n";
    for (int i = 0; i < 50; ++i) out << "t" << i << "," << i * 0.5 << "\n";
  }
  const series::Series s = load_csv_series(path.string());
  ASSERT_EQ(s.size(), 50u);
  EXPECT_EQ(s[3], 1.5);
  const auto cs = cases_from_series(s, "csv", {.window = 40, .stride = 4, .history = 32, .horizon = 8});
  EXPECT_EQ(cs.size(), (50u - 40u) / 4u + 1u);
  EXPECT_FALSE(cs.front().instruction.has_value());
  {
    std::ofstream out(path);
    out << "a,1\nb,oops\n";
  }
  EXPECT_THROW(load_csv_series(path.string()), FormatError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace chronosteer::eval
