// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion. The pipeline
// criteria drive the chronosteer CLI end to end for each seed.

#include <sys/resource.h>
#include <sys/wait.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "checks.hpp"
#include "chronosteer/errors.hpp"
#include "chronosteer/random.hpp"
#include "chronosteer/service.hpp"

namespace {

using namespace chronosteer;
using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kGradientSeeds = 100;
constexpr double kGradientSeconds = 60.0;
constexpr std::size_t kTransformSlices = 1000;
constexpr double kTransformTolerance = 1e-9;
constexpr std::size_t kRevertHistories = 1000;
constexpr double kSymmetryTolerance = 1e-12;
constexpr double kDiscriminationThreshold = 0.7;
constexpr double kStage1Seconds = 600.0;
constexpr double kOracleRatio = 0.9;
constexpr double kTrainableShare = 0.10;
constexpr double kPipelineSeconds = 900.0;

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  if (!pass) ++failures;
  fmt::print("{} {:<24} {}\n", pass ? "PASS" : "FAIL", name, detail);
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double child_cpu_seconds() {
  rusage u{};
  getrusage(RUSAGE_CHILDREN, &u);
  return static_cast<double>(u.ru_utime.tv_sec + u.ru_stime.tv_sec) +
         1e-6 * static_cast<double>(u.ru_utime.tv_usec + u.ru_stime.tv_usec);
}

// ---- in-process criteria ------------------------------------------------------

void gradient_criterion() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= kGradientSeeds; ++seed)
    for (const checks::GradientResult& r : checks::gradient_suite(seed)) {
      checked += r.checked;
      if (r.max_rel_error > worst) worst = r.max_rel_error, worst_name = r.name;
    }
  const double secs = seconds_since(t0);
  report(worst < checks::kGradientTolerance && secs < kGradientSeconds, "gradient-suite",
         fmt::format("{} seeds, {} probes, max rel err {:.2e} ({}), {:.1f}s", kGradientSeeds, checked,
                     worst, worst_name, secs));
}

series::Series random_slice(Rng& rng, std::size_t n) {
  series::Series x(n);
  const double amp = uniform(rng, 0.1, 5.0), period = uniform(rng, 4.0, 40.0);
  const double level = uniform(rng, -50.0, 50.0), slope = uniform(rng, -0.2, 0.2);
  for (std::size_t t = 0; t < n; ++t)
    x[t] = level + slope * t + amp * std::sin(6.283185307179586 * t / period) + uniform(rng, -0.5, 0.5);
  return x;
}

void transform_criterion() {
  double worst = 0.0;
  std::size_t fixed_violations = 0;
  for (std::size_t s = 0; s < kTransformSlices; ++s) {
    Rng rng = substream(2024, s);
    const series::Series x = random_slice(rng, 32);
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const std::size_t imin = lo - x.begin(), imax = hi - x.begin();
    for (series::TransformKind kind : series::all_transforms()) {
      const series::FactorRange r = series::factor_range(kind);
      const double f = uniform(rng, r.min_factor, r.max_factor);
      const series::Series ours = series::apply_transform(kind, x, f);
      const auto ref = checks::reference_transform(series::index_of(kind), x, f);
      for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(ours[i] - ref[i]));
      using K = series::TransformKind;
      if ((kind == K::kElevatePeaks || kind == K::kLowerPeaks) && ours[imin] != x[imin]) ++fixed_violations;
      if ((kind == K::kRaiseTroughs || kind == K::kDeepenTroughs) && ours[imax] != x[imax]) ++fixed_violations;
    }
  }
  report(worst <= kTransformTolerance && fixed_violations == 0, "transform-equivalence",
         fmt::format("{} slices x 9 kinds, max abs diff {:.2e}, fixed-point violations {}",
                     kTransformSlices, worst, fixed_violations));
}

void contrastive_criterion() {
  bool ok = true;
  double single = 0.0, ident_err = 0.0, sym = 0.0, perm = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng = substream(seed, 31);
    auto mat = [&](std::size_t r) {
      num::Tensor t({r, 32});
      for (double& v : t.data()) v = uniform(rng, -1.0, 1.0);
      return t;
    };
    single = std::max(single, std::abs(training::contrastive_value(mat(1), mat(1))));
    const num::Tensor row = mat(1);
    num::Tensor same({9, 32});
    for (std::size_t r = 0; r < 9; ++r)
      std::copy(row.data().begin(), row.data().end(), same.data().begin() + r * 32);
    ident_err = std::max(ident_err, std::abs(training::contrastive_value(same, same) - std::log(9.0)));
    const num::Tensor p = mat(9), q = mat(9);
    const double v = training::contrastive_value(p, q);
    sym = std::max(sym, std::abs(training::contrastive_value(q, p) - v));
    std::vector<std::size_t> order(9);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    num::Tensor pp({9, 32}), qq({9, 32});
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t c = 0; c < 32; ++c) pp.at(i, c) = p.at(order[i], c), qq.at(i, c) = q.at(order[i], c);
    perm = std::max(perm, std::abs(training::contrastive_value(pp, qq) - v));
  }
  ok = single == 0.0 && ident_err == 0.0 && sym <= kSymmetryTolerance && perm <= kSymmetryTolerance;
  report(ok, "contrastive-analytics",
         fmt::format("N=1 max |L| {:.1e}, identical-rows |L - ln 9| {:.1e}, symmetry {:.1e}, "
                     "permutation {:.1e}",
                     single, ident_err, sym, perm));
}

void overhead_criterion() {
  const service::PipelineConfig cfg;
  steering::MapperConfig mc = cfg.mapper;
  const steering::ModelBundle b = steering::ModelBundle::assemble(
      backbone::BackboneModel::initialize(cfg.backbone), steering::TextEmbedder::trigram(cfg.text_dim), mc);
  const double share = static_cast<double>(b.trainable_parameters()) / b.total_parameters();
  report(share <= kTrainableShare, "trainable-overhead",
         fmt::format("{} trainable of {} total ({:.2f}%)", b.trainable_parameters(), b.total_parameters(),
                     100.0 * share));
}

// ---- CLI pipeline ---------------------------------------------------------------

struct Run {
  fs::path dir;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failed_step;
  double wall = 0.0;
  double cpu = 0.0;
};

struct Runner {
  std::string cli;
  std::optional<std::string> config;

  bool step(const Run& run, const std::string& args) const {
    std::string cmd = cli + " " + args + " --seed " + std::to_string(run.seed);
    if (config) cmd += " --config " + *config;
    cmd += " >> " + (run.dir / "log.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
  }

  Run pipeline(const fs::path& dir, std::uint64_t seed) const {
    Run r;
    r.dir = dir;
    r.seed = seed;
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto p = [&](const char* name) { return (dir / name).string(); };
    const std::vector<std::pair<std::string, std::string>> steps = {
        {"datagen-pt", "datagen-pt --out " + p("pt.jsonl")},
        {"pretrain-backbone", "pretrain-backbone --data " + p("pt.jsonl") + " --out " + p("bb.ckpt") +
                                  " --report " + p("pretrain.json")},
        {"train-stage1", "train-stage1 --checkpoint " + p("bb.ckpt") + " --data " + p("pt.jsonl") +
                             " --out " + p("s1.ckpt") + " --report " + p("stage1.json")},
        {"datagen-ft", "datagen-ft --checkpoint " + p("s1.ckpt") + " --out " + p("ft.jsonl")},
        {"train-stage2", "train-stage2 --checkpoint " + p("s1.ckpt") + " --data " + p("ft.jsonl") +
                             " --out " + p("s2.ckpt") + " --report " + p("stage2.json")},
        {"eval", "eval --checkpoint " + p("s2.ckpt") + " --out " + p("eval.json") + " --table " +
                     p("eval.txt")},
    };
    const auto t0 = Clock::now();
    const double c0 = child_cpu_seconds();
    for (const auto& [name, args] : steps) {
      fmt::print("  seed {}: {}\n", seed, name);
      std::fflush(stdout);
      if (!step(r, args)) {
        r.failed_step = name;
        return r;
      }
    }
    r.wall = seconds_since(t0);
    r.cpu = child_cpu_seconds() - c0;
    r.ok = true;
    return r;
  }
};

json read_json(const fs::path& p) { return json::parse(service::read_file(p.string())); }

// Both readings of the per-anchor nearest-target test, recomputed from the
// PT slices and the stage-1 checkpoint.
struct DiscriminationCheck {
  std::vector<double> per_anchor;  // fraction of held-out slices, per anchor
  double all_anchors = 0.0;        // fraction of slices where all nine succeed
  double pooled = 0.0;
};

DiscriminationCheck recompute_discrimination(const Run& run, const service::PipelineConfig& cfg) {
  using Seed = service::PipelineConfig::SeedUse;
  const steering::ModelBundle b = service::load_bundle((run.dir / "s1.ckpt").string());
  const auto tagged = service::slices_from_jsonl(
      service::parse_jsonl(service::read_file((run.dir / "pt.jsonl").string())));
  std::vector<series::Slice> slices;
  for (const auto& t : tagged) slices.push_back(t.slice.raw ? series::normalize_slice(t.slice) : t.slice);
  const auto pt = datagen::build_pt_dataset(slices, b.backbone, cfg.derived(Seed::kPtFactors));
  const auto sets = training::group_pt(pt);
  const training::Split split = training::split_indices(sets.size(), cfg.stage1.split, cfg.derived(Seed::kTrain));
  std::vector<series::Series> hist;
  for (std::size_t i : split.validation) hist.push_back(sets[i].history);
  const auto steered = steering::steer_all_anchors(b, hist);
  DiscriminationCheck d;
  d.per_anchor.assign(series::kTransformCount, 0.0);
  std::size_t all_ok = 0, hits = 0;
  for (std::size_t s = 0; s < hist.size(); ++s) {
    const auto& targets = sets[split.validation[s]].targets;
    bool every = true;
    for (std::size_t i = 0; i < series::kTransformCount; ++i) {
      const double own = series::mse(steered[s][i], targets[i]);
      double other = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < series::kTransformCount; ++j)
        if (j != i) other = std::min(other, series::mse(steered[s][i], targets[j]));
      const bool ok = own < other;
      d.per_anchor[i] += ok;
      hits += ok;
      every = every && ok;
    }
    all_ok += every;
  }
  for (double& f : d.per_anchor) f /= static_cast<double>(hist.size());
  d.all_anchors = static_cast<double>(all_ok) / hist.size();
  d.pooled = static_cast<double>(hits) / (hist.size() * series::kTransformCount);
  return d;
}

// Largest count of histories on which the revert path differs from the
// plain backbone, over every checkpoint of the run.
std::size_t revert_mismatches(const Run& run) {
  std::size_t bad = 0;
  for (const char* name : {"bb.ckpt", "s1.ckpt", "s2.ckpt"}) {
    const steering::ModelBundle b = service::load_bundle((run.dir / name).string());
    std::vector<series::Series> raw;
    std::vector<series::Series> norm;
    for (std::size_t i = 0; i < kRevertHistories; ++i) {
      Rng rng = substream(run.seed, 4242, i);
      raw.push_back(random_slice(rng, b.backbone.config.history));
      norm.push_back(series::normalize(raw.back()).values);
    }
    const std::vector<std::optional<std::size_t>> none(norm.size());
    const auto reverted = steering::steer_normalized(b, norm, none);
    const auto plain = backbone::predict(b.backbone, norm);
    for (std::size_t i = 0; i < norm.size(); ++i) {
      const steering::SteerResult r = steering::chronosteer_forward(b, raw[i], std::nullopt);
      if (reverted[i] != plain[i] || r.prediction != r.unimodal) ++bad;
    }
  }
  return bad;
}

std::string per_seed(const std::vector<std::string>& parts) { return fmt::format("{}", fmt::join(parts, "; ")); }

void pipeline_criteria(const Runner& runner, const fs::path& work, const std::vector<std::uint64_t>& seeds) {
  std::vector<Run> runs;
  for (std::uint64_t seed : seeds) runs.push_back(runner.pipeline(work / fmt::format("seed{}", seed), seed));
  const Run repeat = runner.pipeline(work / fmt::format("seed{}_repeat", seeds.front()), seeds.front());

  for (const Run& r : runs)
    if (!r.ok) fmt::print("  seed {} failed at {} (see {})\n", r.seed, r.failed_step, (r.dir / "log.txt").string());
  const bool all_ran = std::all_of(runs.begin(), runs.end(), [](const Run& r) { return r.ok; });

  // Stage-1 discrimination.
  {
    bool pass = all_ran;
    std::vector<std::string> parts;
    for (const Run& r : runs) {
      if (!r.ok) continue;
      service::PipelineConfig cfg = service::load_config(runner.config);
      cfg.seed = r.seed;
      const DiscriminationCheck d = recompute_discrimination(r, cfg);
      const json s1 = read_json(r.dir / "stage1.json");
      const double worst = *std::min_element(d.per_anchor.begin(), d.per_anchor.end());
      const double secs = s1.at("seconds").get<double>();
      pass = pass && worst >= kDiscriminationThreshold && secs < kStage1Seconds;
      std::vector<std::string> fr;
      for (double f : d.per_anchor) fr.push_back(fmt::format("{:.2f}", f));
      parts.push_back(fmt::format("seed {}: worst anchor {:.3f} [{}], all-nine {:.3f}, pooled {:.3f}, {:.0f}s",
                                  r.seed, worst, fmt::join(fr, " "), d.all_anchors, d.pooled, secs));
    }
    report(pass, "stage1-discrimination", per_seed(parts));
  }

  // Oracle steering gain.
  {
    bool pass = all_ran;
    std::vector<std::string> parts;
    for (const Run& r : runs) {
      if (!r.ok) continue;
      const eval::EvalReport e = eval::report_from_json(read_json(r.dir / "eval.json"));
      const auto& row = e.domains.at(eval::kAllDomains);
      const double uni = row[static_cast<std::size_t>(eval::Method::kUnimodal)].mean.mse;
      const double orc = row[static_cast<std::size_t>(eval::Method::kOracle)].mean.mse;
      pass = pass && orc <= kOracleRatio * uni;
      parts.push_back(fmt::format("seed {}: oracle/unimodal {:.3f}", r.seed, orc / uni));
    }
    report(pass, "oracle-gain", per_seed(parts));
  }

  // Stage-2 improvement over the stage-1 model on the same FT validation set.
  {
    bool pass = all_ran;
    std::vector<std::string> parts;
    for (const Run& r : runs) {
      if (!r.ok) continue;
      const json s2 = read_json(r.dir / "stage2.json");
      const double before = s2.at("stage1_validation").get<double>();
      const double after = s2.at("best_validation").get<double>();
      pass = pass && after <= before;
      parts.push_back(fmt::format("seed {}: {:.6f} -> {:.6f}", r.seed, before, after));
    }
    report(pass, "stage2-improvement", per_seed(parts));
  }

  // Frozen backbone.
  {
    bool pass = all_ran;
    std::vector<std::string> parts;
    for (const Run& r : runs) {
      if (!r.ok) continue;
      std::vector<std::string> sums;
      for (const char* name : {"bb.ckpt", "s1.ckpt", "s2.ckpt"})
        sums.push_back(service::load_bundle((r.dir / name).string()).backbone.checksum());
      for (const char* rep : {"stage1.json", "stage2.json"}) {
        const json j = read_json(r.dir / rep);
        sums.push_back(j.at("backbone_checksum_before").get<std::string>());
        sums.push_back(j.at("backbone_checksum_after").get<std::string>());
      }
      const bool same = std::all_of(sums.begin(), sums.end(), [&](const std::string& s) { return s == sums[0]; });
      pass = pass && same;
      parts.push_back(fmt::format("seed {}: {}", r.seed, same ? "unchanged " + sums[0].substr(0, 12) : "CHANGED"));
    }
    report(pass, "frozen-backbone", per_seed(parts));
  }

  // Revert exactness before and after training.
  {
    bool pass = all_ran;
    std::vector<std::string> parts;
    for (const Run& r : runs) {
      if (!r.ok) continue;
      const std::size_t bad = revert_mismatches(r);
      pass = pass && bad == 0;
      parts.push_back(fmt::format("seed {}: {} mismatches", r.seed, bad));
    }
    report(pass, "revert-exactness",
           fmt::format("{} histories x 3 checkpoints; {}", kRevertHistories, per_seed(parts)));
  }

  // Determinism and runtime.
  {
    const Run& first = runs.front();
    bool pass = first.ok && repeat.ok;
    std::string detail = "pipeline did not complete";
    if (pass) {
      const bool same = service::read_file((first.dir / "eval.json").string()) ==
                        service::read_file((repeat.dir / "eval.json").string());
      pass = same && first.cpu < kPipelineSeconds;
      detail = fmt::format("seed {} eval reports {}, {:.0f} CPU-s ({:.0f}s wall)", first.seed,
                           same ? "byte-identical" : "DIFFER", first.cpu, first.wall);
    }
    report(pass, "pipeline-determinism", detail);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ChronoSteer acceptance runner"};
  std::string cli = CHRONOSTEER_ACCEPTANCE_CLI;
  std::string work = (fs::temp_directory_path() / "chronosteer_acceptance").string();
  std::optional<std::string> config;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  bool fast = false;
  app.add_option("--cli", cli, "chronosteer binary");
  app.add_option("--work", work, "scratch directory for pipeline runs");
  app.add_option("--config", config, "pipeline config passed to every CLI step");
  app.add_option("--seeds", seeds, "pipeline seeds; the first is run twice");
  app.add_flag("--fast", fast, "skip the CLI pipeline criteria");
  CLI11_PARSE(app, argc, argv);
  if (seeds.empty()) {
    fmt::print(stderr, "--seeds needs at least one seed\n");
    return 2;
  }

  try {
    gradient_criterion();
    transform_criterion();
    contrastive_criterion();
    overhead_criterion();
    if (!fast) pipeline_criteria({cli, config}, work, seeds);
  } catch (const std::exception& e) {
    fmt::print(stderr, "acceptance aborted: {}\n", e.what());
    return 2;
  }
  fmt::print("{} criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
