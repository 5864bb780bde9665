// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <cstdio>

#include <spdlog/spdlog.h>

#include "chronosteer/errors.hpp"
#include "chronosteer/hashing.hpp"
#include "chronosteer/json_io.hpp"
#include "chronosteer/service.hpp"

namespace chronosteer::cli {

namespace {

using service::json;
using service::PipelineConfig;
using Seed = PipelineConfig::SeedUse;

PipelineConfig resolve(const Common& common) {
  PipelineConfig cfg = service::load_config(common.config);
  if (common.seed) cfg.seed = *common.seed;
  return cfg;
}

series::WindowSpec window_spec(const PipelineConfig& cfg) {
  series::WindowSpec w;
  w.history = cfg.backbone.history;
  w.horizon = cfg.backbone.horizon;
  w.window = w.history + w.horizon;
  return w;
}

std::vector<datagen::TaggedSlice> source_windows(const PipelineConfig& cfg, Seed use) {
  datagen::SyntheticSourceConfig src = cfg.sources;
  src.seed = cfg.derived(use);
  return datagen::window_sources(datagen::generate_source_series(src), window_spec(cfg));
}

std::vector<series::Slice> normalized(const std::vector<datagen::TaggedSlice>& tagged) {
  std::vector<series::Slice> out;
  out.reserve(tagged.size());
  for (const auto& t : tagged) out.push_back(t.slice.raw ? series::normalize_slice(t.slice) : t.slice);
  return out;
}

std::vector<json> slice_records(const std::vector<datagen::TaggedSlice>& tagged) {
  std::vector<json> out;
  out.reserve(tagged.size());
  for (const auto& t : tagged) out.push_back(service::slice_to_json(t.slice, t.domain));
  return out;
}

std::vector<json> triplet_records(const std::vector<datagen::Triplet>& triplets) {
  std::vector<json> out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) out.push_back(service::triplet_to_json(t));
  return out;
}

void require_out(const Common& common, const char* what) {
  if (common.out.empty()) throw UsageError(std::string(what) + ": --out is required");
}

// Output file plus its SHA-256 for provenance.
std::string write_output(const std::string& path, const std::string& bytes) {
  service::write_file(path, bytes);
  return sha256_hex(bytes);
}

struct Loaded {
  steering::ModelBundle bundle;
  json provenance;
  std::string hash;
};

Loaded load(const std::string& path) {
  if (path.empty()) throw UsageError("--checkpoint is required");
  const std::string bytes = service::read_file(path);
  const service::Checkpoint ckpt = service::decode_checkpoint(bytes);
  return {service::bundle_from_checkpoint(ckpt),
          ckpt.metadata.value("provenance", json::object()), sha256_hex(bytes)};
}

steering::TextEmbedder make_embedder(const PipelineConfig& cfg) {
  if (cfg.embedding_table) return steering::TextEmbedder::load_table(*cfg.embedding_table);
  return steering::TextEmbedder::trigram(cfg.text_dim);
}

steering::MapperConfig mapper_config(const PipelineConfig& cfg, bool linear) {
  steering::MapperConfig mc = cfg.mapper;
  if (linear) mc.variant = steering::MapperVariant::kLinear;
  mc.seed = cfg.derived(Seed::kMapper);
  return mc;
}

struct Data {
  std::vector<json> records;
  std::string hash;
};

Data read_records(const std::string& path) {
  if (path.empty()) throw UsageError("--data is required");
  const std::string text = service::read_file(path);
  return {service::parse_jsonl(text, path), sha256_hex(text)};
}

training::TrainConfig stage_config(training::TrainConfig tc, const TrainOptions& opt,
                                   std::uint64_t seed) {
  tc.seed = seed;
  if (opt.max_epochs) {
    tc.max_epochs = *opt.max_epochs;
    tc.patience = std::min(tc.patience, tc.max_epochs);
  }
  if (opt.contrastive_off) tc.contrastive_off = true;
  if (opt.linear_mapper) tc.linear_mapper = true;
  tc.validate();
  return tc;
}

// The linear-mapper ablation swaps in a fresh linear mapper.
void apply_mapper_ablation(steering::ModelBundle& b, const PipelineConfig& cfg,
                           const training::TrainConfig& tc) {
  if (tc.linear_mapper && b.mapper.config.variant != steering::MapperVariant::kLinear) {
    steering::MapperConfig mc = mapper_config(cfg, true);
    mc.text_dim = b.embedder.dim();
    mc.series_dim = b.backbone.config.width;
    b.mapper = steering::AlignmentMapper::initialize(mc);
  }
}

void write_report(const std::optional<std::string>& path, const json& report) {
  if (path) service::write_file(*path, dump_json(report, 2) + "\n");
}

}  // namespace

void datagen_pt(const Common& common, const DatagenPtOptions& opt) {
  require_out(common, "datagen-pt");
  const PipelineConfig cfg = resolve(common);
  const auto windows = source_windows(cfg, Seed::kPtSources);
  const std::size_t count = opt.count.value_or(cfg.pt_slices);
  spdlog::info("datagen-pt: {} windows, clustering into {}", windows.size(), count);
  const auto sample =
      datagen::cluster_sample(windows, count, cfg.derived(Seed::kPtSample), cfg.kmeans_iterations);
  if (opt.corpus) write_output(*opt.corpus, service::write_jsonl(slice_records(windows)));
  if (opt.checkpoint) {
    const Loaded l = load(*opt.checkpoint);
    const auto pt = datagen::build_pt_dataset(normalized(sample), l.bundle.backbone,
                                              cfg.derived(Seed::kPtFactors));
    write_output(common.out, service::write_jsonl(triplet_records(pt)));
    spdlog::info("datagen-pt: wrote {} PT triplets to {}", pt.size(), common.out);
  } else {
    write_output(common.out, service::write_jsonl(slice_records(sample)));
    spdlog::info("datagen-pt: wrote {} slices to {}", sample.size(), common.out);
  }
}

void pretrain_backbone(const Common& common, const PretrainOptions& opt) {
  require_out(common, "pretrain-backbone");
  const PipelineConfig cfg = resolve(common);
  const Data data = read_records(opt.data);
  const auto slices = normalized(service::slices_from_jsonl(data.records));
  backbone::BackboneConfig bc = cfg.backbone;
  bc.seed = cfg.derived(Seed::kBackbone);
  backbone::PretrainConfig pc = cfg.pretrain;
  pc.seed = cfg.derived(Seed::kPretrain);
  if (opt.epochs) pc.epochs = *opt.epochs;
  backbone::BackboneModel model = backbone::BackboneModel::initialize(bc);
  const backbone::PretrainReport pr = backbone::pretrain(model, slices, pc);
  backbone::freeze(model);
  steering::ModelBundle bundle = steering::ModelBundle::assemble(
      std::move(model), make_embedder(cfg), mapper_config(cfg, cfg.stage1.linear_mapper));
  json prov = {{"seed", cfg.seed},
               {"pretrain", {{"data_sha256", data.hash},
                             {"slices", slices.size()},
                             {"epochs", pc.epochs},
                             {"final_validation", pr.validation_loss.back()}}}};
  service::save_bundle(common.out, bundle, prov);
  spdlog::info("pretrain-backbone: validation MSE {:.6f} (last value {:.6f}), {:.1f}s",
               pr.validation_loss.back(), pr.naive_validation_mse, pr.seconds);
  write_report(opt.report, {{"train_loss", pr.train_loss},
                            {"validation_loss", pr.validation_loss},
                            {"naive_validation_mse", pr.naive_validation_mse},
                            {"seconds", pr.seconds},
                            {"backbone_checksum", bundle.backbone.checksum()}});
}

void train_stage1(const Common& common, const TrainOptions& opt) {
  require_out(common, "train-stage1");
  const PipelineConfig cfg = resolve(common);
  Loaded l = load(opt.checkpoint);
  const Data data = read_records(opt.data);
  std::vector<datagen::Triplet> pt;
  if (service::is_triplet_file(data.records)) {
    pt = service::triplets_from_jsonl(data.records);
  } else {
    pt = datagen::build_pt_dataset(normalized(service::slices_from_jsonl(data.records)),
                                   l.bundle.backbone, cfg.derived(Seed::kPtFactors));
  }
  const training::TrainConfig tc = stage_config(cfg.stage1, opt, cfg.derived(Seed::kTrain));
  apply_mapper_ablation(l.bundle, cfg, tc);
  const training::TrainReport r = training::train_stage1(l.bundle, pt, tc);
  const auto sets = training::group_pt(pt);
  const training::Split split = training::split_indices(sets.size(), tc.split, tc.seed);
  const training::Discrimination d = training::discrimination(l.bundle, sets, split.validation);
  l.provenance["stage1"] = {{"data_sha256", data.hash},
                            {"seed", tc.seed},
                            {"best_epoch", r.best_epoch},
                            {"best_validation", r.best_validation}};
  service::save_bundle(common.out, l.bundle, l.provenance);
  spdlog::info("train-stage1: best validation {:.6f} at epoch {} ({}), discrimination {:.3f} "
               "(worst anchor {:.3f}), {:.1f}s",
               r.best_validation, r.best_epoch, r.stop_reason, d.overall, d.worst, r.seconds);
  json report = service::train_report_json(r);
  report["discrimination"] = service::discrimination_json(d);
  write_report(opt.report, report);
}

void datagen_ft(const Common& common, const DatagenFtOptions& opt) {
  require_out(common, "datagen-ft");
  const PipelineConfig cfg = resolve(common);
  const Loaded l = load(opt.checkpoint);
  const auto windows = source_windows(cfg, Seed::kFtSources);
  const std::size_t count = opt.count.value_or(cfg.ft_slices);
  const auto sample =
      datagen::cluster_sample(windows, count, cfg.derived(Seed::kFtSample), cfg.kmeans_iterations);
  const auto ft = datagen::build_ft_dataset(normalized(sample), l.bundle);
  write_output(common.out, service::write_jsonl(triplet_records(ft)));
  spdlog::info("datagen-ft: wrote {} FT triplets to {}", ft.size(), common.out);
}

void train_stage2(const Common& common, const TrainOptions& opt) {
  require_out(common, "train-stage2");
  const PipelineConfig cfg = resolve(common);
  Loaded l = load(opt.checkpoint);
  const Data data = read_records(opt.data);
  if (!service::is_triplet_file(data.records))
    throw UsageError("train-stage2: " + opt.data + " does not hold FT triplets");
  const auto ft = service::triplets_from_jsonl(data.records);
  const training::TrainConfig tc = stage_config(cfg.stage2, opt, cfg.derived(Seed::kStage2));
  const training::TrainReport r = training::train_stage2(l.bundle, ft, tc);
  l.provenance["stage2"] = {{"data_sha256", data.hash},
                            {"seed", tc.seed},
                            {"best_epoch", r.best_epoch},
                            {"best_validation", r.best_validation}};
  service::save_bundle(common.out, l.bundle, l.provenance);
  spdlog::info("train-stage2: validation MSE {:.6f} -> {:.6f} (best epoch {}, {}), {:.1f}s",
               r.initial_validation, r.best_validation, r.best_epoch, r.stop_reason, r.seconds);
  json report = service::train_report_json(r);
  // The mapper handed in is the stage-1 model, scored on the same split.
  report["stage1_validation"] = r.initial_validation;
  write_report(opt.report, report);
}

void evaluate(const Common& common, const EvalOptions& opt) {
  require_out(common, "eval");
  const PipelineConfig cfg = resolve(common);
  const Loaded l = load(opt.checkpoint);
  std::vector<eval::EvalCase> cases;
  json source;
  if (opt.cases && opt.csv) throw UsageError("eval: give at most one of --cases and --csv");
  if (opt.cases) {
    const Data data = read_records(*opt.cases);
    cases = service::cases_from_jsonl(data.records);
    source = {{"cases_file_sha256", data.hash}};
  } else if (opt.csv) {
    const series::Series values = eval::load_csv_series(*opt.csv);
    cases = eval::cases_from_series(values, opt.domain, window_spec(cfg));
    source = {{"csv_sha256", sha256_hex(service::read_file(*opt.csv))}, {"domain", opt.domain}};
  } else {
    eval::CaseGenConfig g;
    g.sources.count = cfg.sources.count / 2;
    g.sources.length = cfg.sources.length;
    g.sources.mixes = cfg.sources.mixes;
    g.sources.seed = cfg.derived(Seed::kEvalSources);
    g.count = opt.count.value_or(cfg.eval_cases);
    g.seed = cfg.derived(Seed::kEvalCases);
    g.windows = window_spec(cfg);
    cases = eval::generate_cases(g);
    source = {{"generated", {{"count", g.count}, {"sources", g.sources.count}}}};
  }
  json meta = {{"checkpoint_sha256", l.hash}, {"seed", cfg.seed}, {"cases", source}};
  const eval::EvalReport report = eval::evaluate(l.bundle, cases, meta);
  service::write_file(common.out, eval::summarize_json(report));
  const std::string table = eval::summarize_text(report);
  if (opt.table) service::write_file(*opt.table, table);
  else std::fputs(table.c_str(), stdout);
  spdlog::info("eval: {} cases, steered gain {:.2f}%, oracle gain {:.2f}%", cases.size(),
               100.0 * report.relative_improvement(eval::kAllDomains),
               100.0 * report.relative_improvement(eval::kAllDomains, eval::Method::kOracle));
}

void serve(const Common& common, const ServeOptions& opt) {
  PipelineConfig cfg = resolve(common);
  if (opt.port) cfg.service.port = *opt.port;
  if (opt.bind) cfg.service.bind = *opt.bind;
  const Loaded l = load(opt.checkpoint);
  const service::Api api(l.bundle, l.hash, cfg.service);
  if (!service::serve(api))
    throw FormatError("cannot bind " + cfg.service.bind + ":" + std::to_string(cfg.service.port));
}

void inspect(const std::string& checkpoint) {
  const Loaded l = load(checkpoint);
  const service::Checkpoint ckpt = service::decode_checkpoint(service::read_file(checkpoint));
  json arrays = json::object();
  for (const auto& [name, t] : ckpt.arrays) arrays[name] = t.shape();
  const auto& b = l.bundle;
  json out = {{"file_sha256", l.hash},
              {"format_version", service::kCheckpointVersion},
              {"metadata", ckpt.metadata},
              {"arrays", arrays},
              {"parameters", {{"backbone", b.backbone.parameter_count()},
                              {"codebook", b.codebook.parameter_count()},
                              {"mapper", b.mapper.parameter_count()},
                              {"total", b.total_parameters()},
                              {"trainable_fraction",
                               static_cast<double>(b.trainable_parameters()) /
                                   static_cast<double>(b.total_parameters())}}},
              {"checksums", {{"backbone", b.backbone.checksum()},
                             {"codebook", b.codebook.checksum()},
                             {"mapper", b.mapper.checksum()}}}};
  std::fputs((dump_json(out, 2) + "\n").c_str(), stdout);
}

}  // namespace chronosteer::cli
