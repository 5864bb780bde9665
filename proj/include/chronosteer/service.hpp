// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronosteer/backbone.hpp"
#include "chronosteer/datagen.hpp"
#include "chronosteer/eval.hpp"
#include "chronosteer/steering.hpp"
#include "chronosteer/training.hpp"

namespace chronosteer::service {

using nlohmann::json;

// ---- checkpoint -----------------------------------------------------------
//
// Layout, all integers little-endian:
//   8 bytes  magic "CSTCKPT\0"
//   u32      format version
//   u32      metadata length, then that many bytes of JSON (sorted keys)
//   u32      array count, then per array:
//            u32 name length, name bytes, u32 rank, u64 dims[rank],
//            f64 values[product(dims)]

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  json metadata = json::object();
  std::vector<std::pair<std::string, num::Tensor>> arrays;

  const num::Tensor& array(std::string_view name) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
// FormatError on bad magic, a different version, or truncation.
Checkpoint decode_checkpoint(std::string_view bytes);

Checkpoint bundle_checkpoint(const steering::ModelBundle& bundle, const json& provenance);
steering::ModelBundle bundle_from_checkpoint(const Checkpoint& ckpt);

void save_bundle(const std::string& path, const steering::ModelBundle& bundle,
                 const json& provenance = json::object());
steering::ModelBundle load_bundle(const std::string& path, json* provenance = nullptr);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

// ---- line-delimited records -------------------------------------------------

json slice_to_json(const series::Slice& s, const std::string& domain);
json triplet_to_json(const datagen::Triplet& t);
json case_to_json(const eval::EvalCase& c);

std::string write_jsonl(const std::vector<json>& records);
std::vector<json> parse_jsonl(std::string_view text, const std::string& source = "input");

std::vector<datagen::TaggedSlice> slices_from_jsonl(const std::vector<json>& records);
std::vector<datagen::Triplet> triplets_from_jsonl(const std::vector<json>& records);
std::vector<eval::EvalCase> cases_from_jsonl(const std::vector<json>& records);
// True when the records look like triplets rather than slices.
bool is_triplet_file(const std::vector<json>& records);

json train_report_json(const training::TrainReport& r);
json discrimination_json(const training::Discrimination& d);

// ---- configuration -------------------------------------------------------------

struct ServiceConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::size_t max_body_bytes = 1 << 20;
  std::string cors_origin = "*";
  std::size_t threads = 4;

  void validate() const;
};

// Everything the CLI subcommands need. Component seeds are derived from the
// master seed so one number pins a whole run.
struct PipelineConfig {
  std::uint64_t seed = 1;
  datagen::SyntheticSourceConfig sources;
  std::size_t pt_slices = 1000;
  std::size_t ft_slices = 1000;
  std::size_t kmeans_iterations = 25;
  backbone::BackboneConfig backbone;
  backbone::PretrainConfig pretrain;
  steering::MapperConfig mapper;
  std::size_t text_dim = 64;
  std::optional<std::string> embedding_table;
  // Desk-scale epoch caps, and a faster stage-1 step to converge within them.
  training::TrainConfig stage1{.learning_rate = 3e-3, .max_epochs = 40};
  training::TrainConfig stage2{.max_epochs = 40};
  std::size_t eval_cases = 300;
  ServiceConfig service;

  enum class SeedUse : std::uint64_t {
    kPtSources = 1,
    kPtSample,
    kPtFactors,
    kFtSources,
    kFtSample,
    kBackbone,
    kPretrain,
    kMapper,
    kTrain,  // stage 1
    kEvalSources,
    kEvalCases,
    kStage2,
  };
  std::uint64_t derived(SeedUse use) const;

  // Applies every key present in `j` over the defaults; unknown keys raise
  // UsageError.
  static PipelineConfig from_json(const json& j);
  json to_json() const;
};

PipelineConfig load_config(const std::optional<std::string>& path);

// ---- logging -------------------------------------------------------------------

// Level from CHRONOSTEER_LOG (trace, debug, info, warn, error, off); info
// when unset. Logs go to stderr.
void init_logging();

// ---- HTTP API -------------------------------------------------------------------

struct Response {
  int status = 200;
  std::string body;
};

// Request handling over one immutable bundle. Thread-safe.
class Api {
 public:
  Api(const steering::ModelBundle& bundle, std::string checkpoint_hash, ServiceConfig config);

  Response handle(std::string_view method, std::string_view path, std::string_view body) const;

  Response anchors() const;
  Response forecast(std::string_view body) const;
  Response oracle(std::string_view body) const;
  Response health() const;

  const ServiceConfig& config() const { return config_; }

 private:
  const steering::ModelBundle& bundle_;
  std::string checkpoint_hash_;
  ServiceConfig config_;
};

// Serializes a response body; doubles keep full precision.
std::string dump(const json& j);

// Blocks serving `api` until stop_server() or SIGINT/SIGTERM. Port 0 picks a
// free port; `on_listening` receives the bound port. Returns false when the
// address cannot be bound.
bool serve(const Api& api, std::function<void(int)> on_listening = {});
void stop_server();

}  // namespace chronosteer::service
