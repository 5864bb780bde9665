// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace chronosteer::cli {

// Options every subcommand accepts.
struct Common {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct DatagenPtOptions {
  std::optional<std::string> corpus;
  std::optional<std::size_t> count;
  // With a checkpoint the output holds PT triplets instead of slices.
  std::optional<std::string> checkpoint;
};

struct PretrainOptions {
  std::string data;
  std::optional<std::size_t> epochs;
  std::optional<std::string> report;
};

struct TrainOptions {
  std::string checkpoint;
  std::string data;
  std::optional<std::size_t> max_epochs;
  std::optional<std::string> report;
  bool contrastive_off = false;
  bool linear_mapper = false;
};

struct DatagenFtOptions {
  std::string checkpoint;
  std::optional<std::size_t> count;
};

struct EvalOptions {
  std::string checkpoint;
  std::optional<std::string> cases;
  std::optional<std::string> csv;
  std::string domain = "csv";
  std::optional<std::string> table;
  std::optional<std::size_t> count;
};

struct ServeOptions {
  std::string checkpoint;
  std::optional<int> port;
  std::optional<std::string> bind;
};

void datagen_pt(const Common& common, const DatagenPtOptions& opt);
void pretrain_backbone(const Common& common, const PretrainOptions& opt);
void train_stage1(const Common& common, const TrainOptions& opt);
void datagen_ft(const Common& common, const DatagenFtOptions& opt);
void train_stage2(const Common& common, const TrainOptions& opt);
void evaluate(const Common& common, const EvalOptions& opt);
void serve(const Common& common, const ServeOptions& opt);
void inspect(const std::string& checkpoint);

}  // namespace chronosteer::cli
