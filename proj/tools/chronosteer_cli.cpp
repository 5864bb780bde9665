// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <exception>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "chronosteer/errors.hpp"
#include "chronosteer/service.hpp"
#include "commands.hpp"

namespace {

constexpr int kUsageExit = 2;

void add_common(CLI::App* app, chronosteer::cli::Common& c, bool needs_out) {
  app->add_option("--config", c.config, "JSON pipeline config (defaults apply to missing keys)");
  app->add_option("--seed", c.seed, "master seed; overrides the config");
  auto* out = app->add_option("--out", c.out, "output path");
  if (needs_out) out->required();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace chronosteer;
  CLI::App app{"chronosteer: instruction-steered forecasting over a frozen patch transformer"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  cli::Common common;
  cli::DatagenPtOptions pt_opt;
  cli::PretrainOptions pre_opt;
  cli::TrainOptions s1_opt, s2_opt;
  cli::DatagenFtOptions ft_opt;
  cli::EvalOptions eval_opt;
  cli::ServeOptions serve_opt;
  std::string inspect_path;

  auto* dpt = app.add_subcommand("datagen-pt", "sample PT slices from synthetic sources");
  add_common(dpt, common, true);
  dpt->add_option("--corpus", pt_opt.corpus, "also write every source window here");
  dpt->add_option("--count", pt_opt.count, "number of clusters / sampled slices");
  dpt->add_option("--checkpoint", pt_opt.checkpoint, "write PT triplets using this backbone");

  auto* pre = app.add_subcommand("pretrain-backbone", "train and freeze the backbone");
  add_common(pre, common, true);
  pre->add_option("--data", pre_opt.data, "slice file (JSONL)")->required();
  pre->add_option("--epochs", pre_opt.epochs, "pretraining epochs");
  pre->add_option("--report", pre_opt.report, "write a JSON training report");

  auto add_train = [&](CLI::App* sub, cli::TrainOptions& o, const char* data_help) {
    add_common(sub, common, true);
    sub->add_option("--checkpoint", o.checkpoint, "input checkpoint")->required();
    sub->add_option("--data", o.data, data_help)->required();
    sub->add_option("--max-epochs", o.max_epochs, "epoch cap");
    sub->add_option("--report", o.report, "write a JSON training report");
    sub->add_flag("--contrastive-off", o.contrastive_off, "drop the contrastive term");
    sub->add_flag("--linear-mapper", o.linear_mapper, "use a single linear mapper layer");
  };
  auto* s1 = app.add_subcommand("train-stage1", "contrastive pretraining of the mapper");
  add_train(s1, s1_opt, "PT slices or PT triplets (JSONL)");

  auto* dft = app.add_subcommand("datagen-ft", "pseudo-labelled FT triplets from held-out sources");
  add_common(dft, common, true);
  dft->add_option("--checkpoint", ft_opt.checkpoint, "stage-1 checkpoint")->required();
  dft->add_option("--count", ft_opt.count, "number of clusters / sampled slices");

  auto* s2 = app.add_subcommand("train-stage2", "fine-tune the mapper on FT triplets");
  add_train(s2, s2_opt, "FT triplets (JSONL)");

  auto* ev = app.add_subcommand("eval", "compare unimodal, steered, function and oracle forecasts");
  add_common(ev, common, true);
  ev->add_option("--checkpoint", eval_opt.checkpoint, "checkpoint to evaluate")->required();
  ev->add_option("--cases", eval_opt.cases, "case file (JSONL)");
  ev->add_option("--csv", eval_opt.csv, "timestamp,value CSV; every window becomes a case");
  ev->add_option("--domain", eval_opt.domain, "domain tag for --csv cases");
  ev->add_option("--table", eval_opt.table, "write the text table here instead of stdout");
  ev->add_option("--count", eval_opt.count, "generated case count");

  auto* srv = app.add_subcommand("serve", "HTTP API over one checkpoint");
  add_common(srv, common, false);
  srv->add_option("--checkpoint", serve_opt.checkpoint, "checkpoint to serve")->required();
  srv->add_option("--port", serve_opt.port, "port (0 picks a free one)");
  srv->add_option("--bind", serve_opt.bind, "bind address");

  auto* ins = app.add_subcommand("inspect", "print checkpoint metadata");
  ins->add_option("checkpoint", inspect_path, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    service::init_logging();
    if (*dpt) cli::datagen_pt(common, pt_opt);
    else if (*pre) cli::pretrain_backbone(common, pre_opt);
    else if (*s1) cli::train_stage1(common, s1_opt);
    else if (*dft) cli::datagen_ft(common, ft_opt);
    else if (*s2) cli::train_stage2(common, s2_opt);
    else if (*ev) cli::evaluate(common, eval_opt);
    else if (*srv) cli::serve(common, serve_opt);
    else if (*ins) cli::inspect(inspect_path);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
