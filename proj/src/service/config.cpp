// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <functional>
#include <map>

#include "chronosteer/errors.hpp"
#include "chronosteer/random.hpp"
#include "chronosteer/service.hpp"

namespace chronosteer::service {

namespace {

using Setter = std::function<void(const json&)>;

// Applies every key of `j` through `fields`; anything else is a usage error.
void apply(const json& j, const std::string& section, const std::map<std::string, Setter>& fields) {
  if (!j.is_object()) throw UsageError("config: '" + section + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = fields.find(key);
    if (it == fields.end())
      throw UsageError("config: unknown key '" + (section.empty() ? key : section + "." + key) + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw UsageError("config: bad value for '" + (section.empty() ? key : section + "." + key) +
                       "': " + e.what());
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

Setter set_range(datagen::Range& r) {
  return [&r](const json& v) {
    if (!v.is_array() || v.size() != 2) throw UsageError("config: a range is [lo, hi]");
    r = {v[0].get<double>(), v[1].get<double>()};
  };
}

json range_json(const datagen::Range& r) { return json::array({r.lo, r.hi}); }

datagen::SourceMix mix_from(const json& j) {
  datagen::SourceMix m;
  apply(j, "sources.mixes[]",
        {{"name", set(m.name)},
         {"level", set_range(m.level)},
         {"slope", set_range(m.slope)},
         {"periods", set(m.periods)},
         {"amplitude", set_range(m.amplitude)},
         {"noise_sigma", set(m.noise_sigma)},
         {"event_rate", set(m.event_rate)},
         {"level_shift", set_range(m.level_shift)},
         {"amplitude_shift", set_range(m.amplitude_shift)},
         {"random_phase", set(m.random_phase)}});
  return m;
}

json mix_json(const datagen::SourceMix& m) {
  return {{"name", m.name},
          {"level", range_json(m.level)},
          {"slope", range_json(m.slope)},
          {"periods", m.periods},
          {"amplitude", range_json(m.amplitude)},
          {"noise_sigma", m.noise_sigma},
          {"event_rate", m.event_rate},
          {"level_shift", range_json(m.level_shift)},
          {"amplitude_shift", range_json(m.amplitude_shift)},
          {"random_phase", m.random_phase}};
}

void read_train(const json& j, const std::string& section, training::TrainConfig& t) {
  apply(j, section,
        {{"learning_rate", set(t.learning_rate)},
         {"alpha", set(t.alpha)},
         {"batch_pt", set(t.batch_pt)},
         {"batch_ft", set(t.batch_ft)},
         {"max_epochs", set(t.max_epochs)},
         {"patience", set(t.patience)},
         {"split", set(t.split)},
         {"contrastive_off", set(t.contrastive_off)},
         {"linear_mapper", set(t.linear_mapper)},
         {"frame", [&t, section](const json& v) {
            const std::string f = v.get<std::string>();
            if (f == "normalized") t.frame = training::LossFrame::kNormalized;
            else if (f == "raw") t.frame = training::LossFrame::kRaw;
            else throw UsageError("config: " + section + ".frame must be 'normalized' or 'raw'");
          }}});
}

json train_json(const training::TrainConfig& t) {
  return {{"learning_rate", t.learning_rate},
          {"alpha", t.alpha},
          {"batch_pt", t.batch_pt},
          {"batch_ft", t.batch_ft},
          {"max_epochs", t.max_epochs},
          {"patience", t.patience},
          {"split", t.split},
          {"contrastive_off", t.contrastive_off},
          {"linear_mapper", t.linear_mapper},
          {"frame", t.frame == training::LossFrame::kRaw ? "raw" : "normalized"}};
}

}  // namespace

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw UsageError("service config: port must lie in [0, 65535]");
  if (max_body_bytes == 0) throw UsageError("service config: max_body_bytes must be positive");
  if (threads == 0) throw UsageError("service config: threads must be positive");
  if (bind.empty()) throw UsageError("service config: empty bind address");
}

std::uint64_t PipelineConfig::derived(SeedUse use) const {
  Rng rng = substream(seed, 0x5eed, static_cast<std::uint64_t>(use));
  return rng();
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c;
  apply(j, "",
        {{"seed", set(c.seed)},
         {"sources", [&c](const json& v) {
            apply(v, "sources",
                  {{"count", set(c.sources.count)},
                   {"length", set(c.sources.length)},
                   {"mixes", [&c](const json& m) {
                      if (!m.is_array()) throw UsageError("config: sources.mixes must be an array");
                      c.sources.mixes.clear();
                      for (const json& e : m) c.sources.mixes.push_back(mix_from(e));
                    }}});
          }},
         {"pt_slices", set(c.pt_slices)},
         {"ft_slices", set(c.ft_slices)},
         {"kmeans_iterations", set(c.kmeans_iterations)},
         {"backbone", [&c](const json& v) {
            auto& b = c.backbone;
            apply(v, "backbone",
                  {{"history", set(b.history)},
                   {"horizon", set(b.horizon)},
                   {"patch", set(b.patch)},
                   {"width", set(b.width)},
                   {"depth", set(b.depth)},
                   {"heads", set(b.heads)},
                   {"ffn", set(b.ffn)},
                   {"head", [&b](const json& h) { b.head = backbone::parse_head(h.get<std::string>()); }}});
          }},
         {"pretrain", [&c](const json& v) {
            auto& p = c.pretrain;
            apply(v, "pretrain",
                  {{"epochs", set(p.epochs)},
                   {"batch", set(p.batch)},
                   {"learning_rate", set(p.learning_rate)},
                   {"validation_fraction", set(p.validation_fraction)}});
          }},
         {"mapper", [&c](const json& v) {
            apply(v, "mapper",
                  {{"variant", [&c](const json& s) {
                      try {
                        c.mapper.variant = steering::parse_variant(s.get<std::string>());
                      } catch (const std::exception& e) {
                        throw UsageError(std::string("config: mapper.variant: ") + e.what());
                      }
                    }},
                   {"hidden", set(c.mapper.hidden)}});
          }},
         {"text_dim", set(c.text_dim)},
         {"embedding_table", [&c](const json& v) {
            if (v.is_null()) c.embedding_table.reset();
            else c.embedding_table = v.get<std::string>();
          }},
         {"stage1", [&c](const json& v) { read_train(v, "stage1", c.stage1); }},
         {"stage2", [&c](const json& v) { read_train(v, "stage2", c.stage2); }},
         {"eval_cases", set(c.eval_cases)},
         {"service", [&c](const json& v) {
            auto& s = c.service;
            apply(v, "service",
                  {{"bind", set(s.bind)},
                   {"port", set(s.port)},
                   {"max_body_bytes", set(s.max_body_bytes)},
                   {"cors_origin", set(s.cors_origin)},
                   {"threads", set(s.threads)}});
          }}});
  c.sources.validate();
  c.backbone.validate();
  c.stage1.validate();
  c.stage2.validate();
  c.service.validate();
  if (c.pt_slices == 0 || c.ft_slices == 0 || c.eval_cases == 0 || c.text_dim == 0)
    throw UsageError("config: slice, case and dimension counts must be positive");
  return c;
}

json PipelineConfig::to_json() const {
  json mixes = json::array();
  for (const auto& m : sources.mixes) mixes.push_back(mix_json(m));
  return {
      {"seed", seed},
      {"sources", {{"count", sources.count}, {"length", sources.length}, {"mixes", mixes}}},
      {"pt_slices", pt_slices},
      {"ft_slices", ft_slices},
      {"kmeans_iterations", kmeans_iterations},
      {"backbone",
       {{"history", backbone.history},
        {"horizon", backbone.horizon},
        {"patch", backbone.patch},
        {"width", backbone.width},
        {"depth", backbone.depth},
        {"heads", backbone.heads},
        {"ffn", backbone.ffn},
        {"head", std::string(backbone::head_name(backbone.head))}}},
      {"pretrain",
       {{"epochs", pretrain.epochs},
        {"batch", pretrain.batch},
        {"learning_rate", pretrain.learning_rate},
        {"validation_fraction", pretrain.validation_fraction}}},
      {"mapper", {{"variant", std::string(steering::variant_name(mapper.variant))},
                  {"hidden", mapper.hidden}}},
      {"text_dim", text_dim},
      {"embedding_table", embedding_table ? json(*embedding_table) : json(nullptr)},
      {"stage1", train_json(stage1)},
      {"stage2", train_json(stage2)},
      {"eval_cases", eval_cases},
      {"service",
       {{"bind", service.bind},
        {"port", service.port},
        {"max_body_bytes", service.max_body_bytes},
        {"cors_origin", service.cors_origin},
        {"threads", service.threads}}},
  };
}

PipelineConfig load_config(const std::optional<std::string>& path) {
  if (!path) return PipelineConfig::from_json(json::object());
  const std::string text = read_file(*path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + *path + ": " + e.what());
  }
  return PipelineConfig::from_json(j);
}

}  // namespace chronosteer::service
