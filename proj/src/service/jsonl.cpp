// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include "chronosteer/errors.hpp"
#include "chronosteer/json_io.hpp"
#include "chronosteer/service.hpp"

namespace chronosteer::service {

namespace {

json norm_json(const std::optional<series::NormRecord>& n) {
  if (!n) return nullptr;
  return {{"min", n->min}, {"max", n->max}};
}

std::optional<series::NormRecord> norm_from(const json& r) {
  const auto it = r.find("norm");
  if (it == r.end() || it->is_null()) return std::nullopt;
  return series::NormRecord{it->at("min").get<double>(), it->at("max").get<double>()};
}

series::Series numbers(const json& r, const char* key) {
  const json& a = r.at(key);
  if (!a.is_array()) throw FormatError(std::string("'") + key + "' must be an array");
  series::Series out;
  out.reserve(a.size());
  for (const json& v : a) {
    if (!v.is_number()) throw FormatError(std::string("'") + key + "' holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

template <typename F>
auto each(const std::vector<json>& records, const char* what, F&& f) {
  std::vector<decltype(f(records.front()))> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      out.push_back(f(records[i]));
    } catch (const json::exception& e) {
      throw FormatError(std::string(what) + " record " + std::to_string(i + 1) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(std::string(what) + " record " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

json slice_to_json(const series::Slice& s, const std::string& domain) {
  return {{"history", s.history}, {"future", s.future}, {"raw", s.raw},
          {"norm", norm_json(s.norm)}, {"domain", domain}};
}

json triplet_to_json(const datagen::Triplet& t) {
  return {{"history", t.history}, {"anchor_id", t.anchor_id},
          {"anchor_text", std::string(series::anchor_text(series::transform_from_index(t.anchor_id)))},
          {"target", t.target}, {"stage", std::string(datagen::stage_name(t.stage))},
          {"norm", norm_json(t.norm)}};
}

json case_to_json(const eval::EvalCase& c) {
  return {{"history", c.slice.history}, {"future", c.slice.future},
          {"instruction", c.instruction ? json(*c.instruction) : json(nullptr)},
          {"domain", c.domain}};
}

std::string write_jsonl(const std::vector<json>& records) {
  std::string out;
  for (const json& r : records) {
    out += dump_json(r);
    out += '\n';
  }
  return out;
}

std::vector<json> parse_jsonl(std::string_view text, const std::string& source) {
  std::vector<json> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t end = text.find('\n');
    std::string_view line = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw FormatError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!out.back().is_object())
      throw FormatError(source + ":" + std::to_string(line_no) + ": expected an object");
  }
  return out;
}

std::vector<datagen::TaggedSlice> slices_from_jsonl(const std::vector<json>& records) {
  return each(records, "slice", [](const json& r) {
    datagen::TaggedSlice t;
    t.slice.history = numbers(r, "history");
    t.slice.future = numbers(r, "future");
    t.slice.raw = r.value("raw", true);
    t.slice.norm = norm_from(r);
    t.domain = r.value("domain", std::string("unknown"));
    return t;
  });
}

std::vector<datagen::Triplet> triplets_from_jsonl(const std::vector<json>& records) {
  return each(records, "triplet", [](const json& r) {
    datagen::Triplet t;
    t.history = numbers(r, "history");
    t.anchor_id = r.at("anchor_id").get<std::size_t>();
    if (t.anchor_id >= series::kTransformCount) throw FormatError("anchor_id out of range");
    t.target = numbers(r, "target");
    t.stage = datagen::parse_stage(r.at("stage").get<std::string>());
    t.norm = norm_from(r);
    return t;
  });
}

std::vector<eval::EvalCase> cases_from_jsonl(const std::vector<json>& records) {
  return each(records, "case", [](const json& r) {
    eval::EvalCase c;
    c.slice.history = numbers(r, "history");
    c.slice.future = numbers(r, "future");
    const auto it = r.find("instruction");
    if (it != r.end() && !it->is_null()) {
      c.instruction = it->get<std::string>();
      if (c.instruction->empty()) throw FormatError("empty instruction");
    }
    c.domain = r.at("domain").get<std::string>();
    return c;
  });
}

bool is_triplet_file(const std::vector<json>& records) {
  return !records.empty() && records.front().contains("anchor_id") &&
         records.front().contains("target");
}

json train_report_json(const training::TrainReport& r) {
  return {{"stage", r.stage},
          {"train_loss", r.train_loss},
          {"validation_loss", r.validation_loss},
          {"initial_validation", r.initial_validation},
          {"best_epoch", r.best_epoch},
          {"best_validation", r.best_validation},
          {"stop_reason", r.stop_reason},
          {"mapper_checksum", r.mapper_checksum},
          {"backbone_checksum_before", r.backbone_checksum_before},
          {"backbone_checksum_after", r.backbone_checksum_after},
          {"train_count", r.train_count},
          {"validation_count", r.validation_count},
          {"seconds", r.seconds}};
}

json discrimination_json(const training::Discrimination& d) {
  return {{"per_anchor", d.per_anchor}, {"overall", d.overall}, {"worst", d.worst}};
}

}  // namespace chronosteer::service
