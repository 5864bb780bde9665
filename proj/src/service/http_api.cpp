// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <chrono>
#include <csignal>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "chronosteer/errors.hpp"
#include "chronosteer/json_io.hpp"
#include "chronosteer/service.hpp"

namespace chronosteer::service {

namespace {

Response error(int status, const std::string& message) {
  return {status, dump({{"error", message}})};
}

// 400-class problem with the request content.
class BadRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json parse_body(std::string_view body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BadRequest(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw BadRequest("request body must be a JSON object");
  return j;
}

series::Series number_array(const json& j, const char* key, std::size_t expected) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw BadRequest(std::string("missing '") + key + "'");
  if (!it->is_array()) throw BadRequest(std::string("'") + key + "' must be an array of numbers");
  series::Series out;
  out.reserve(it->size());
  for (const json& v : *it) {
    if (!v.is_number()) throw BadRequest(std::string("'") + key + "' must be an array of numbers");
    out.push_back(v.get<double>());
  }
  if (out.size() != expected)
    throw BadRequest(std::string("'") + key + "' has " + std::to_string(out.size()) +
                     " values, expected " + std::to_string(expected));
  return out;
}

bool present(const json& j, const char* key) {
  const auto it = j.find(key);
  return it != j.end() && !it->is_null();
}

json anchor_json(const steering::ModelBundle& b, std::size_t index) {
  return {{"index", index}, {"text", b.codebook.anchor(index).text}};
}

}  // namespace

std::string dump(const json& j) { return dump_json(j); }

Api::Api(const steering::ModelBundle& bundle, std::string checkpoint_hash, ServiceConfig config)
    : bundle_(bundle), checkpoint_hash_(std::move(checkpoint_hash)), config_(std::move(config)) {
  config_.validate();
}

Response Api::handle(std::string_view method, std::string_view path, std::string_view body) const {
  if (body.size() > config_.max_body_bytes)
    return error(413, "request body exceeds " + std::to_string(config_.max_body_bytes) + " bytes");
  struct Route {
    std::string_view method, path;
    Response (Api::*get)() const;
    Response (Api::*post)(std::string_view) const;
  };
  static constexpr Route kRoutes[] = {
      {"GET", "/anchors", &Api::anchors, nullptr},
      {"GET", "/health", &Api::health, nullptr},
      {"POST", "/forecast", nullptr, &Api::forecast},
      {"POST", "/oracle", nullptr, &Api::oracle},
  };
  bool known_path = false;
  for (const Route& r : kRoutes) {
    if (r.path != path) continue;
    known_path = true;
    if (r.method != method) continue;
    try {
      return r.get ? (this->*r.get)() : (this->*r.post)(body);
    } catch (const BadRequest& e) {
      return error(400, e.what());
    } catch (const UsageError& e) {
      return error(400, e.what());
    } catch (const DomainError& e) {
      return error(400, e.what());
    } catch (const json::exception& e) {
      return error(400, e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", method, path, e.what());
      return error(500, "internal error");
    }
  }
  if (known_path) return error(405, "method not allowed");
  return error(404, "no such endpoint");
}

Response Api::anchors() const {
  json list = json::array();
  for (std::size_t i = 0; i < bundle_.codebook.size(); ++i) list.push_back(anchor_json(bundle_, i));
  return {200, dump({{"anchors", list}})};
}

Response Api::health() const {
  const auto& c = bundle_.backbone.config;
  return {200, dump({{"status", "ok"},
                     {"checkpoint", checkpoint_hash_},
                     {"history", c.history},
                     {"horizon", c.horizon}})};
}

Response Api::forecast(std::string_view body) const {
  const json req = parse_body(body);
  const auto& c = bundle_.backbone.config;
  eval::EvalCase ec;
  ec.slice.history = number_array(req, "history", c.history);
  if (present(req, "instruction")) {
    if (!req.at("instruction").is_string()) throw BadRequest("'instruction' must be a string or null");
    ec.instruction = req.at("instruction").get<std::string>();
    if (ec.instruction->empty()) throw BadRequest("'instruction' must not be empty");
  }
  const bool has_future = present(req, "future");
  ec.slice.future = has_future ? number_array(req, "future", c.horizon) : series::Series(c.horizon, 0.0);
  ec.domain = "request";

  const eval::CaseOutputs out = eval::run_case(bundle_, ec);
  const series::NormRecord& rec = out.history.record;
  json res;
  res["unimodal"] = series::denormalize(out.unimodal, rec);
  res["steered"] = series::denormalize(out.steered, rec);
  if (out.match) {
    res["matched_anchor"] = anchor_json(bundle_, out.match->index);
    res["matched_anchor"]["similarity"] = out.match->similarity;
  } else {
    res["matched_anchor"] = nullptr;
  }
  if (has_future) {
    const eval::CaseRecord r = eval::score_case(out, ec);
    const auto& u = r.scores[static_cast<std::size_t>(eval::Method::kUnimodal)];
    const auto& s = r.scores[static_cast<std::size_t>(eval::Method::kSteered)];
    res["metrics"] = {{"mse_unimodal", u.mse},
                      {"mse_steered", s.mse},
                      {"mae_unimodal", u.mae},
                      {"mae_steered", s.mae}};
  } else {
    res["metrics"] = nullptr;
  }
  return {200, dump(res)};
}

Response Api::oracle(std::string_view body) const {
  const json req = parse_body(body);
  const auto& c = bundle_.backbone.config;
  eval::EvalCase ec;
  ec.slice.history = number_array(req, "history", c.history);
  ec.slice.future = number_array(req, "future", c.horizon);
  ec.domain = "request";
  const eval::CaseOutputs out = eval::run_case(bundle_, ec);
  const eval::CaseRecord r = eval::score_case(out, ec);
  const series::NormRecord& rec = out.history.record;
  json candidates = json::array();
  for (std::size_t a = 0; a < series::kTransformCount; ++a) {
    json e = anchor_json(bundle_, a);
    e["steered"] = series::denormalize(out.per_anchor[a], rec);
    e["mse"] = r.anchor_mse[a];
    candidates.push_back(std::move(e));
  }
  json res;
  res["unimodal"] = series::denormalize(out.unimodal, rec);
  res["mse_unimodal"] = r.scores[static_cast<std::size_t>(eval::Method::kUnimodal)].mse;
  res["candidates"] = std::move(candidates);
  res["argmin"] = r.oracle_anchor;
  return {200, dump(res)};
}

// ---- server ---------------------------------------------------------------------

namespace {

std::atomic<bool> g_stop_requested{false};

extern "C" void on_signal(int) { g_stop_requested = true; }

}  // namespace

void stop_server() { g_stop_requested = true; }

bool serve(const Api& api, std::function<void(int)> on_listening) {
  const ServiceConfig& cfg = api.config();
  httplib::Server svr;
  const std::size_t threads = cfg.threads;
  svr.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  // Oversized bodies are refused before they are read.
  svr.set_payload_max_length(cfg.max_body_bytes);
  svr.set_default_headers({{"Access-Control-Allow-Origin", cfg.cors_origin},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                           {"Access-Control-Allow-Headers", "Content-Type"}});

  auto dispatch = [&api](const httplib::Request& req, httplib::Response& res) {
    const Response r = api.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
    spdlog::debug("{} {} -> {}", req.method, req.path, r.status);
  };
  for (const char* path : {"/anchors", "/health", "/forecast", "/oracle"}) {
    svr.Get(path, dispatch);
    svr.Post(path, dispatch);
  }
  svr.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 413) {
      res.set_content(dump({{"error", "request body too large"}}), "application/json");
    } else if (res.status == 404 && res.body.empty()) {
      res.set_content(dump({{"error", "no such endpoint: " + req.path}}), "application/json");
    }
  });

  int port = cfg.port;
  if (port == 0) {
    port = svr.bind_to_any_port(cfg.bind);
    if (port < 0) return false;
  } else if (!svr.bind_to_port(cfg.bind, port)) {
    return false;
  }

  g_stop_requested = false;
  auto previous_int = std::signal(SIGINT, on_signal);
  auto previous_term = std::signal(SIGTERM, on_signal);
  std::thread watcher([&svr] {
    while (!g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    svr.stop();
  });

  spdlog::info("listening on {}:{}", cfg.bind, port);
  if (on_listening) on_listening(port);
  const bool ok = svr.listen_after_bind();

  g_stop_requested = true;
  watcher.join();
  std::signal(SIGINT, previous_int);
  std::signal(SIGTERM, previous_term);
  spdlog::info("server stopped");
  return ok;
}

}  // namespace chronosteer::service
