// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "chronosteer/errors.hpp"
#include "chronosteer/service.hpp"

namespace chronosteer::service {

void init_logging() {
  auto logger = spdlog::get("chronosteer");
  if (!logger) logger = spdlog::stderr_color_mt("chronosteer");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");
  const char* env = std::getenv("CHRONOSTEER_LOG");
  if (env == nullptr || *env == '\0') {
    spdlog::set_level(spdlog::level::info);
    return;
  }
  const spdlog::level::level_enum level = spdlog::level::from_str(env);
  // from_str maps unknown names to off
  if (level == spdlog::level::off && std::string_view(env) != "off")
    throw UsageError("CHRONOSTEER_LOG: unknown level '" + std::string(env) +
                     "' (use trace, debug, info, warn, error or off)");
  spdlog::set_level(level);
}

}  // namespace chronosteer::service
