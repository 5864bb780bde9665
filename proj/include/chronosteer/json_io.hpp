// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace chronosteer {

// Serializes `j` with object keys in sorted order and every floating-point
// number as a decimal with 17 significant digits. Non-finite numbers become
// null. indent < 0 writes a single line.
std::string dump_json(const nlohmann::json& j, int indent = -1);

}  // namespace chronosteer
