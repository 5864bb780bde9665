// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chronosteer::steering {

// "text<TAB>v0 v1 ..." lines; blank lines and '#' comments are skipped.
std::vector<std::pair<std::string, std::vector<double>>> parse_vector_table(
    std::string_view text);

}  // namespace chronosteer::steering
