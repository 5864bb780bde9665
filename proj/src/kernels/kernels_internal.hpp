// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "chronosteer/kernels.hpp"

namespace chronosteer::kernels::detail {

// Defined only when the AVX2 translation unit is built.
const KernelTable& avx2_table_unchecked();

}  // namespace chronosteer::kernels::detail
