// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "chronosteer/kernels.hpp"
#include "kernels_internal.hpp"

namespace chronosteer::kernels {

const KernelTable* avx2_table() {
#if defined(CHRONOSTEER_HAVE_AVX2)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &detail::avx2_table_unchecked() : nullptr;
#else
  return nullptr;
#endif
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return avx2_table() != nullptr;
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (isa == Isa::kAvx2) {
    if (const KernelTable* t = avx2_table()) return *t;
    throw std::runtime_error("AVX2 kernels are not available on this CPU");
  }
  return scalar_table();
}

const KernelTable& active() {
  static const KernelTable& chosen = []() -> const KernelTable& {
    const char* env = std::getenv("CHRONOSTEER_SIMD");
    if (env != nullptr && std::string(env) == "scalar") return scalar_table();
    if (const KernelTable* t = avx2_table()) return *t;
    return scalar_table();
  }();
  return chosen;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace chronosteer::kernels
