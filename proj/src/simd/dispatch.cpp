// SPDX-License-Identifier: Apache-2.0
#include "cxgan/simd/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace cxgan::simd {

#if defined(CXGAN_HAVE_AVX2)
namespace avx2 {
const KernelTable &table();
}
#endif

namespace {

bool cpu_has_avx2() {
#if defined(CXGAN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable &resolve() {
  const char *env = std::getenv("CXGAN_SIMD");
  const std::string_view request = env ? env : "auto";
  if (request == "scalar")
    return scalar_kernels();
  if (const KernelTable *t = avx2_kernels())
    return *t;
  return scalar_kernels();
}

} // namespace

const KernelTable *avx2_kernels() {
#if defined(CXGAN_HAVE_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &avx2::table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable &active_kernels() {
  static const KernelTable &table = resolve();
  return table;
}

} // namespace cxgan::simd
