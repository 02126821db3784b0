#pragma once

#include "spikegrasp/kernels.hpp"

// Internal: per-backend tables. Only defined on the matching architecture;
// dispatch.cpp guards every reference with the same macros.

namespace spikegrasp::kern {

#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2_kernels();
#endif

#if defined(__aarch64__) || defined(_M_ARM64)
const Kernels& neon_kernels();
#endif

}  // namespace spikegrasp::kern
