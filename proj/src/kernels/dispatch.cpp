#include "backends.hpp"

#include <stdexcept>
#include <string>

namespace spikegrasp::kern {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* g_active = nullptr;
Backend g_active_backend = Backend::Scalar;

void ensure_active() {
  if (!g_active) {
    g_active_backend = detect_backend();
    g_active = &kernels_for(g_active_backend);
  }
}

}  // namespace

bool backend_available(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return true;
    case Backend::Avx2:
      return cpu_has_avx2();
    case Backend::Neon:
#if defined(__aarch64__) || defined(_M_ARM64)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend detect_backend() {
  if (backend_available(Backend::Avx2)) return Backend::Avx2;
  if (backend_available(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

const Kernels& kernels_for(Backend b) {
  if (!backend_available(b)) {
    throw std::invalid_argument(std::string("kernel backend unavailable: ") +
                                backend_name(b));
  }
  switch (b) {
    case Backend::Scalar:
      return scalar_kernels();
    case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return avx2_kernels();
#else
      break;
#endif
    case Backend::Neon:
#if defined(__aarch64__) || defined(_M_ARM64)
      return neon_kernels();
#else
      break;
#endif
  }
  return scalar_kernels();
}

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar:
      return "scalar";
    case Backend::Avx2:
      return "avx2";
    case Backend::Neon:
      return "neon";
  }
  return "unknown";
}

bool parse_backend(std::string_view name, Backend& out) {
  if (name == "scalar") {
    out = Backend::Scalar;
  } else if (name == "avx2") {
    out = Backend::Avx2;
  } else if (name == "neon") {
    out = Backend::Neon;
  } else {
    return false;
  }
  return true;
}

std::vector<Backend> available_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
    if (backend_available(b)) out.push_back(b);
  }
  return out;
}

const Kernels& active() {
  ensure_active();
  return *g_active;
}

Backend active_backend() {
  ensure_active();
  return g_active_backend;
}

void set_active(Backend b) {
  g_active = &kernels_for(b);  // throws if unavailable
  g_active_backend = b;
}

}  // namespace spikegrasp::kern
