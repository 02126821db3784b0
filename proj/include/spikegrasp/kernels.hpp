#pragma once

// Vectorized inner loops used by the network, optimizer and trainer.
//
// Every kernel exists as a scalar reference implementation plus optional
// SIMD variants (AVX2 on x86-64, NEON on aarch64) selected at runtime
// through a function-pointer table. The scalar reference mirrors the fused
// multiply-add sequence of the SIMD paths (std::fma), so all elementwise
// kernels produce bit-identical results across backends; only reductions
// (sum_sq) may differ in accumulation order.

#include <cstddef>
#include <string_view>
#include <vector>

namespace spikegrasp::kern {

enum class Backend { Scalar = 0, Avx2 = 1, Neon = 2 };

// Reset rule applied to a membrane that crossed threshold.
enum class Reset : int { ToZero = 0, SubtractThreshold = 1 };

struct Kernels {
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  // y[i] += x[i]
  void (*accumulate)(const double* x, double* y, std::size_t n);

  // x[i] *= a
  void (*scale)(double* x, double a, std::size_t n);

  // Leaky integrate-and-fire update:
  //   pre = decay * membrane[i] + current[i]
  //   spikes[i] = pre >= threshold ? 1 : 0
  //   membrane[i] = fired ? (to-zero: 0 | subtract: pre - threshold) : pre
  // If pre_out is non-null it receives the pre-reset membrane values.
  // Returns the number of fired units.
  std::size_t (*lif_update)(double* membrane, const double* current,
                            double decay, double threshold, Reset reset,
                            double* spikes, double* pre_out, std::size_t n);

  // Non-spiking leaky integration: membrane[i] = decay * membrane[i] + current[i]
  void (*leak_integrate)(double* membrane, const double* current, double decay,
                         std::size_t n);

  // One step of the truncated-backprop membrane recursion (reverse time):
  //   grad[i] = upstream[i] * fs(pre[i] - threshold) + decay * grad[i] * carry
  // with the fast-sigmoid surrogate fs(u) = 1 / (1 + alpha*|u|)^2 and
  // carry = 1 - spikes[i] for to-zero reset, 1 for subtract (reset detached).
  void (*bptt_membrane_step)(double* grad, const double* upstream,
                             const double* pre, const double* spikes,
                             double decay, double threshold, double alpha,
                             Reset reset, std::size_t n);

  // x[i] = max(x[i], 0). Returns the number of strictly positive outputs.
  std::size_t (*relu)(double* x, std::size_t n);

  // grad[i] = 0 wherever act[i] <= 0 (backward mask of relu)
  void (*relu_mask)(double* grad, const double* act, std::size_t n);

  // sum of x[i]^2 (accumulation order backend-specific)
  double (*sum_sq)(const double* x, std::size_t n);

  // Adaptive-moment step with precomputed bias corrections
  // bc1 = 1 - beta1^t, bc2 = 1 - beta2^t:
  //   m[i] = beta1*m[i] + (1-beta1)*g[i]
  //   v[i] = beta2*v[i] + (1-beta2)*g[i]^2
  //   p[i] -= lr * (m[i]/bc1) / (sqrt(v[i]/bc2) + eps)
  void (*adam_step)(double* param, const double* grad, double* m, double* v,
                    double lr, double beta1, double beta2, double eps,
                    double bc1, double bc2, std::size_t n);
};

const Kernels& scalar_kernels();

bool backend_available(Backend b);
Backend detect_backend();  // best backend available on this CPU
const Kernels& kernels_for(Backend b);  // throws std::invalid_argument if unavailable
const char* backend_name(Backend b);
bool parse_backend(std::string_view name, Backend& out);  // "scalar" | "avx2" | "neon"
std::vector<Backend> available_backends();

// Process-wide table used by the hot paths. Defaults to detect_backend().
const Kernels& active();
Backend active_backend();
void set_active(Backend b);  // throws std::invalid_argument if unavailable

}  // namespace spikegrasp::kern
