// NEON kernel variants for aarch64 (two f64 lanes). Compiled empty on other
// architectures; NEON is baseline on aarch64 so no runtime probe is needed
// beyond the build target itself.

#include "backends.hpp"

#if defined(__aarch64__) || defined(_M_ARM64)

#include <arm_neon.h>

#include <cmath>

namespace spikegrasp::kern {
namespace {

constexpr std::size_t kLanes = 2;

inline std::size_t mask_count(uint64x2_t mask) {
  return static_cast<std::size_t>(vaddvq_u64(vshrq_n_u64(mask, 63)));
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void accumulate_neon(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += x[i];
}

void scale_neon(double* x, double a, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    vst1q_f64(x + i, vmulq_f64(vld1q_f64(x + i), av));
  }
  for (; i < n; ++i) x[i] *= a;
}

std::size_t lif_update_neon(double* membrane, const double* current,
                            double decay, double threshold, Reset reset,
                            double* spikes, double* pre_out, std::size_t n) {
  const float64x2_t decay_v = vdupq_n_f64(decay);
  const float64x2_t theta_v = vdupq_n_f64(threshold);
  const float64x2_t ones = vdupq_n_f64(1.0);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t fired = 0;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t pre =
        vfmaq_f64(vld1q_f64(current + i), decay_v, vld1q_f64(membrane + i));
    if (pre_out) vst1q_f64(pre_out + i, pre);
    const uint64x2_t mask = vcgeq_f64(pre, theta_v);
    vst1q_f64(spikes + i, vbslq_f64(mask, ones, zero));
    float64x2_t next;
    if (reset == Reset::ToZero) {
      next = vbslq_f64(mask, zero, pre);
    } else {
      next = vbslq_f64(mask, vsubq_f64(pre, theta_v), pre);
    }
    vst1q_f64(membrane + i, next);
    fired += mask_count(mask);
  }
  for (; i < n; ++i) {
    const double pre = std::fma(decay, membrane[i], current[i]);
    if (pre_out) pre_out[i] = pre;
    if (pre >= threshold) {
      spikes[i] = 1.0;
      membrane[i] = reset == Reset::ToZero ? 0.0 : pre - threshold;
      ++fired;
    } else {
      spikes[i] = 0.0;
      membrane[i] = pre;
    }
  }
  return fired;
}

void leak_integrate_neon(double* membrane, const double* current, double decay,
                         std::size_t n) {
  const float64x2_t decay_v = vdupq_n_f64(decay);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    vst1q_f64(membrane + i,
              vfmaq_f64(vld1q_f64(current + i), decay_v, vld1q_f64(membrane + i)));
  }
  for (; i < n; ++i) membrane[i] = std::fma(decay, membrane[i], current[i]);
}

void bptt_membrane_step_neon(double* grad, const double* upstream,
                             const double* pre, const double* spikes,
                             double decay, double threshold, double alpha,
                             Reset reset, std::size_t n) {
  const float64x2_t theta_v = vdupq_n_f64(threshold);
  const float64x2_t alpha_v = vdupq_n_f64(alpha);
  const float64x2_t decay_v = vdupq_n_f64(decay);
  const float64x2_t ones = vdupq_n_f64(1.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t u = vsubq_f64(vld1q_f64(pre + i), theta_v);
    const float64x2_t d = vfmaq_f64(ones, alpha_v, vabsq_f64(u));
    const float64x2_t fs = vdivq_f64(ones, vmulq_f64(d, d));
    float64x2_t carry = ones;
    if (reset == Reset::ToZero) {
      carry = vsubq_f64(ones, vld1q_f64(spikes + i));
    }
    const float64x2_t gc = vmulq_f64(vld1q_f64(grad + i), carry);
    const float64x2_t uv = vmulq_f64(vld1q_f64(upstream + i), fs);
    vst1q_f64(grad + i, vfmaq_f64(uv, decay_v, gc));
  }
  for (; i < n; ++i) {
    const double d = std::fma(alpha, std::fabs(pre[i] - threshold), 1.0);
    const double fs = 1.0 / (d * d);
    const double carry = reset == Reset::ToZero ? 1.0 - spikes[i] : 1.0;
    grad[i] = std::fma(decay, grad[i] * carry, upstream[i] * fs);
  }
}

std::size_t relu_neon(double* x, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t positive = 0;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t xv = vld1q_f64(x + i);
    const uint64x2_t mask = vcgtq_f64(xv, zero);
    vst1q_f64(x + i, vbslq_f64(mask, xv, zero));
    positive += mask_count(mask);
  }
  for (; i < n; ++i) {
    if (x[i] > 0.0) {
      ++positive;
    } else {
      x[i] = 0.0;
    }
  }
  return positive;
}

void relu_mask_neon(double* grad, const double* act, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const uint64x2_t mask = vcgtq_f64(vld1q_f64(act + i), zero);
    vst1q_f64(grad + i, vbslq_f64(mask, vld1q_f64(grad + i), zero));
  }
  for (; i < n; ++i) {
    if (!(act[i] > 0.0)) grad[i] = 0.0;
  }
}

double sum_sq_neon(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t xv = vld1q_f64(x + i);
    acc = vfmaq_f64(acc, xv, xv);
  }
  double s = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) s = std::fma(x[i], x[i], s);
  return s;
}

void adam_step_neon(double* param, const double* grad, double* m, double* v,
                    double lr, double beta1, double beta2, double eps,
                    double bc1, double bc2, std::size_t n) {
  const float64x2_t b1 = vdupq_n_f64(beta1);
  const float64x2_t b1c = vdupq_n_f64(1.0 - beta1);
  const float64x2_t b2 = vdupq_n_f64(beta2);
  const float64x2_t b2c = vdupq_n_f64(1.0 - beta2);
  const float64x2_t lr_v = vdupq_n_f64(lr);
  const float64x2_t eps_v = vdupq_n_f64(eps);
  const float64x2_t bc1_v = vdupq_n_f64(bc1);
  const float64x2_t bc2_v = vdupq_n_f64(bc2);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const float64x2_t g = vld1q_f64(grad + i);
    const float64x2_t mv = vfmaq_f64(vmulq_f64(b1, vld1q_f64(m + i)), b1c, g);
    const float64x2_t vv =
        vfmaq_f64(vmulq_f64(b2, vld1q_f64(v + i)), b2c, vmulq_f64(g, g));
    vst1q_f64(m + i, mv);
    vst1q_f64(v + i, vv);
    const float64x2_t mhat = vdivq_f64(mv, bc1_v);
    const float64x2_t vhat = vdivq_f64(vv, bc2_v);
    const float64x2_t den = vaddq_f64(vsqrtq_f64(vhat), eps_v);
    const float64x2_t step = vdivq_f64(vmulq_f64(lr_v, mhat), den);
    vst1q_f64(param + i, vsubq_f64(vld1q_f64(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = std::fma(1.0 - beta1, g, beta1 * m[i]);
    v[i] = std::fma(1.0 - beta2, g * g, beta2 * v[i]);
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= (lr * mhat) / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const Kernels& neon_kernels() {
  static const Kernels table = {
      axpy_neon,       accumulate_neon, scale_neon,
      lif_update_neon, leak_integrate_neon,
      bptt_membrane_step_neon,
      relu_neon,       relu_mask_neon,  sum_sq_neon,
      adam_step_neon,
  };
  return table;
}

}  // namespace spikegrasp::kern

#endif  // aarch64
