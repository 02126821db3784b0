// AVX2 + FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma on x86-64 and is empty elsewhere; whether the table may be
// used is decided at runtime in dispatch.cpp.

#include "backends.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace spikegrasp::kern {
namespace {

constexpr std::size_t kLanes = 4;

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, xv, yv));
  }
  for (; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void accumulate_avx2(const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(yv, xv));
  }
  for (; i < n; ++i) y[i] += x[i];
}

void scale_avx2(double* x, double a, std::size_t n) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), av));
  }
  for (; i < n; ++i) x[i] *= a;
}

std::size_t lif_update_avx2(double* membrane, const double* current,
                            double decay, double threshold, Reset reset,
                            double* spikes, double* pre_out, std::size_t n) {
  const __m256d decay_v = _mm256_set1_pd(decay);
  const __m256d theta_v = _mm256_set1_pd(threshold);
  const __m256d ones = _mm256_set1_pd(1.0);
  std::size_t fired = 0;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d mv = _mm256_loadu_pd(membrane + i);
    const __m256d cv = _mm256_loadu_pd(current + i);
    const __m256d pre = _mm256_fmadd_pd(decay_v, mv, cv);
    if (pre_out) _mm256_storeu_pd(pre_out + i, pre);
    const __m256d mask = _mm256_cmp_pd(pre, theta_v, _CMP_GE_OQ);
    _mm256_storeu_pd(spikes + i, _mm256_and_pd(mask, ones));
    __m256d next;
    if (reset == Reset::ToZero) {
      next = _mm256_andnot_pd(mask, pre);
    } else {
      next = _mm256_blendv_pd(pre, _mm256_sub_pd(pre, theta_v), mask);
    }
    _mm256_storeu_pd(membrane + i, next);
    fired += static_cast<std::size_t>(
        __builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(mask))));
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

void leak_integrate_avx2(double* membrane, const double* current, double decay,
                         std::size_t n) {
  const __m256d decay_v = _mm256_set1_pd(decay);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d mv = _mm256_loadu_pd(membrane + i);
    const __m256d cv = _mm256_loadu_pd(current + i);
    _mm256_storeu_pd(membrane + i, _mm256_fmadd_pd(decay_v, mv, cv));
  }
  for (; i < n; ++i) membrane[i] = std::fma(decay, membrane[i], current[i]);
}

void bptt_membrane_step_avx2(double* grad, const double* upstream,
                             const double* pre, const double* spikes,
                             double decay, double threshold, double alpha,
                             Reset reset, std::size_t n) {
  const __m256d theta_v = _mm256_set1_pd(threshold);
  const __m256d alpha_v = _mm256_set1_pd(alpha);
  const __m256d decay_v = _mm256_set1_pd(decay);
  const __m256d ones = _mm256_set1_pd(1.0);
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d u = _mm256_sub_pd(_mm256_loadu_pd(pre + i), theta_v);
    const __m256d au = _mm256_andnot_pd(sign_mask, u);
    const __m256d d = _mm256_fmadd_pd(alpha_v, au, ones);
    const __m256d fs = _mm256_div_pd(ones, _mm256_mul_pd(d, d));
    __m256d carry = ones;
    if (reset == Reset::ToZero) {
      carry = _mm256_sub_pd(ones, _mm256_loadu_pd(spikes + i));
    }
    const __m256d gv = _mm256_mul_pd(_mm256_loadu_pd(grad + i), carry);
    const __m256d uv = _mm256_mul_pd(_mm256_loadu_pd(upstream + i), fs);
    _mm256_storeu_pd(grad + i, _mm256_fmadd_pd(decay_v, gv, uv));
  }
  for (; i < n; ++i) {
    const double d = std::fma(alpha, std::fabs(pre[i] - threshold), 1.0);
    const double fs = 1.0 / (d * d);
    const double carry = reset == Reset::ToZero ? 1.0 - spikes[i] : 1.0;
    grad[i] = std::fma(decay, grad[i] * carry, upstream[i] * fs);
  }
}

std::size_t relu_avx2(double* x, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t positive = 0;
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
    _mm256_storeu_pd(x + i, _mm256_and_pd(mask, xv));
    positive += static_cast<std::size_t>(
        __builtin_popcount(static_cast<unsigned>(_mm256_movemask_pd(mask))));
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

void relu_mask_avx2(double* grad, const double* act, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(act + i), zero, _CMP_GT_OQ);
    _mm256_storeu_pd(grad + i, _mm256_and_pd(mask, _mm256_loadu_pd(grad + i)));
  }
  for (; i < n; ++i) {
    if (!(act[i] > 0.0)) grad[i] = 0.0;
  }
}

double sum_sq_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(xv, xv, acc);
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, acc);
  double s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) s = std::fma(x[i], x[i], s);
  return s;
}

void adam_step_avx2(double* param, const double* grad, double* m, double* v,
                    double lr, double beta1, double beta2, double eps,
                    double bc1, double bc2, std::size_t n) {
  const __m256d b1 = _mm256_set1_pd(beta1);
  const __m256d b1c = _mm256_set1_pd(1.0 - beta1);
  const __m256d b2 = _mm256_set1_pd(beta2);
  const __m256d b2c = _mm256_set1_pd(1.0 - beta2);
  const __m256d lr_v = _mm256_set1_pd(lr);
  const __m256d eps_v = _mm256_set1_pd(eps);
  const __m256d bc1_v = _mm256_set1_pd(bc1);
  const __m256d bc2_v = _mm256_set1_pd(bc2);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d mv = _mm256_fmadd_pd(b1c, g, _mm256_mul_pd(b1, _mm256_loadu_pd(m + i)));
    const __m256d vv = _mm256_fmadd_pd(b2c, _mm256_mul_pd(g, g),
                                       _mm256_mul_pd(b2, _mm256_loadu_pd(v + i)));
    _mm256_storeu_pd(m + i, mv);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_div_pd(mv, bc1_v);
    const __m256d vhat = _mm256_div_pd(vv, bc2_v);
    const __m256d den = _mm256_add_pd(_mm256_sqrt_pd(vhat), eps_v);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr_v, mhat), den);
    _mm256_storeu_pd(param + i, _mm256_sub_pd(_mm256_loadu_pd(param + i), step));
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

const Kernels& avx2_kernels() {
  static const Kernels table = {
      axpy_avx2,       accumulate_avx2, scale_avx2,
      lif_update_avx2, leak_integrate_avx2,
      bptt_membrane_step_avx2,
      relu_avx2,       relu_mask_avx2,  sum_sq_avx2,
      adam_step_avx2,
  };
  return table;
}

}  // namespace spikegrasp::kern

#endif  // x86-64
