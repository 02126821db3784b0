#include "spikegrasp/kernels.hpp"

#include <cmath>

// Scalar reference kernels. std::fma is used wherever the SIMD variants use
// fused multiply-adds so that elementwise results match them bit for bit.

namespace spikegrasp::kern {
namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fma(a, x[i], y[i]);
}

void accumulate_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

void scale_scalar(double* x, double a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

std::size_t lif_update_scalar(double* membrane, const double* current,
                              double decay, double threshold, Reset reset,
                              double* spikes, double* pre_out, std::size_t n) {
  std::size_t fired = 0;
  for (std::size_t i = 0; i < n; ++i) {
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

void leak_integrate_scalar(double* membrane, const double* current,
                           double decay, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    membrane[i] = std::fma(decay, membrane[i], current[i]);
}

void bptt_membrane_step_scalar(double* grad, const double* upstream,
                               const double* pre, const double* spikes,
                               double decay, double threshold, double alpha,
                               Reset reset, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = std::fma(alpha, std::fabs(pre[i] - threshold), 1.0);
    const double fs = 1.0 / (d * d);
    const double carry = reset == Reset::ToZero ? 1.0 - spikes[i] : 1.0;
    grad[i] = std::fma(decay, grad[i] * carry, upstream[i] * fs);
  }
}

std::size_t relu_scalar(double* x, std::size_t n) {
  std::size_t positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0) {
      ++positive;
    } else {
      x[i] = 0.0;
    }
  }
  return positive;
}

void relu_mask_scalar(double* grad, const double* act, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(act[i] > 0.0)) grad[i] = 0.0;
  }
}

double sum_sq_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s = std::fma(x[i], x[i], s);
  return s;
}

void adam_step_scalar(double* param, const double* grad, double* m, double* v,
                      double lr, double beta1, double beta2, double eps,
                      double bc1, double bc2, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = std::fma(1.0 - beta1, g, beta1 * m[i]);
    v[i] = std::fma(1.0 - beta2, g * g, beta2 * v[i]);
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= (lr * mhat) / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels table = {
      axpy_scalar,           accumulate_scalar, scale_scalar,
      lif_update_scalar,     leak_integrate_scalar,
      bptt_membrane_step_scalar,
      relu_scalar,           relu_mask_scalar,  sum_sq_scalar,
      adam_step_scalar,
  };
  return table;
}

}  // namespace spikegrasp::kern
