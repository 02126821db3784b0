#include "spikegrasp/snn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace spikegrasp::snn {
namespace {

void check_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string("non-finite ") + what);
    }
  }
}

void check_sizes(const NetworkSizes& s) {
  if (s.n_in < 1 || s.n_hidden < 1 || s.n_out < 2 || s.n_out > 32) {
    throw std::invalid_argument(
        "network sizes must be n_in>=1, n_hidden>=1, 2<=n_out<=32");
  }
}

}  // namespace

LayerState make_layer(std::size_t n) {
  return LayerState{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
}

LayerState lif_step(const LayerState& state, std::span<const double> current,
                    const LifParams& params) {
  if (current.size() != state.membrane.size()) {
    throw std::invalid_argument("lif_step: current size mismatch");
  }
  check_finite(current, "input current");
  check_finite(state.membrane, "membrane state");
  LayerState next{state.membrane, std::vector<double>(current.size(), 0.0)};
  kern::active().lif_update(next.membrane.data(), current.data(), params.decay,
                            params.threshold, params.reset, next.spikes.data(),
                            nullptr, current.size());
  return next;
}

LayerState nlif_step(const LayerState& state, std::span<const double> current,
                     const LifParams& params) {
  if (current.size() != state.membrane.size()) {
    throw std::invalid_argument("nlif_step: current size mismatch");
  }
  check_finite(current, "input current");
  check_finite(state.membrane, "membrane state");
  LayerState next{state.membrane, std::vector<double>(current.size(), 0.0)};
  kern::active().leak_integrate(next.membrane.data(), current.data(),
                                params.decay, current.size());
  return next;
}

void SpikingNetwork::sync_transpose() {
  const std::size_t n1 = static_cast<std::size_t>(sizes.n_hidden);
  const std::size_t n2 = static_cast<std::size_t>(sizes.n_out);
  w_out_t.resize(n1 * n2);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      w_out_t[j * n1 + i] = w_out[i * n2 + j];
    }
  }
}

SpikingNetwork make_network(const NetworkSizes& sizes, const LifParams& hidden,
                            const LifParams& output, double log_std_init,
                            Rng& rng) {
  check_sizes(sizes);
  SpikingNetwork net;
  net.sizes = sizes;
  net.hidden = hidden;
  net.output = output;
  const std::size_t n0 = static_cast<std::size_t>(sizes.n_in);
  const std::size_t n1 = static_cast<std::size_t>(sizes.n_hidden);
  const std::size_t n2 = static_cast<std::size_t>(sizes.n_out);
  net.w_in.resize(n0 * n1);
  net.w_out.resize(n1 * n2);
  const double bound_in = std::sqrt(1.0 / static_cast<double>(n0));
  const double bound_out = std::sqrt(1.0 / static_cast<double>(n1));
  for (double& w : net.w_in) w = rng.uniform(-bound_in, bound_in);
  for (double& w : net.w_out) w = rng.uniform(-bound_out, bound_out);
  net.log_std.assign(static_cast<std::size_t>(sizes.n_out - 1), log_std_init);
  net.sync_transpose();
  return net;
}

void ForwardRecord::resize(int window_, const NetworkSizes& sizes_) {
  window = window_;
  sizes = sizes_;
  const std::size_t t = static_cast<std::size_t>(window_);
  input.resize(static_cast<std::size_t>(sizes_.n_in));
  hidden_current.resize(static_cast<std::size_t>(sizes_.n_hidden));
  hidden_pre.resize(t * static_cast<std::size_t>(sizes_.n_hidden));
  hidden_spikes.resize(t * static_cast<std::size_t>(sizes_.n_hidden));
  output_membrane.resize(t * static_cast<std::size_t>(sizes_.n_out));
}

ForwardResult forward(const SpikingNetwork& net, std::span<const double> input,
                      int window, ForwardRecord& record) {
  if (window < 1) {
    throw std::invalid_argument("forward: window must be >= 1");
  }
  if (input.size() != static_cast<std::size_t>(net.sizes.n_in)) {
    throw std::invalid_argument("forward: input size mismatch");
  }
  check_finite(input, "network input");

  const auto& k = kern::active();
  const std::size_t n0 = static_cast<std::size_t>(net.sizes.n_in);
  const std::size_t n1 = static_cast<std::size_t>(net.sizes.n_hidden);
  const std::size_t n2 = static_cast<std::size_t>(net.sizes.n_out);

  record.resize(window, net.sizes);
  std::memcpy(record.input.data(), input.data(), n0 * sizeof(double));

  // Input layer: constant drive for the whole window.
  double* drive = record.hidden_current.data();
  std::fill(record.hidden_current.begin(), record.hidden_current.end(), 0.0);
  for (std::size_t i = 0; i < n0; ++i) {
    if (input[i] != 0.0) k.axpy(input[i], &net.w_in[i * n1], drive, n1);
  }

  std::vector<double> v_hidden(n1, 0.0);
  std::vector<double> v_out(n2, 0.0);
  std::vector<double> i_out(n2);

  ForwardResult result;
  for (int t = 0; t < window; ++t) {
    double* spikes = &record.hidden_spikes[static_cast<std::size_t>(t) * n1];
    double* pre = &record.hidden_pre[static_cast<std::size_t>(t) * n1];
    result.spike_count += k.lif_update(v_hidden.data(), drive, net.hidden.decay,
                                       net.hidden.threshold, net.hidden.reset,
                                       spikes, pre, n1);
    std::fill(i_out.begin(), i_out.end(), 0.0);
    for (std::size_t i = 0; i < n1; ++i) {
      if (spikes[i] != 0.0) k.accumulate(&net.w_out[i * n2], i_out.data(), n2);
    }
    k.leak_integrate(v_out.data(), i_out.data(), net.output.decay, n2);
    double* out_row = &record.output_membrane[static_cast<std::size_t>(t) * n2];
    for (std::size_t j = 0; j < n2; ++j) {
      out_row[j] = v_out[j];
      if (v_out[j] != 0.0) result.output_active |= (1u << j);
    }
  }

  result.action_mean.assign(v_out.begin(), v_out.end() - 1);
  result.value = v_out[n2 - 1];
  return result;
}

ForwardResult forward(const SpikingNetwork& net, std::span<const double> input,
                      int window) {
  ForwardRecord record;
  return forward(net, input, window, record);
}

void Gradients::resize(const NetworkSizes& sizes) {
  w_in.assign(static_cast<std::size_t>(sizes.n_in) *
                  static_cast<std::size_t>(sizes.n_hidden),
              0.0);
  w_out.assign(static_cast<std::size_t>(sizes.n_hidden) *
                   static_cast<std::size_t>(sizes.n_out),
               0.0);
  log_std.assign(static_cast<std::size_t>(sizes.n_out - 1), 0.0);
}

void Gradients::zero() {
  std::fill(w_in.begin(), w_in.end(), 0.0);
  std::fill(w_out.begin(), w_out.end(), 0.0);
  std::fill(log_std.begin(), log_std.end(), 0.0);
}

void backward(const SpikingNetwork& net, const ForwardRecord& record,
              std::span<const double> d_action_mean, double d_value,
              Gradients& grads, BpttScratch& scratch) {
  const std::size_t n0 = static_cast<std::size_t>(net.sizes.n_in);
  const std::size_t n1 = static_cast<std::size_t>(net.sizes.n_hidden);
  const std::size_t n2 = static_cast<std::size_t>(net.sizes.n_out);
  if (record.sizes.n_in != net.sizes.n_in ||
      record.sizes.n_hidden != net.sizes.n_hidden ||
      record.sizes.n_out != net.sizes.n_out) {
    throw std::invalid_argument("backward: record does not match network");
  }
  if (d_action_mean.size() != n2 - 1) {
    throw std::invalid_argument("backward: readout gradient size mismatch");
  }
  if (grads.w_in.size() != net.w_in.size() ||
      grads.w_out.size() != net.w_out.size()) {
    throw std::invalid_argument("backward: gradient buffer size mismatch");
  }

  const auto& k = kern::active();
  scratch.lambda_out.resize(n2);
  scratch.ds.resize(n1);
  scratch.mu.assign(n1, 0.0);
  scratch.mu_sum.assign(n1, 0.0);

  // Readout adjoint at the final step; decays by output.decay per step back.
  for (std::size_t j = 0; j + 1 < n2; ++j) scratch.lambda_out[j] = d_action_mean[j];
  scratch.lambda_out[n2 - 1] = d_value;

  for (int t = record.window - 1; t >= 0; --t) {
    const double* spikes = &record.hidden_spikes[static_cast<std::size_t>(t) * n1];
    const double* pre = &record.hidden_pre[static_cast<std::size_t>(t) * n1];

    // d(loss)/d(w_out row i) accumulates lambda at every step neuron i fired.
    for (std::size_t i = 0; i < n1; ++i) {
      if (spikes[i] != 0.0) {
        k.accumulate(scratch.lambda_out.data(), &grads.w_out[i * n2], n2);
      }
    }

    // Spike adjoint ds = w_out * lambda, then membrane recursion.
    std::fill(scratch.ds.begin(), scratch.ds.end(), 0.0);
    for (std::size_t j = 0; j < n2; ++j) {
      if (scratch.lambda_out[j] != 0.0) {
        k.axpy(scratch.lambda_out[j], &net.w_out_t[j * n1], scratch.ds.data(), n1);
      }
    }
    k.bptt_membrane_step(scratch.mu.data(), scratch.ds.data(), pre, spikes,
                         net.hidden.decay, net.hidden.threshold,
                         net.surrogate_alpha, net.hidden.reset, n1);
    k.accumulate(scratch.mu.data(), scratch.mu_sum.data(), n1);
    k.scale(scratch.lambda_out.data(), net.output.decay, n2);
  }

  // Constant input drive: dI_hidden = sum_t mu(t), dW_in[k][:] = x_k * dI.
  for (std::size_t i = 0; i < n0; ++i) {
    if (record.input[i] != 0.0) {
      k.axpy(record.input[i], scratch.mu_sum.data(), &grads.w_in[i * n1], n1);
    }
  }
}

ForwardResult ann_forward(const SpikingNetwork& net,
                          std::span<const double> input, AnnRecord& record) {
  if (input.size() != static_cast<std::size_t>(net.sizes.n_in)) {
    throw std::invalid_argument("ann_forward: input size mismatch");
  }
  check_finite(input, "network input");

  const auto& k = kern::active();
  const std::size_t n0 = static_cast<std::size_t>(net.sizes.n_in);
  const std::size_t n1 = static_cast<std::size_t>(net.sizes.n_hidden);
  const std::size_t n2 = static_cast<std::size_t>(net.sizes.n_out);

  record.sizes = net.sizes;
  record.input.assign(input.begin(), input.end());
  record.hidden.assign(n1, 0.0);
  record.input_nonzero = 0;

  for (std::size_t i = 0; i < n0; ++i) {
    if (input[i] != 0.0) {
      ++record.input_nonzero;
      k.axpy(input[i], &net.w_in[i * n1], record.hidden.data(), n1);
    }
  }
  record.hidden_nonzero = k.relu(record.hidden.data(), n1);

  std::vector<double> out(n2, 0.0);
  for (std::size_t i = 0; i < n1; ++i) {
    if (record.hidden[i] > 0.0) {
      k.axpy(record.hidden[i], &net.w_out[i * n2], out.data(), n2);
    }
  }

  ForwardResult result;
  result.action_mean.assign(out.begin(), out.end() - 1);
  result.value = out[n2 - 1];
  result.spike_count = record.hidden_nonzero;
  for (std::size_t j = 0; j < n2; ++j) {
    if (out[j] != 0.0) result.output_active |= (1u << j);
  }
  return result;
}

void ann_backward(const SpikingNetwork& net, const AnnRecord& record,
                  std::span<const double> d_action_mean, double d_value,
                  Gradients& grads, BpttScratch& scratch) {
  const std::size_t n0 = static_cast<std::size_t>(net.sizes.n_in);
  const std::size_t n1 = static_cast<std::size_t>(net.sizes.n_hidden);
  const std::size_t n2 = static_cast<std::size_t>(net.sizes.n_out);
  if (record.sizes.n_in != net.sizes.n_in ||
      record.sizes.n_hidden != net.sizes.n_hidden ||
      record.sizes.n_out != net.sizes.n_out) {
    throw std::invalid_argument("ann_backward: record does not match network");
  }
  if (d_action_mean.size() != n2 - 1) {
    throw std::invalid_argument("ann_backward: readout gradient size mismatch");
  }

  const auto& k = kern::active();
  scratch.lambda_out.resize(n2);
  for (std::size_t j = 0; j + 1 < n2; ++j) scratch.lambda_out[j] = d_action_mean[j];
  scratch.lambda_out[n2 - 1] = d_value;

  scratch.ds.assign(n1, 0.0);
  for (std::size_t j = 0; j < n2; ++j) {
    if (scratch.lambda_out[j] != 0.0) {
      k.axpy(scratch.lambda_out[j], &net.w_out_t[j * n1], scratch.ds.data(), n1);
    }
  }
  for (std::size_t i = 0; i < n1; ++i) {
    if (record.hidden[i] > 0.0) {
      k.axpy(record.hidden[i], scratch.lambda_out.data(), &grads.w_out[i * n2], n2);
    }
  }
  k.relu_mask(scratch.ds.data(), record.hidden.data(), n1);
  for (std::size_t i = 0; i < n0; ++i) {
    if (record.input[i] != 0.0) {
      k.axpy(record.input[i], scratch.ds.data(), &grads.w_in[i * n1], n1);
    }
  }
}

}  // namespace spikegrasp::snn
