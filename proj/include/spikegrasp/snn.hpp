#pragma once

// Spiking actor-critic core: LIF hidden layer, non-spiking leaky-integrator
// readout, surrogate-gradient truncated backprop, and a matched ReLU MLP
// sharing the same weight shapes for the baseline comparison.
//
// A forward pass simulates an independent window of `window` steps from rest.
// The input vector is injected as a constant current through w_in at every
// step; hidden spikes propagate through w_out into the readout integrators,
// and the readout is the output membrane after the final step. Outputs
// 0..n_out-2 are action means, output n_out-1 is the state value.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spikegrasp/kernels.hpp"
#include "spikegrasp/rng.hpp"

namespace spikegrasp::snn {

struct LifParams {
  double decay = 0.95;
  double threshold = 1.0;
  kern::Reset reset = kern::Reset::ToZero;
};

// Single-population state for the step-level API.
struct LayerState {
  std::vector<double> membrane;
  std::vector<double> spikes;
};

LayerState make_layer(std::size_t n);

// One spiking update. Inputs must be finite and sized like the state.
LayerState lif_step(const LayerState& state, std::span<const double> current,
                    const LifParams& params);

// One non-spiking update (readout integrator); spikes stay zero.
LayerState nlif_step(const LayerState& state, std::span<const double> current,
                     const LifParams& params);

struct NetworkSizes {
  int n_in = 29;
  int n_hidden = 256;
  int n_out = 7;
};

struct SpikingNetwork {
  NetworkSizes sizes;
  LifParams hidden;
  LifParams output;          // threshold unused by the readout
  double surrogate_alpha = 2.0;
  std::vector<double> w_in;    // n_in x n_hidden, row-major
  std::vector<double> w_out;   // n_hidden x n_out, row-major
  std::vector<double> w_out_t; // n_out x n_hidden, kept in sync via sync_transpose()
  std::vector<double> log_std; // n_out - 1 action log stddevs

  int action_dim() const { return sizes.n_out - 1; }
  std::size_t param_count() const {
    return w_in.size() + w_out.size() + log_std.size();
  }
  void sync_transpose();
};

// Uniform(+-sqrt(1/fan_in)) weights, log_std filled with log_std_init.
SpikingNetwork make_network(const NetworkSizes& sizes, const LifParams& hidden,
                            const LifParams& output, double log_std_init,
                            Rng& rng);

// Everything the backward pass needs from one forward window.
struct ForwardRecord {
  int window = 0;
  NetworkSizes sizes;
  std::vector<double> input;           // n_in
  std::vector<double> hidden_current;  // n_hidden, constant over the window
  std::vector<double> hidden_pre;      // window x n_hidden pre-reset membrane
  std::vector<double> hidden_spikes;   // window x n_hidden
  std::vector<double> output_membrane; // window x n_out

  void resize(int window, const NetworkSizes& sizes);
};

struct ForwardResult {
  std::vector<double> action_mean;  // n_out - 1
  double value = 0.0;
  std::size_t spike_count = 0;      // total hidden spikes over the window
  std::uint32_t output_active = 0;  // bit i: output membrane i nonzero at some step
};

// Simulates the window and fills `record`. Throws std::invalid_argument on
// window < 1, size mismatch, or non-finite input.
ForwardResult forward(const SpikingNetwork& net, std::span<const double> input,
                      int window, ForwardRecord& record);

// Convenience overload with a private record.
ForwardResult forward(const SpikingNetwork& net, std::span<const double> input,
                      int window);

struct Gradients {
  std::vector<double> w_in;
  std::vector<double> w_out;
  std::vector<double> log_std;

  void resize(const NetworkSizes& sizes);
  void zero();
};

struct BpttScratch {
  std::vector<double> lambda_out;  // n_out
  std::vector<double> ds;          // n_hidden
  std::vector<double> mu;          // n_hidden
  std::vector<double> mu_sum;      // n_hidden
};

// Accumulates d(loss)/d(weights) into `grads` for one recorded window, given
// the loss gradient with respect to the readout (action means and value).
// log_std gradients are not produced here; the readout does not depend on
// them. Reset paths are treated as detached, spike nonlinearity uses the
// fast-sigmoid surrogate with the network's alpha.
void backward(const SpikingNetwork& net, const ForwardRecord& record,
              std::span<const double> d_action_mean, double d_value,
              Gradients& grads, BpttScratch& scratch);

// --- matched ANN baseline (same weight shapes, ReLU hidden layer) ---

struct AnnRecord {
  NetworkSizes sizes;
  std::vector<double> input;   // n_in
  std::vector<double> hidden;  // n_hidden, post-ReLU
  std::size_t input_nonzero = 0;
  std::size_t hidden_nonzero = 0;
};

ForwardResult ann_forward(const SpikingNetwork& net,
                          std::span<const double> input, AnnRecord& record);

void ann_backward(const SpikingNetwork& net, const AnnRecord& record,
                  std::span<const double> d_action_mean, double d_value,
                  Gradients& grads, BpttScratch& scratch);

}  // namespace spikegrasp::snn
