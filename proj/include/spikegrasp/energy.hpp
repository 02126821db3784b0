#pragma once

// Operation-level energy accounting for the spiking network and its ANN twin.
//
// The hidden layer multiplies analog inputs (multiply-accumulate per active
// unit); the output layer receives binary spikes (accumulate only). For the
// ANN both layers are full multiply-accumulate, scaled by the nonzero
// fractions of its input and hidden activations, and charged for the same
// window length. Per forward sample:
//   snn: N1 * r     * (N0*am + (N0-1)*aa) + N2 * r_mem * N1 * aa
//   ann: N1 * r_in  * (N0*am + (N0-1)*aa) + N2 * r_out * (N1*am + (N1-1)*aa)
// both multiplied by B * T.

#include <cstdint>
#include <filesystem>
#include <string>

#include "spikegrasp/snn.hpp"

namespace spikegrasp::energy {

struct OpCosts {
  double mult_pj = 4.6;  // pJ per multiply
  double add_pj = 0.9;   // pJ per add
};

// Display unit for report tables: energies are printed as pJ / 1e6 (that is,
// microjoules). See snn_display / ann_display on EnergyReport.
inline constexpr double kDisplayDivisor = 1e6;
inline constexpr const char* kDisplayUnitNote =
    "energies are reported in pJ/1e6 (uJ)";

enum class TraceKind { Snn, Ann };

// Activity accumulated over a measurement workload.
struct ActivityTrace {
  TraceKind kind = TraceKind::Snn;
  snn::NetworkSizes sizes;
  std::int64_t samples = 0;  // batch size B
  int window = 0;            // timesteps T per sample
  // snn counters
  std::int64_t hidden_spikes = 0;   // sum over batch, window and neurons
  std::uint32_t output_active = 0;  // bit per output neuron: any nonzero membrane
  // ann counters (per-sample nonzero counts, summed over the batch)
  std::int64_t input_nonzero = 0;
  std::int64_t hidden_nonzero = 0;

  void add_snn(const snn::ForwardResult& result, int window);
  void add_ann(const snn::AnnRecord& record);
};

struct Rates {
  double r = 0.0;      // hidden spike rate          (snn)
  double r_mem = 0.0;  // output membrane activity   (snn)
  double r_in = 0.0;   // input nonzero fraction     (ann)
  double r_out = 0.0;  // hidden nonzero fraction    (ann)
};

// Throws std::invalid_argument on an empty trace (samples == 0 or window == 0
// for snn traces).
Rates spike_rates(const ActivityTrace& trace);

// Closed-form energies (pJ) from rates; B and T are the charged batch size
// and window. These are the single source of truth for the energy model.
double snn_energy_pj(double r, double r_mem, const snn::NetworkSizes& sizes,
                     std::int64_t batch, int window, const OpCosts& costs);
double ann_energy_pj(double r_in, double r_out, const snn::NetworkSizes& sizes,
                     std::int64_t batch, int window, const OpCosts& costs);

// Trace-driven variants, charging the trace's own B and T.
double snn_energy_pj(const ActivityTrace& trace, const OpCosts& costs);
double ann_energy_pj(const ActivityTrace& trace, const OpCosts& costs);

// Hidden spike rate r* at which the snn energy (with r_mem = 1) equals the
// ann energy at the given input/hidden activity.
double crossover_rate(double r_in, double r_out, const snn::NetworkSizes& sizes,
                      const OpCosts& costs);

// 100 * (1 - e_snn / e_ann). Throws std::invalid_argument if e_ann <= 0.
double savings_percent(double e_snn, double e_ann);

struct EnergyReport {
  Rates rates;
  snn::NetworkSizes sizes;
  std::int64_t batch = 0;
  int window = 0;
  OpCosts costs;
  double snn_pj = 0.0;
  double ann_pj = 0.0;
  double snn_display = 0.0;  // snn_pj / kDisplayDivisor
  double ann_display = 0.0;
  double savings = 0.0;      // percent
};

EnergyReport make_report(const Rates& rates, const snn::NetworkSizes& sizes,
                         std::int64_t batch, int window, const OpCosts& costs);

// Text report with the unit footnote.
std::string format_report(const EnergyReport& report);
// Single CSV row (with header line) carrying every report field.
std::string report_csv(const EnergyReport& report);

// Versioned text round-trip for traces.
void save_trace(const std::filesystem::path& path, const ActivityTrace& trace);
ActivityTrace load_trace(const std::filesystem::path& path);

}  // namespace spikegrasp::energy
