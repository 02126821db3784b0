#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <doctest.h>

#include "spikegrasp/energy.hpp"

using namespace spikegrasp;

namespace {

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE("energy") {

TEST_CASE("reference operating point reproduces the published table") {
  // 29-256-7 network, B = 8192, T = 500, r = 0.34, full readout membrane
  // activity, ANN input fully dense with 44% hidden activity.
  const snn::NetworkSizes sizes{29, 256, 7};
  const energy::OpCosts costs;  // 4.6 pJ mult, 0.9 pJ add
  const std::int64_t batch = 8192;
  const int window = 500;

  const double e_snn =
      energy::snn_energy_pj(0.34, 1.0, sizes, batch, window, costs);
  const double e_ann =
      energy::ann_energy_pj(1.0, 0.44, sizes, batch, window, costs);

  const double snn_display = e_snn / energy::kDisplayDivisor;
  const double ann_display = e_ann / energy::kDisplayDivisor;
  CHECK(std::abs(snn_display - 63149.4410) < 0.005);
  CHECK(std::abs(ann_display - 184055.6769) < 0.005);
  CHECK(std::abs(energy::savings_percent(e_snn, e_ann) - 65.690) < 0.01);

  const energy::EnergyReport report = energy::make_report(
      {0.34, 1.0, 1.0, 0.44}, sizes, batch, window, costs);
  CHECK(report.snn_display == doctest::Approx(snn_display).epsilon(1e-15));
  CHECK(report.ann_display == doctest::Approx(ann_display).epsilon(1e-15));
  CHECK(report.savings ==
        doctest::Approx(energy::savings_percent(e_snn, e_ann)).epsilon(1e-15));
}

TEST_CASE("single-instance costs from the cost table") {
  const energy::OpCosts costs;
  // One hidden unit at rate 1 over one input: N0=1 kills the (N0-1) add
  // term, so the hidden layer charges exactly one multiply. One output over
  // one hidden unit at full membrane activity adds one accumulate.
  const snn::NetworkSizes tiny{1, 1, 1};
  CHECK(energy::snn_energy_pj(1.0, 1.0, tiny, 1, 1, costs) ==
        doctest::Approx(4.6 + 0.9).epsilon(1e-15));
  // The ANN charges multiply-accumulate on both layers.
  const snn::NetworkSizes two{2, 2, 1};
  // hidden: 2 units * (2*4.6 + 1*0.9); output: 1 unit * (2*4.6 + 1*0.9)
  CHECK(energy::ann_energy_pj(1.0, 1.0, two, 1, 1, costs) ==
        doctest::Approx(3.0 * (2 * 4.6 + 0.9)).epsilon(1e-15));
  CHECK(energy::ann_energy_pj(1.0, 1.0, two, 1, 1, costs) ==
        doctest::Approx(30.3).epsilon(1e-15));
}

TEST_CASE("energies are linear in batch, window and rates") {
  const snn::NetworkSizes sizes{29, 256, 7};
  const energy::OpCosts costs;
  const double base = energy::snn_energy_pj(0.2, 0.5, sizes, 16, 10, costs);
  CHECK(energy::snn_energy_pj(0.2, 0.5, sizes, 32, 10, costs) ==
        doctest::Approx(2.0 * base).epsilon(1e-12));
  CHECK(energy::snn_energy_pj(0.2, 0.5, sizes, 16, 30, costs) ==
        doctest::Approx(3.0 * base).epsilon(1e-12));
  // Both snn terms are separately linear in their rate.
  const double mem_only = energy::snn_energy_pj(0.0, 0.5, sizes, 16, 10, costs);
  const double spike_part = base - mem_only;
  CHECK(energy::snn_energy_pj(0.4, 0.5, sizes, 16, 10, costs) - mem_only ==
        doctest::Approx(2.0 * spike_part).epsilon(1e-12));

  const double ann = energy::ann_energy_pj(0.5, 0.25, sizes, 16, 10, costs);
  CHECK(energy::ann_energy_pj(0.5, 0.25, sizes, 48, 10, costs) ==
        doctest::Approx(3.0 * ann).epsilon(1e-12));
  CHECK(energy::snn_energy_pj(0.0, 0.0, sizes, 1000, 500, costs) == 0.0);
}

TEST_CASE("crossover rate separates the regimes") {
  const snn::NetworkSizes sizes{29, 256, 7};
  const energy::OpCosts costs;
  const double r_star = energy::crossover_rate(1.0, 0.44, sizes, costs);
  CHECK(r_star > 1.0);   // dense readout still beats the ANN at full firing
  CHECK(r_star < 1.15);
  const double e_ann = energy::ann_energy_pj(1.0, 0.44, sizes, 64, 8, costs);
  const double below =
      energy::snn_energy_pj(r_star - 0.01, 1.0, sizes, 64, 8, costs);
  const double at = energy::snn_energy_pj(r_star, 1.0, sizes, 64, 8, costs);
  const double above =
      energy::snn_energy_pj(r_star + 0.01, 1.0, sizes, 64, 8, costs);
  CHECK(below < e_ann);
  CHECK(above > e_ann);
  CHECK(at == doctest::Approx(e_ann).epsilon(1e-9));
}

TEST_CASE("savings percent definition and guard") {
  CHECK(energy::savings_percent(25.0, 100.0) == doctest::Approx(75.0));
  CHECK(energy::savings_percent(100.0, 100.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(energy::savings_percent(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(energy::savings_percent(1.0, -3.0), std::invalid_argument);
}

TEST_CASE("spike rates from a hand-built trace") {
  energy::ActivityTrace trace;
  trace.kind = energy::TraceKind::Snn;
  trace.sizes = {4, 2, 3};
  trace.samples = 1;
  trace.window = 2;
  trace.hidden_spikes = 1;  // 1 spike / (B*T*N1) = 1/4
  trace.output_active = 0b101;  // 2 of 3 readouts ever active
  const energy::Rates rates = energy::spike_rates(trace);
  CHECK(rates.r == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(rates.r_mem == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  energy::ActivityTrace ann;
  ann.kind = energy::TraceKind::Ann;
  ann.sizes = {4, 2, 3};
  ann.samples = 2;
  ann.window = 5;
  ann.input_nonzero = 6;   // 6 / (2*4) = 0.75
  ann.hidden_nonzero = 1;  // 1 / (2*2) = 0.25
  const energy::Rates arates = energy::spike_rates(ann);
  CHECK(arates.r_in == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(arates.r_out == doctest::Approx(0.25).epsilon(1e-15));

  energy::ActivityTrace empty;
  CHECK_THROWS_AS(energy::spike_rates(empty), std::invalid_argument);
}

TEST_CASE("trace-driven energy charges the trace's own shape") {
  energy::ActivityTrace trace;
  trace.kind = energy::TraceKind::Snn;
  trace.sizes = {2, 2, 1};
  trace.samples = 1;
  trace.window = 2;
  trace.hidden_spikes = 1;  // r = 1/4
  trace.output_active = 0b1;
  const energy::OpCosts costs;
  const double direct =
      energy::snn_energy_pj(0.25, 1.0, trace.sizes, 1, 2, costs);
  CHECK(energy::snn_energy_pj(trace, costs) ==
        doctest::Approx(direct).epsilon(1e-15));
  // 2 units * 0.25 * (2*4.6 + 0.9) + 1 * 1 * 2 * 0.9, times B*T = 2
  CHECK(direct == doctest::Approx(2.0 * (0.5 * 10.1 + 1.8)).epsilon(1e-12));
}

TEST_CASE("report formatting carries the display unit note") {
  const energy::EnergyReport report = energy::make_report(
      {0.34, 1.0, 1.0, 0.44}, {29, 256, 7}, 8192, 500, energy::OpCosts{});
  const std::string text = energy::format_report(report);
  CHECK(text.find("pJ/1e6") != std::string::npos);
  CHECK(text.find("63149.4410") != std::string::npos);
  CHECK(text.find("184055.6769") != std::string::npos);
  CHECK(text.find("65.690") != std::string::npos);
  const std::string csv = energy::report_csv(report);
  CHECK(csv.find("snn_display") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header + one row
}

TEST_CASE("trace round-trip preserves every field") {
  energy::ActivityTrace trace;
  trace.kind = energy::TraceKind::Ann;
  trace.sizes = {29, 256, 7};
  trace.samples = 12345;
  trace.window = 77;
  trace.hidden_spikes = 987654321;
  trace.output_active = 0b1010101;
  trace.input_nonzero = 111;
  trace.hidden_nonzero = 222;

  const auto path = temp_file("spikegrasp_trace_test.txt");
  energy::save_trace(path, trace);
  const energy::ActivityTrace back = energy::load_trace(path);
  CHECK(back.kind == trace.kind);
  CHECK(back.sizes.n_in == trace.sizes.n_in);
  CHECK(back.sizes.n_hidden == trace.sizes.n_hidden);
  CHECK(back.sizes.n_out == trace.sizes.n_out);
  CHECK(back.samples == trace.samples);
  CHECK(back.window == trace.window);
  CHECK(back.hidden_spikes == trace.hidden_spikes);
  CHECK(back.output_active == trace.output_active);
  CHECK(back.input_nonzero == trace.input_nonzero);
  CHECK(back.hidden_nonzero == trace.hidden_nonzero);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(energy::load_trace(temp_file("missing_trace.txt")),
                  std::runtime_error);
}

}  // TEST_SUITE
