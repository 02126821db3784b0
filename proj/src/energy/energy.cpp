#include "spikegrasp/energy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spikegrasp::energy {
namespace {

constexpr const char* kMagic = "spikegrasp-trace v1";

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
  throw std::runtime_error("trace " + path.string() + ": " + why);
}

// Popcount over the low n bits.
int active_bits(std::uint32_t mask, int n) {
  int count = 0;
  for (int i = 0; i < n && i < 32; ++i) {
    if (mask & (1u << i)) ++count;
  }
  return count;
}

}  // namespace

void ActivityTrace::add_snn(const snn::ForwardResult& result, int window_) {
  if (samples == 0) {
    window = window_;
  } else if (window != window_) {
    throw std::invalid_argument("trace: mixed window lengths");
  }
  ++samples;
  hidden_spikes += static_cast<std::int64_t>(result.spike_count);
  output_active |= result.output_active;
}

void ActivityTrace::add_ann(const snn::AnnRecord& record) {
  // The dense pass has no timestep loop; the caller decides what T to
  // charge, so leave `window` alone apart from the single-pass default.
  if (samples == 0 && window == 0) {
    window = 1;
  }
  ++samples;
  input_nonzero += static_cast<std::int64_t>(record.input_nonzero);
  hidden_nonzero += static_cast<std::int64_t>(record.hidden_nonzero);
}

Rates spike_rates(const ActivityTrace& trace) {
  if (trace.samples <= 0) {
    throw std::invalid_argument("spike_rates: empty trace");
  }
  Rates rates;
  const double b = static_cast<double>(trace.samples);
  if (trace.kind == TraceKind::Snn) {
    if (trace.window <= 0) {
      throw std::invalid_argument("spike_rates: snn trace has no window");
    }
    rates.r = static_cast<double>(trace.hidden_spikes) /
              (b * static_cast<double>(trace.window) *
               static_cast<double>(trace.sizes.n_hidden));
    rates.r_mem = static_cast<double>(
                      active_bits(trace.output_active, trace.sizes.n_out)) /
                  static_cast<double>(trace.sizes.n_out);
  } else {
    rates.r_in = static_cast<double>(trace.input_nonzero) /
                 (b * static_cast<double>(trace.sizes.n_in));
    rates.r_out = static_cast<double>(trace.hidden_nonzero) /
                  (b * static_cast<double>(trace.sizes.n_hidden));
  }
  return rates;
}

double snn_energy_pj(double r, double r_mem, const snn::NetworkSizes& sizes,
                     std::int64_t batch, int window, const OpCosts& costs) {
  const double n0 = static_cast<double>(sizes.n_in);
  const double n1 = static_cast<double>(sizes.n_hidden);
  const double n2 = static_cast<double>(sizes.n_out);
  const double mac_in = n0 * costs.mult_pj + (n0 - 1.0) * costs.add_pj;
  const double per_step = n1 * r * mac_in + n2 * r_mem * n1 * costs.add_pj;
  return static_cast<double>(batch) * static_cast<double>(window) * per_step;
}

double ann_energy_pj(double r_in, double r_out, const snn::NetworkSizes& sizes,
                     std::int64_t batch, int window, const OpCosts& costs) {
  const double n0 = static_cast<double>(sizes.n_in);
  const double n1 = static_cast<double>(sizes.n_hidden);
  const double n2 = static_cast<double>(sizes.n_out);
  const double mac_in = n0 * costs.mult_pj + (n0 - 1.0) * costs.add_pj;
  const double mac_hidden = n1 * costs.mult_pj + (n1 - 1.0) * costs.add_pj;
  const double per_step = n1 * r_in * mac_in + n2 * r_out * mac_hidden;
  return static_cast<double>(batch) * static_cast<double>(window) * per_step;
}

double snn_energy_pj(const ActivityTrace& trace, const OpCosts& costs) {
  const Rates rates = spike_rates(trace);
  return snn_energy_pj(rates.r, rates.r_mem, trace.sizes, trace.samples,
                       trace.window, costs);
}

double ann_energy_pj(const ActivityTrace& trace, const OpCosts& costs) {
  const Rates rates = spike_rates(trace);
  return ann_energy_pj(rates.r_in, rates.r_out, trace.sizes, trace.samples,
                       trace.window, costs);
}

double crossover_rate(double r_in, double r_out, const snn::NetworkSizes& sizes,
                      const OpCosts& costs) {
  const double n0 = static_cast<double>(sizes.n_in);
  const double n1 = static_cast<double>(sizes.n_hidden);
  const double n2 = static_cast<double>(sizes.n_out);
  const double mac_in = n0 * costs.mult_pj + (n0 - 1.0) * costs.add_pj;
  const double mac_hidden = n1 * costs.mult_pj + (n1 - 1.0) * costs.add_pj;
  const double ann = n1 * r_in * mac_in + n2 * r_out * mac_hidden;
  const double membrane = n2 * 1.0 * n1 * costs.add_pj;
  return (ann - membrane) / (n1 * mac_in);
}

double savings_percent(double e_snn, double e_ann) {
  if (!(e_ann > 0.0)) {
    throw std::invalid_argument("savings_percent: reference energy must be > 0");
  }
  return 100.0 * (1.0 - e_snn / e_ann);
}

EnergyReport make_report(const Rates& rates, const snn::NetworkSizes& sizes,
                         std::int64_t batch, int window, const OpCosts& costs) {
  EnergyReport rep;
  rep.rates = rates;
  rep.sizes = sizes;
  rep.batch = batch;
  rep.window = window;
  rep.costs = costs;
  rep.snn_pj = snn_energy_pj(rates.r, rates.r_mem, sizes, batch, window, costs);
  rep.ann_pj = ann_energy_pj(rates.r_in, rates.r_out, sizes, batch, window, costs);
  rep.snn_display = rep.snn_pj / kDisplayDivisor;
  rep.ann_display = rep.ann_pj / kDisplayDivisor;
  rep.savings = savings_percent(rep.snn_pj, rep.ann_pj);
  return rep;
}

std::string format_report(const EnergyReport& rep) {
  char buf[256];
  std::ostringstream out;
  out << "energy comparison (B=" << rep.batch << ", T=" << rep.window
      << ", sizes " << rep.sizes.n_in << "-" << rep.sizes.n_hidden << "-"
      << rep.sizes.n_out << ")\n";
  std::snprintf(buf, sizeof(buf),
                "  op costs: mult %.3f pJ, add %.3f pJ\n", rep.costs.mult_pj,
                rep.costs.add_pj);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "  snn: r=%.6g r_mem=%.6g energy %.4f\n", rep.rates.r,
                rep.rates.r_mem, rep.snn_display);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "  ann: r_in=%.6g r_out=%.6g energy %.4f\n", rep.rates.r_in,
                rep.rates.r_out, rep.ann_display);
  out << buf;
  std::snprintf(buf, sizeof(buf), "  savings: %.3f%%\n", rep.savings);
  out << buf;
  out << "  note: " << kDisplayUnitNote << "\n";
  return out.str();
}

std::string report_csv(const EnergyReport& rep) {
  char buf[512];
  std::snprintf(
      buf, sizeof(buf),
      "r,r_mem,r_in,r_out,batch,window,n_in,n_hidden,n_out,mult_pj,add_pj,"
      "snn_pj,ann_pj,snn_display,ann_display,savings_pct\n"
      "%.17g,%.17g,%.17g,%.17g,%lld,%d,%d,%d,%d,%.17g,%.17g,%.17g,%.17g,"
      "%.17g,%.17g,%.17g\n",
      rep.rates.r, rep.rates.r_mem, rep.rates.r_in, rep.rates.r_out,
      static_cast<long long>(rep.batch), rep.window, rep.sizes.n_in,
      rep.sizes.n_hidden, rep.sizes.n_out, rep.costs.mult_pj, rep.costs.add_pj,
      rep.snn_pj, rep.ann_pj, rep.snn_display, rep.ann_display, rep.savings);
  return buf;
}

void save_trace(const std::filesystem::path& path, const ActivityTrace& trace) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  out << kMagic << "\n";
  out << "kind " << (trace.kind == TraceKind::Snn ? "snn" : "ann") << "\n";
  out << "sizes " << trace.sizes.n_in << " " << trace.sizes.n_hidden << " "
      << trace.sizes.n_out << "\n";
  out << "samples " << trace.samples << "\n";
  out << "window " << trace.window << "\n";
  out << "hidden_spikes " << trace.hidden_spikes << "\n";
  out << "output_active " << trace.output_active << "\n";
  out << "input_nonzero " << trace.input_nonzero << "\n";
  out << "hidden_nonzero " << trace.hidden_nonzero << "\n";
  out << "end\n";
  out.flush();
  if (!out) fail(path, "write failed");
}

ActivityTrace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  std::string line;
  if (!std::getline(in, line) || line != kMagic) fail(path, "bad header");

  ActivityTrace trace;
  auto field = [&](const char* key) {
    if (!std::getline(in, line)) {
      fail(path, std::string("truncated before ") + key);
    }
    const std::string prefix = std::string(key) + " ";
    if (line.rfind(prefix, 0) != 0) fail(path, std::string("expected ") + key);
    return line.substr(prefix.size());
  };

  const std::string kind = field("kind");
  if (kind == "snn") {
    trace.kind = TraceKind::Snn;
  } else if (kind == "ann") {
    trace.kind = TraceKind::Ann;
  } else {
    fail(path, "unknown kind '" + kind + "'");
  }
  {
    std::istringstream ss(field("sizes"));
    if (!(ss >> trace.sizes.n_in >> trace.sizes.n_hidden >> trace.sizes.n_out)) {
      fail(path, "malformed sizes");
    }
    if (trace.sizes.n_in < 1 || trace.sizes.n_hidden < 1 || trace.sizes.n_out < 1) {
      fail(path, "invalid sizes");
    }
  }
  auto parse_i64 = [&](const std::string& tok, const char* what) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(tok, &pos);
      if (pos != tok.size() || v < 0) fail(path, std::string("malformed ") + what);
      return static_cast<std::int64_t>(v);
    } catch (const std::logic_error&) {
      fail(path, std::string("malformed ") + what);
    }
  };
  trace.samples = parse_i64(field("samples"), "samples");
  trace.window = static_cast<int>(parse_i64(field("window"), "window"));
  trace.hidden_spikes = parse_i64(field("hidden_spikes"), "hidden_spikes");
  trace.output_active =
      static_cast<std::uint32_t>(parse_i64(field("output_active"), "output_active"));
  trace.input_nonzero = parse_i64(field("input_nonzero"), "input_nonzero");
  trace.hidden_nonzero = parse_i64(field("hidden_nonzero"), "hidden_nonzero");
  if (!std::getline(in, line) || line != "end") fail(path, "missing end marker");
  return trace;
}

}  // namespace spikegrasp::energy
