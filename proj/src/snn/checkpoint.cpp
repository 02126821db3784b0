#include "spikegrasp/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace spikegrasp::snn {
namespace {

constexpr const char* kMagic = "spikegrasp-checkpoint v1";

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
  throw std::runtime_error("checkpoint " + path.string() + ": " + why);
}

std::string expect_line(std::istream& in, const std::filesystem::path& path,
                        const char* what) {
  std::string line;
  if (!std::getline(in, line)) fail(path, std::string("truncated before ") + what);
  return line;
}

double parse_double(const std::string& tok, const std::filesystem::path& path,
                    const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) fail(path, std::string("malformed ") + what);
    return v;
  } catch (const std::logic_error&) {
    fail(path, std::string("malformed ") + what);
  }
}

void parse_row(const std::string& line, double* out, std::size_t n,
               const std::filesystem::path& path, const char* what) {
  std::istringstream ss(line);
  std::string tok;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ss >> tok)) fail(path, std::string("short row in ") + what);
    out[i] = parse_double(tok, path, what);
  }
  if (ss >> tok) fail(path, std::string("excess values in ") + what);
}

const char* reset_name(kern::Reset reset) {
  return reset == kern::Reset::ToZero ? "to-zero" : "subtract";
}

kern::Reset parse_reset(const std::string& name,
                        const std::filesystem::path& path) {
  if (name == "to-zero") return kern::Reset::ToZero;
  if (name == "subtract") return kern::Reset::SubtractThreshold;
  fail(path, "unknown reset mode '" + name + "'");
}

}  // namespace

const char* model_name(ModelKind kind) {
  return kind == ModelKind::Snn ? "snn" : "ann";
}

bool parse_model(std::string_view name, ModelKind& out) {
  if (name == "snn") {
    out = ModelKind::Snn;
  } else if (name == "ann") {
    out = ModelKind::Ann;
  } else {
    return false;
  }
  return true;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  const auto& net = ckpt.net;
  out << kMagic << "\n";
  out << "model " << model_name(ckpt.kind) << "\n";
  out << "sizes " << net.sizes.n_in << " " << net.sizes.n_hidden << " "
      << net.sizes.n_out << "\n";
  out << "hidden_decay " << fmt_double(net.hidden.decay) << "\n";
  out << "hidden_threshold " << fmt_double(net.hidden.threshold) << "\n";
  out << "hidden_reset " << reset_name(net.hidden.reset) << "\n";
  out << "output_decay " << fmt_double(net.output.decay) << "\n";
  out << "surrogate_alpha " << fmt_double(net.surrogate_alpha) << "\n";
  out << "log_std";
  for (double v : net.log_std) out << " " << fmt_double(v);
  out << "\n";
  out << "w_in\n";
  const std::size_t n1 = static_cast<std::size_t>(net.sizes.n_hidden);
  const std::size_t n2 = static_cast<std::size_t>(net.sizes.n_out);
  for (int r = 0; r < net.sizes.n_in; ++r) {
    const double* row = &net.w_in[static_cast<std::size_t>(r) * n1];
    for (std::size_t c = 0; c < n1; ++c) {
      out << (c ? " " : "") << fmt_double(row[c]);
    }
    out << "\n";
  }
  out << "w_out\n";
  for (int r = 0; r < net.sizes.n_hidden; ++r) {
    const double* row = &net.w_out[static_cast<std::size_t>(r) * n2];
    for (std::size_t c = 0; c < n2; ++c) {
      out << (c ? " " : "") << fmt_double(row[c]);
    }
    out << "\n";
  }
  out << "end\n";
  out.flush();
  if (!out) fail(path, "write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  if (expect_line(in, path, "header") != kMagic) fail(path, "bad header");

  Checkpoint ckpt;
  auto& net = ckpt.net;

  auto field = [&](const char* key) {
    std::string line = expect_line(in, path, key);
    const std::string prefix = std::string(key) + " ";
    if (line.rfind(prefix, 0) != 0) fail(path, std::string("expected ") + key);
    return line.substr(prefix.size());
  };

  if (!parse_model(field("model"), ckpt.kind)) fail(path, "unknown model");
  {
    std::istringstream ss(field("sizes"));
    if (!(ss >> net.sizes.n_in >> net.sizes.n_hidden >> net.sizes.n_out)) {
      fail(path, "malformed sizes");
    }
    if (net.sizes.n_in < 1 || net.sizes.n_hidden < 1 || net.sizes.n_out < 2) {
      fail(path, "invalid sizes");
    }
  }
  net.hidden.decay = parse_double(field("hidden_decay"), path, "hidden_decay");
  net.hidden.threshold =
      parse_double(field("hidden_threshold"), path, "hidden_threshold");
  net.hidden.reset = parse_reset(field("hidden_reset"), path);
  net.output.decay = parse_double(field("output_decay"), path, "output_decay");
  net.surrogate_alpha =
      parse_double(field("surrogate_alpha"), path, "surrogate_alpha");

  const std::size_t n0 = static_cast<std::size_t>(net.sizes.n_in);
  const std::size_t n1 = static_cast<std::size_t>(net.sizes.n_hidden);
  const std::size_t n2 = static_cast<std::size_t>(net.sizes.n_out);
  net.log_std.resize(n2 - 1);
  parse_row(field("log_std"), net.log_std.data(), n2 - 1, path, "log_std");

  if (expect_line(in, path, "w_in") != "w_in") fail(path, "expected w_in");
  net.w_in.resize(n0 * n1);
  for (std::size_t r = 0; r < n0; ++r) {
    parse_row(expect_line(in, path, "w_in row"), &net.w_in[r * n1], n1, path,
              "w_in");
  }
  if (expect_line(in, path, "w_out") != "w_out") fail(path, "expected w_out");
  net.w_out.resize(n1 * n2);
  for (std::size_t r = 0; r < n1; ++r) {
    parse_row(expect_line(in, path, "w_out row"), &net.w_out[r * n2], n2, path,
              "w_out");
  }
  if (expect_line(in, path, "end marker") != "end") fail(path, "missing end marker");
  net.sync_transpose();
  return ckpt;
}

}  // namespace spikegrasp::snn
