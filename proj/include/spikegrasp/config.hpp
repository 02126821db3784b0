#pragma once

// Run configuration: a flat dotted-key `key = value` text format with `#`
// comments. Unknown keys are rejected with their line number; dumping then
// reloading a config reproduces it exactly.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "spikegrasp/checkpoint.hpp"
#include "spikegrasp/energy.hpp"
#include "spikegrasp/env.hpp"
#include "spikegrasp/ppo.hpp"
#include "spikegrasp/reward.hpp"

namespace spikegrasp::harness {

// Configuration or validation problem (maps to its own process exit code).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem problem (maps to its own process exit code).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::uint64_t seed = 0;
  snn::ModelKind model = snn::ModelKind::Snn;
  env::Mode mode = env::Mode::Multimodal;
  std::string kernels = "auto";  // auto | scalar | avx2 | neon
  int updates = 300;
  int num_envs = 64;

  int eval_envs = 64;
  int eval_interval = 5;  // updates between training-time evaluations
  int eval_episodes = 2;  // episodes per evaluation cycle
  int eval_trials = 10;   // independent trials for the eval subcommand

  env::EnvConfig env;
  rew::RewardParams reward;
  rew::CurriculumConfig curriculum;
  ppo::PpoConfig ppo;

  int snn_hidden = 256;
  int snn_window = 8;  // control window (timesteps per decision)
  double hidden_decay = 0.95;
  double hidden_threshold = 1.0;
  double output_decay = 0.95;
  double surrogate_alpha = 2.0;
  double log_std_init = -0.5;
  std::string reset = "to-zero";  // to-zero | subtract

  std::int64_t energy_batch = 8192;
  int energy_window = 500;  // energy-accounting window, independent of control
  energy::OpCosts costs;

  void validate() const;  // throws ConfigError
  snn::NetworkSizes network_sizes() const {
    return {env::kObsDim, snn_hidden, 7};
  }
  snn::LifParams hidden_params() const;
  snn::LifParams output_params() const;
};

// Defaults when the file is empty. Throws IoError if unreadable, ConfigError
// on unknown keys, malformed values (both with line numbers) or failed
// validation.
RunConfig load_config(const std::filesystem::path& path);

// Parse from text (same rules); `origin` names the source in errors.
RunConfig parse_config(const std::string& text, const std::string& origin);

// Every key in registry order; reloading the dump reproduces the config.
std::string dump_config(const RunConfig& cfg);

}  // namespace spikegrasp::harness
