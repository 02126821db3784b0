// Command-line front end: train / eval / ablate / energy-report /
// dump-trajectory over the spikegrasp core library.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "spikegrasp/checkpoint.hpp"
#include "spikegrasp/config.hpp"
#include "spikegrasp/energy.hpp"
#include "spikegrasp/kernels.hpp"
#include "spikegrasp/runner.hpp"

namespace {

namespace hn = spikegrasp::harness;

constexpr int kExitConfig = 65;    // EX_DATAERR: bad config or flag value
constexpr int kExitIo = 74;        // EX_IOERR: missing or unwritable file
constexpr int kExitSoftware = 70;  // EX_SOFTWARE: everything else

// Options shared by the run-style subcommands; flags override the config file.
struct CommonOpts {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model;
  std::optional<std::string> mode;
  std::optional<std::string> kernels;
  std::optional<int> updates;
  std::optional<int> envs;
};

void add_common(CLI::App& cmd, CommonOpts& opts) {
  cmd.add_option("--config", opts.config, "config file (key = value lines)");
  cmd.add_option("--out", opts.out, "output directory")
      ->capture_default_str();
  cmd.add_option("--seed", opts.seed, "master seed");
  cmd.add_option("--model", opts.model, "snn | ann");
  cmd.add_option("--mode", opts.mode, "multimodal | unimodal");
  cmd.add_option("--kernels", opts.kernels, "auto | scalar | avx2 | neon");
  cmd.add_option("--updates", opts.updates, "training updates");
  cmd.add_option("--envs", opts.envs, "parallel training environments");
}

hn::RunConfig resolve_config(const CommonOpts& opts) {
  hn::RunConfig cfg;
  if (!opts.config.empty()) cfg = hn::load_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.model && !spikegrasp::snn::parse_model(*opts.model, cfg.model)) {
    throw hn::ConfigError("unknown model: " + *opts.model);
  }
  if (opts.mode && !spikegrasp::env::parse_mode(*opts.mode, cfg.mode)) {
    throw hn::ConfigError("unknown mode: " + *opts.mode);
  }
  if (opts.kernels) {
    spikegrasp::kern::Backend b;
    if (*opts.kernels != "auto" &&
        !spikegrasp::kern::parse_backend(*opts.kernels, b)) {
      throw hn::ConfigError("unknown kernel backend: " + *opts.kernels);
    }
    cfg.kernels = *opts.kernels;
  }
  if (opts.updates) cfg.updates = *opts.updates;
  if (opts.envs) cfg.num_envs = *opts.envs;
  cfg.validate();
  return cfg;
}

spikegrasp::rew::StageId to_stage(int stage) {
  if (stage < 1 || stage > 3) {
    throw hn::ConfigError("--stage must be 1, 2 or 3");
  }
  return static_cast<spikegrasp::rew::StageId>(stage - 1);
}

int cmd_train(const CommonOpts& opts) {
  const hn::RunConfig cfg = resolve_config(opts);
  const hn::TrainResult res = hn::train(cfg, opts.out);
  std::printf("trained %d updates, final stage %d (%d advances)\n",
              res.updates_run, static_cast<int>(res.final_stage) + 1,
              res.stage_advances);
  std::printf("final eval: success %.3f grasp %.3f lift %.3f reward %.3f\n",
              res.final_eval.success_rate, res.final_eval.grasp_rate,
              res.final_eval.lift_rate, res.final_eval.mean_reward);
  std::printf("checkpoint: %s\n", res.checkpoint.string().c_str());
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& checkpoint,
             int stage) {
  const hn::RunConfig cfg = resolve_config(opts);
  const auto trials = hn::run_eval(cfg, checkpoint, opts.out, to_stage(stage));
  double mean = 0.0;
  for (const hn::EvalSummary& t : trials) mean += t.success_rate;
  if (!trials.empty()) mean /= static_cast<double>(trials.size());
  std::printf("%zu trials, mean success %.3f; wrote %s\n", trials.size(), mean,
              (std::filesystem::path(opts.out) / "trials.csv").string().c_str());
  return 0;
}

int cmd_ablate(const CommonOpts& opts) {
  const hn::RunConfig cfg = resolve_config(opts);
  const auto rows = hn::run_ablate(cfg, opts.out);
  for (const hn::AblateRow& r : rows) {
    std::printf("%s %s: stage %d success %.3f\n",
                spikegrasp::snn::model_name(r.model),
                spikegrasp::env::mode_name(r.mode),
                static_cast<int>(r.result.final_stage) + 1,
                r.result.final_eval.success_rate);
  }
  return 0;
}

struct EnergyOpts {
  double r = 0.34;
  double r_mem = 1.0;
  double r_in = 1.0;
  double r_out = 0.44;
  std::int64_t batch = 8192;
  int window = 500;
  int n_in = 29;
  int n_hidden = 256;
  int n_out = 7;
  std::string snn_trace, ann_trace;
  std::string snn_checkpoint, ann_checkpoint;
  std::string save_snn_trace, save_ann_trace;
};

int cmd_energy(const CommonOpts& opts, const EnergyOpts& eo) {
  namespace en = spikegrasp::energy;
  const hn::RunConfig cfg = resolve_config(opts);
  hn::resolve_kernels(cfg);

  en::Rates rates{eo.r, eo.r_mem, eo.r_in, eo.r_out};
  spikegrasp::snn::NetworkSizes sizes{eo.n_in, eo.n_hidden, eo.n_out};
  std::int64_t batch = eo.batch;
  int window = eo.window;
  bool have_trace = false;

  const auto apply_snn = [&](const en::ActivityTrace& trace) {
    const en::Rates tr = en::spike_rates(trace);
    rates.r = tr.r;
    rates.r_mem = tr.r_mem;
    sizes = trace.sizes;
    batch = trace.samples;
    window = trace.window;
    have_trace = true;
  };
  const auto apply_ann = [&](const en::ActivityTrace& trace) {
    const en::Rates tr = en::spike_rates(trace);
    rates.r_in = tr.r_in;
    rates.r_out = tr.r_out;
    if (!have_trace) {
      sizes = trace.sizes;
      batch = trace.samples;
      window = trace.window;
      have_trace = true;
    }
  };

  if (!eo.snn_checkpoint.empty()) {
    const auto ckpt = spikegrasp::snn::load_checkpoint(eo.snn_checkpoint);
    const auto trace =
        hn::collect_snn_trace(ckpt.net, cfg, eo.batch, eo.window);
    if (!eo.save_snn_trace.empty()) en::save_trace(eo.save_snn_trace, trace);
    apply_snn(trace);
  } else if (!eo.snn_trace.empty()) {
    apply_snn(en::load_trace(eo.snn_trace));
  }

  if (!eo.ann_checkpoint.empty()) {
    const auto ckpt = spikegrasp::snn::load_checkpoint(eo.ann_checkpoint);
    const auto trace =
        hn::collect_ann_trace(ckpt.net, cfg, eo.batch, eo.window);
    if (!eo.save_ann_trace.empty()) en::save_trace(eo.save_ann_trace, trace);
    apply_ann(trace);
  } else if (!eo.ann_trace.empty()) {
    apply_ann(en::load_trace(eo.ann_trace));
  }

  const en::EnergyReport report =
      en::make_report(rates, sizes, batch, window, cfg.costs);
  std::filesystem::create_directories(opts.out);
  const auto csv_path = std::filesystem::path(opts.out) / "energy.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw hn::IoError("cannot write " + csv_path.string());
  csv << en::report_csv(report);
  std::fputs(en::format_report(report).c_str(), stdout);
  std::printf("wrote %s\n", csv_path.string().c_str());
  return 0;
}

int cmd_trajectory(const CommonOpts& opts, bool use_oracle,
                   const std::string& checkpoint) {
  const hn::RunConfig cfg = resolve_config(opts);
  if (use_oracle == !checkpoint.empty()) {
    throw hn::ConfigError(
        "dump-trajectory needs exactly one of --oracle or --checkpoint");
  }
  hn::dump_trajectory(cfg, checkpoint, opts.out);
  std::printf(
      "wrote %s\n",
      (std::filesystem::path(opts.out) / "trajectory.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking-network grasp control pipeline"};
  app.require_subcommand(1);

  CommonOpts train_opts, eval_opts, ablate_opts, energy_opts, traj_opts;
  std::string eval_checkpoint;
  int eval_stage = 3;
  EnergyOpts eo;
  bool traj_oracle = false;
  std::string traj_checkpoint;

  CLI::App* train_cmd = app.add_subcommand("train", "curriculum training run");
  add_common(*train_cmd, train_opts);

  CLI::App* eval_cmd =
      app.add_subcommand("eval", "evaluate a checkpoint over repeated trials");
  add_common(*eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")
      ->required();
  eval_cmd->add_option("--stage", eval_stage, "curriculum stage criterion")
      ->capture_default_str();

  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "2x2 model/mode grid with a shared seed");
  add_common(*ablate_cmd, ablate_opts);

  CLI::App* energy_cmd = app.add_subcommand(
      "energy-report", "operation-level energy model comparison");
  add_common(*energy_cmd, energy_opts);
  energy_cmd->add_option("--r", eo.r, "hidden spike rate")
      ->capture_default_str();
  energy_cmd->add_option("--r-mem", eo.r_mem, "output membrane activity")
      ->capture_default_str();
  energy_cmd->add_option("--r-in", eo.r_in, "ann input nonzero fraction")
      ->capture_default_str();
  energy_cmd->add_option("--r-out", eo.r_out, "ann hidden nonzero fraction")
      ->capture_default_str();
  energy_cmd->add_option("--batch", eo.batch, "charged batch size B")
      ->capture_default_str();
  energy_cmd->add_option("--window", eo.window, "charged timesteps T")
      ->capture_default_str();
  energy_cmd->add_option("--n-in", eo.n_in, "input width")
      ->capture_default_str();
  energy_cmd->add_option("--n-hidden", eo.n_hidden, "hidden width")
      ->capture_default_str();
  energy_cmd->add_option("--n-out", eo.n_out, "output width")
      ->capture_default_str();
  energy_cmd->add_option("--snn-trace", eo.snn_trace, "activity trace file");
  energy_cmd->add_option("--ann-trace", eo.ann_trace, "activity trace file");
  energy_cmd->add_option("--snn-checkpoint", eo.snn_checkpoint,
                         "measure activity of this checkpoint");
  energy_cmd->add_option("--ann-checkpoint", eo.ann_checkpoint,
                         "measure activity of this checkpoint");
  energy_cmd->add_option("--save-snn-trace", eo.save_snn_trace,
                         "write the measured snn trace here");
  energy_cmd->add_option("--save-ann-trace", eo.save_ann_trace,
                         "write the measured ann trace here");

  CLI::App* traj_cmd = app.add_subcommand(
      "dump-trajectory", "write one deterministic episode as csv");
  add_common(*traj_cmd, traj_opts);
  traj_cmd->add_flag("--oracle", traj_oracle, "drive with the scripted oracle");
  traj_cmd->add_option("--checkpoint", traj_checkpoint,
                       "drive with this checkpoint");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) return cmd_train(train_opts);
    if (eval_cmd->parsed()) return cmd_eval(eval_opts, eval_checkpoint, eval_stage);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_opts);
    if (energy_cmd->parsed()) return cmd_energy(energy_opts, eo);
    if (traj_cmd->parsed())
      return cmd_trajectory(traj_opts, traj_oracle, traj_checkpoint);
  } catch (const hn::ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  } catch (const hn::IoError& err) {
    std::fprintf(stderr, "io error: %s\n", err.what());
    return kExitIo;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitSoftware;
  }
  return kExitSoftware;
}
