#pragma once

// Run orchestration: training loops, deterministic evaluation, the 2x2
// model/mode ablation grid, trajectory dumps and activity measurement for the
// energy model. Every artifact (manifest.txt, metrics.csv, checkpoints,
// trials.csv, ablate.csv, trajectory.csv) lands under the given out_dir, and
// reruns with the same seed reproduce them byte for byte.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "spikegrasp/config.hpp"
#include "spikegrasp/energy.hpp"
#include "spikegrasp/ppo.hpp"

namespace spikegrasp::harness {

struct EvalSummary {
  double success_rate = 0.0;  // stage criterion, latched at any step
  double grasp_rate = 0.0;    // tactile grasp criterion
  double lift_rate = 0.0;     // h > h1
  double strong_rate = 0.0;   // h > h2
  double mean_reward = 0.0;   // mean per-episode return of the stage reward
};

struct TrainResult {
  int updates_run = 0;
  rew::StageId final_stage = rew::StageId::ExplorationOriented;
  int stage_advances = 0;
  EvalSummary final_eval;
  std::filesystem::path checkpoint;
};

// Fresh policy from the config (network init stream of the master seed).
ppo::Policy make_policy(const RunConfig& cfg);

// Policy wrapping a checkpointed network; the model kind comes from the file.
ppo::Policy policy_from_checkpoint(const RunConfig& cfg,
                                   const std::filesystem::path& path);

// Applies cfg.kernels ("auto" keeps runtime detection).
void resolve_kernels(const RunConfig& cfg);

// Deterministic evaluation: episodes_per_env full episodes in each of n_envs
// fresh environments, mean actions, success latched at any step. stream_base
// offsets the per-environment seed streams under the master seed.
EvalSummary evaluate(const ppo::Policy& policy, const RunConfig& cfg,
                     const rew::CurriculumStage& stage,
                     std::uint64_t stream_base, int n_envs,
                     int episodes_per_env);

// Full curriculum training run. stop_after_advances > 0 ends the run early
// once that many stage transitions have happened (acceptance suite hook).
TrainResult train(const RunConfig& cfg, const std::filesystem::path& out_dir,
                  int stop_after_advances = 0);

// cfg.eval_trials independent evaluations of a checkpoint at the given stage;
// writes trials.csv and returns the per-trial summaries.
std::vector<EvalSummary> run_eval(const RunConfig& cfg,
                                  const std::filesystem::path& checkpoint,
                                  const std::filesystem::path& out_dir,
                                  rew::StageId stage);

struct AblateRow {
  snn::ModelKind model;
  env::Mode mode;
  TrainResult result;
};

// Trains all four model/mode cells with the shared master seed, each under
// out_dir/<model>_<mode>; summarizes into out_dir/ablate.csv.
std::vector<AblateRow> run_ablate(const RunConfig& cfg,
                                  const std::filesystem::path& out_dir);

// One deterministic episode, driven by the oracle controller when
// `checkpoint` is empty, otherwise by the checkpointed policy; writes
// trajectory.csv under out_dir.
void dump_trajectory(const RunConfig& cfg,
                     const std::filesystem::path& checkpoint,
                     const std::filesystem::path& out_dir);

// Activity measurement: run the network in the environment (mean actions at
// the control window) and re-run every visited observation at `window`
// timesteps, accumulating `batch` trace samples.
energy::ActivityTrace collect_snn_trace(const snn::SpikingNetwork& net,
                                        const RunConfig& cfg,
                                        std::int64_t batch, int window);
// The ANN twin has no timestep loop; `window` is recorded as the charged T.
energy::ActivityTrace collect_ann_trace(const snn::SpikingNetwork& net,
                                        const RunConfig& cfg,
                                        std::int64_t batch, int window);

}  // namespace spikegrasp::harness
