#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "spikegrasp/config.hpp"
#include "spikegrasp/env.hpp"
#include "spikegrasp/oracle.hpp"
#include "spikegrasp/runner.hpp"

using namespace spikegrasp;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int line_count(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

// Small, fast config for smoke-level training runs.
harness::RunConfig tiny_config() {
  harness::RunConfig cfg;
  cfg.num_envs = 2;
  cfg.updates = 3;
  cfg.eval_envs = 2;
  cfg.eval_interval = 2;
  cfg.eval_episodes = 1;
  cfg.eval_trials = 2;
  cfg.snn_hidden = 16;
  cfg.snn_window = 4;
  cfg.env.episode_len = 20;
  cfg.ppo.horizon = 10;
  cfg.ppo.minibatch = 10;
  cfg.ppo.epochs = 1;
  return cfg;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("oracle: grasps and lifts from scripted control") {
  harness::RunConfig cfg;
  int lifted = 0;
  int grasped = 0;
  const int episodes = 20;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(1234, static_cast<std::uint64_t>(e)));
    env::WorldState state = env::reset(cfg.env, rng);
    bool lift_seen = false;
    bool grasp_seen = false;
    for (int t = 0; t < cfg.env.episode_len; ++t) {
      const env::Action act = oracle::oracle_action(state, cfg.env);
      state = env::step(state, act, cfg.env);
      const env::TactileFeatures tact = env::tactile_features(state);
      grasp_seen = grasp_seen ||
                   rew::success(rew::make_stage(rew::StageId::SkillLearning, true),
                                state, tact, cfg.reward);
      lift_seen = lift_seen ||
                  rew::success(rew::make_stage(rew::StageId::TaskExecution, false),
                               state, tact, cfg.reward);
    }
    grasped += grasp_seen;
    lifted += lift_seen;
  }
  // The scripted controller is the physics oracle: it must beat the bar the
  // acceptance suite holds it to, with margin at this sample size.
  CHECK(grasped >= 19);
  CHECK(lifted >= 19);
}

TEST_CASE("train: writes manifest, metrics and checkpoint; rerun is identical") {
  const harness::RunConfig cfg = tiny_config();
  const fs::path dir_a = fresh_dir("spikegrasp_train_a");
  const fs::path dir_b = fresh_dir("spikegrasp_train_b");

  const harness::TrainResult res_a = harness::train(cfg, dir_a);
  const harness::TrainResult res_b = harness::train(cfg, dir_b);

  CHECK(res_a.updates_run == cfg.updates);
  CHECK(fs::exists(res_a.checkpoint));

  // The manifest is itself a loadable config that reproduces the run setup.
  const harness::RunConfig manifest =
      harness::load_config(dir_a / "manifest.txt");
  CHECK(manifest.seed == cfg.seed);
  CHECK(manifest.num_envs == cfg.num_envs);
  CHECK(manifest.ppo.horizon == cfg.ppo.horizon);

  const std::string metrics_a = slurp(dir_a / "metrics.csv");
  const std::string metrics_b = slurp(dir_b / "metrics.csv");
  CHECK(metrics_a == metrics_b);
  CHECK(line_count(metrics_a) == cfg.updates + 1);  // header + one per update
  CHECK(metrics_a.rfind("update,stage,mean_reward,success_rate", 0) == 0);

  const std::string ckpt_a = slurp(res_a.checkpoint);
  const std::string ckpt_b = slurp(res_b.checkpoint);
  CHECK(ckpt_a == ckpt_b);

  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("evaluate: deterministic and stream-dependent") {
  harness::RunConfig cfg = tiny_config();
  const ppo::Policy policy = harness::make_policy(cfg);
  const rew::CurriculumStage stage =
      rew::make_stage(rew::StageId::ExplorationOriented, false);
  const harness::EvalSummary a =
      harness::evaluate(policy, cfg, stage, 3'000'000, 4, 2);
  const harness::EvalSummary b =
      harness::evaluate(policy, cfg, stage, 3'000'000, 4, 2);
  CHECK(a.mean_reward == b.mean_reward);
  CHECK(a.success_rate == b.success_rate);
  CHECK(a.grasp_rate == b.grasp_rate);
  CHECK(a.lift_rate == b.lift_rate);
  const harness::EvalSummary c =
      harness::evaluate(policy, cfg, stage, 3'000'004, 4, 2);
  CHECK(a.mean_reward != c.mean_reward);  // different episodes, different mean
  for (double rate : {a.success_rate, a.grasp_rate, a.lift_rate,
                      a.strong_rate}) {
    CHECK(rate >= 0.0);
    CHECK(rate <= 1.0);
  }
}

TEST_CASE("run_eval: one row per trial, summaries match the file") {
  harness::RunConfig cfg = tiny_config();
  const fs::path dir = fresh_dir("spikegrasp_eval");
  const harness::TrainResult trained = harness::train(cfg, dir);
  const std::vector<harness::EvalSummary> trials = harness::run_eval(
      cfg, trained.checkpoint, dir, rew::StageId::ExplorationOriented);
  CHECK(trials.size() == static_cast<std::size_t>(cfg.eval_trials));
  const std::string csv = slurp(dir / "trials.csv");
  CHECK(line_count(csv) == cfg.eval_trials + 1);
  CHECK(csv.rfind("trial,stage,success_rate", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("ablate: four cells, shared seed, unimodal rows differ") {
  harness::RunConfig cfg = tiny_config();
  cfg.updates = 2;
  cfg.eval_interval = 2;
  const fs::path dir = fresh_dir("spikegrasp_ablate");
  const std::vector<harness::AblateRow> rows = harness::run_ablate(cfg, dir);
  REQUIRE(rows.size() == 4);
  bool seen[2][2] = {};
  for (const harness::AblateRow& row : rows) {
    seen[row.model == snn::ModelKind::Ann][row.mode == env::Mode::Unimodal] =
        true;
    CHECK(row.result.updates_run == cfg.updates);
  }
  CHECK(seen[0][0]);
  CHECK(seen[0][1]);
  CHECK(seen[1][0]);
  CHECK(seen[1][1]);
  const std::string csv = slurp(dir / "ablate.csv");
  CHECK(line_count(csv) == 5);
  CHECK(csv.find("snn,multimodal") != std::string::npos);
  CHECK(csv.find("ann,unimodal") != std::string::npos);
  for (const char* cell :
       {"snn_multimodal", "snn_unimodal", "ann_multimodal", "ann_unimodal"}) {
    CHECK(fs::exists(dir / cell / "metrics.csv"));
  }
  fs::remove_all(dir);
}

TEST_CASE("dump_trajectory: well-formed csv from oracle and checkpoint") {
  harness::RunConfig cfg = tiny_config();
  const fs::path dir = fresh_dir("spikegrasp_traj");

  harness::dump_trajectory(cfg, {}, dir);  // empty checkpoint: oracle episode
  const std::string oracle_csv = slurp(dir / "trajectory.csv");
  CHECK(line_count(oracle_csv) == cfg.env.episode_len + 2);  // header + t=0 row
  CHECK(oracle_csv.rfind("t,p_mid_x", 0) == 0);

  const harness::TrainResult trained = harness::train(cfg, dir);
  harness::dump_trajectory(cfg, trained.checkpoint, dir);
  const std::string policy_csv = slurp(dir / "trajectory.csv");
  CHECK(line_count(policy_csv) == cfg.env.episode_len + 2);
  CHECK(policy_csv != oracle_csv);
  fs::remove_all(dir);
}

TEST_CASE("activity traces drive the energy model end to end") {
  harness::RunConfig cfg = tiny_config();
  const ppo::Policy policy = harness::make_policy(cfg);
  const energy::ActivityTrace snn_trace =
      harness::collect_snn_trace(policy.net, cfg, 32, 12);
  CHECK(snn_trace.kind == energy::TraceKind::Snn);
  CHECK(snn_trace.samples == 32);
  CHECK(snn_trace.window == 12);
  const energy::Rates rates = energy::spike_rates(snn_trace);
  CHECK(rates.r >= 0.0);
  CHECK(rates.r <= 1.0);
  CHECK(rates.r_mem >= 0.0);
  CHECK(rates.r_mem <= 1.0);
  CHECK(energy::snn_energy_pj(snn_trace, cfg.costs) >= 0.0);

  harness::RunConfig ann_cfg = tiny_config();
  ann_cfg.model = snn::ModelKind::Ann;
  const ppo::Policy ann_policy = harness::make_policy(ann_cfg);
  const energy::ActivityTrace ann_trace =
      harness::collect_ann_trace(ann_policy.net, ann_cfg, 32, 12);
  CHECK(ann_trace.kind == energy::TraceKind::Ann);
  CHECK(ann_trace.samples == 32);
  CHECK(ann_trace.window == 12);
  const energy::Rates arates = energy::spike_rates(ann_trace);
  CHECK(arates.r_in > 0.0);  // observations are never all-zero
  CHECK(arates.r_in <= 1.0);
  CHECK(arates.r_out >= 0.0);
  CHECK(arates.r_out <= 1.0);
}

TEST_CASE("policy_from_checkpoint restores the exact network") {
  harness::RunConfig cfg = tiny_config();
  const fs::path dir = fresh_dir("spikegrasp_restore");
  const harness::TrainResult trained = harness::train(cfg, dir);
  const ppo::Policy restored =
      harness::policy_from_checkpoint(cfg, trained.checkpoint);
  CHECK(restored.kind == cfg.model);
  CHECK(restored.net.sizes.n_hidden == cfg.snn_hidden);

  // A restored policy evaluates identically across loads.
  const rew::CurriculumStage stage =
      rew::make_stage(rew::StageId::ExplorationOriented, false);
  const harness::EvalSummary a =
      harness::evaluate(restored, cfg, stage, 3'000'000, 2, 1);
  const ppo::Policy again =
      harness::policy_from_checkpoint(cfg, trained.checkpoint);
  const harness::EvalSummary b =
      harness::evaluate(again, cfg, stage, 3'000'000, 2, 1);
  CHECK(a.mean_reward == b.mean_reward);
  fs::remove_all(dir);
}

}  // TEST_SUITE
