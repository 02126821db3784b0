#include "spikegrasp/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "spikegrasp/checkpoint.hpp"
#include "spikegrasp/geom.hpp"
#include "spikegrasp/kernels.hpp"
#include "spikegrasp/oracle.hpp"
#include "spikegrasp/rng.hpp"

namespace spikegrasp::harness {
namespace {

// Seed stream layout under the master seed. Training environments use indices
// [0, num_envs); everything else lives in disjoint high ranges.
constexpr std::uint64_t kActionStream = 1u << 20;
constexpr std::uint64_t kShuffleStream = (1u << 20) + 1;
constexpr std::uint64_t kInitStream = (1u << 20) + 2;
constexpr std::uint64_t kTrainEvalBase = 2u << 20;
constexpr std::uint64_t kEvalTrialBase = 3'000'000;
constexpr std::uint64_t kTrajectoryStream = 4'000'000;
constexpr std::uint64_t kTraceStream = 5'000'000;

std::string g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

env::Action to_action(std::span<const double> mean) {
  env::Action a;  // step() clamps every component
  a.v_cmd = {mean[0], mean[1], mean[2]};
  a.yaw_rate = mean[3];
  a.pitch_rate = mean[4];
  a.gap_rate = mean[5];
  return a;
}

}  // namespace

void resolve_kernels(const RunConfig& cfg) {
  if (cfg.kernels == "auto") return;
  kern::Backend backend;
  if (!kern::parse_backend(cfg.kernels, backend)) {
    throw ConfigError("unknown kernel backend: " + cfg.kernels);
  }
  kern::set_active(backend);  // throws if unavailable on this machine
}

ppo::Policy make_policy(const RunConfig& cfg) {
  Rng init_rng(derive_seed(cfg.seed, kInitStream));
  ppo::Policy policy;
  policy.kind = cfg.model;
  policy.window = cfg.snn_window;
  policy.value_scale = cfg.ppo.value_scale;
  policy.net = snn::make_network(cfg.network_sizes(), cfg.hidden_params(),
                                 cfg.output_params(), cfg.log_std_init,
                                 init_rng);
  policy.net.surrogate_alpha = cfg.surrogate_alpha;
  return policy;
}

ppo::Policy policy_from_checkpoint(const RunConfig& cfg,
                                   const std::filesystem::path& path) {
  snn::Checkpoint ckpt = snn::load_checkpoint(path);
  ppo::Policy policy;
  policy.kind = ckpt.kind;
  policy.window = cfg.snn_window;
  policy.value_scale = cfg.ppo.value_scale;
  policy.net = std::move(ckpt.net);
  return policy;
}

EvalSummary evaluate(const ppo::Policy& policy, const RunConfig& cfg,
                     const rew::CurriculumStage& stage,
                     std::uint64_t stream_base, int n_envs,
                     int episodes_per_env) {
  const rew::CurriculumStage grasp_stage =
      rew::make_stage(rew::StageId::SkillLearning, true);
  const rew::CurriculumStage lift_stage =
      rew::make_stage(rew::StageId::TaskExecution, false);
  const int stage_index = static_cast<int>(stage.id);

  ppo::Policy::Record rec;
  EvalSummary sum;
  int episodes = 0;
  for (int e = 0; e < n_envs; ++e) {
    Rng rng(derive_seed(cfg.seed, stream_base + static_cast<std::uint64_t>(e)));
    for (int ep = 0; ep < episodes_per_env; ++ep) {
      env::WorldState state = env::reset(cfg.env, rng);
      bool hit_success = false, hit_grasp = false;
      bool hit_lift = false, hit_strong = false;
      double ep_reward = 0.0;
      for (int t = 0; t < cfg.env.episode_len; ++t) {
        const env::Observation obs =
            env::observe(state, cfg.mode, stage_index, cfg.env);
        const snn::ForwardResult out = policy.forward(obs.values, rec);
        state = env::step(state, to_action(out.action_mean), cfg.env);
        const env::TactileFeatures tact = env::tactile_features(state);
        ep_reward += rew::stage_reward(stage, state, tact, cfg.reward) -
                     cfg.reward.time_penalty;
        hit_success |= rew::success(stage, state, tact, cfg.reward);
        hit_grasp |= rew::success(grasp_stage, state, tact, cfg.reward);
        hit_lift |= rew::success(lift_stage, state, tact, cfg.reward);
        hit_strong |= rew::lift_strong(state, cfg.reward);
      }
      sum.success_rate += hit_success ? 1.0 : 0.0;
      sum.grasp_rate += hit_grasp ? 1.0 : 0.0;
      sum.lift_rate += hit_lift ? 1.0 : 0.0;
      sum.strong_rate += hit_strong ? 1.0 : 0.0;
      sum.mean_reward += ep_reward;
      ++episodes;
    }
  }
  if (episodes > 0) {
    sum.success_rate /= episodes;
    sum.grasp_rate /= episodes;
    sum.lift_rate /= episodes;
    sum.strong_rate /= episodes;
    sum.mean_reward /= episodes;
  }
  return sum;
}

TrainResult train(const RunConfig& cfg, const std::filesystem::path& out_dir,
                  int stop_after_advances) {
  cfg.validate();
  resolve_kernels(cfg);
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream manifest = open_out(out_dir / "manifest.txt");
    manifest << "# run manifest; loadable as a config file\n";
    manifest << "# kernels resolved to: "
             << kern::backend_name(kern::active_backend()) << "\n";
    manifest << dump_config(cfg);
  }

  ppo::Policy policy = make_policy(cfg);
  ppo::Adam adam;
  adam.init(policy.net.sizes);

  std::vector<Rng> env_rngs;
  std::vector<env::WorldState> states;
  env_rngs.reserve(cfg.num_envs);
  states.reserve(cfg.num_envs);
  for (int i = 0; i < cfg.num_envs; ++i) {
    env_rngs.emplace_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    states.push_back(env::reset(cfg.env, env_rngs.back()));
    // Stagger initial episode phases across the fleet. Synchronized resets
    // make each rollout a single slice of the episode (all early, then all
    // late, cycling every episode_len / horizon updates), so value targets
    // and minibatch advantage statistics swing with that cycle instead of
    // staying stationary. Spreading the first timeout evenly removes the
    // swing; only the very first episode of each env is shortened.
    states.back().t = (i * cfg.env.episode_len) / cfg.num_envs;
  }
  Rng action_rng(derive_seed(cfg.seed, kActionStream));
  Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream));

  ppo::RolloutBuffer buffer;
  buffer.resize(cfg.ppo.horizon, cfg.num_envs, env::kObsDim,
                policy.net.action_dim());

  rew::CurriculumState curriculum;
  std::ofstream metrics = open_out(out_dir / "metrics.csv");
  metrics << "update,stage,mean_reward,success_rate,grasp_success,"
             "lift_success,policy_loss,value_loss,kl,clip_frac,"
             "hidden_spike_rate,sigma\n";

  TrainResult res;
  EvalSummary latest;
  bool evaluated = false;
  int advances = 0;

  ppo::PpoConfig sched = cfg.ppo;
  for (int u = 1; u <= cfg.updates; ++u) {
    const rew::CurriculumStage stage = curriculum.current(cfg.curriculum);
    // Linear schedules: interpolate toward the configured end-of-run
    // targets; a negative target leaves the coefficient constant.
    const double frac =
        cfg.updates > 1 ? static_cast<double>(u - 1) / (cfg.updates - 1) : 0.0;
    if (cfg.ppo.entropy_final >= 0.0) {
      sched.entropy_coef = cfg.ppo.entropy_coef +
                           frac * (cfg.ppo.entropy_final - cfg.ppo.entropy_coef);
    }
    if (cfg.ppo.lr_final >= 0.0) {
      sched.learning_rate =
          cfg.ppo.learning_rate +
          frac * (cfg.ppo.lr_final - cfg.ppo.learning_rate);
    }
    if (cfg.ppo.sigma_final > 0.0) {
      sched.log_std_max =
          cfg.ppo.log_std_max +
          frac * (std::log(cfg.ppo.sigma_final) - cfg.ppo.log_std_max);
    }
    const ppo::CollectStats cs =
        ppo::collect(states, env_rngs, policy, cfg.env, cfg.reward, stage,
                     cfg.mode, action_rng, buffer);
    ppo::compute_gae(buffer, sched);
    const ppo::UpdateStats us =
        ppo::ppo_update(policy, adam, buffer, sched, shuffle_rng);
    curriculum.progress.updates_in_stage += 1;

    bool advanced = false;
    if (u % cfg.eval_interval == 0) {
      latest = evaluate(policy, cfg, curriculum.current(cfg.curriculum),
                        kTrainEvalBase + static_cast<std::uint64_t>(u) *
                                             static_cast<std::uint64_t>(
                                                 cfg.eval_envs),
                        cfg.eval_envs, cfg.eval_episodes);
      evaluated = true;
      curriculum.progress.record_rate(latest.success_rate,
                                      cfg.curriculum.window);
      advanced = curriculum.try_advance(cfg.curriculum);
      if (advanced) {
        ++advances;
        const std::string name =
            "checkpoint_stage" +
            std::to_string(static_cast<int>(curriculum.stage) + 1) + ".txt";
        snn::save_checkpoint(out_dir / name, {cfg.model, policy.net});
      }
    }

    double sigma = 0.0;
    for (const double ls : policy.net.log_std) sigma += std::exp(ls);
    sigma /= static_cast<double>(policy.net.log_std.size());

    metrics << u << "," << static_cast<int>(stage.id) + 1 << ","
            << g(cs.mean_reward) << "," << g(latest.success_rate) << ","
            << g(latest.grasp_rate) << "," << g(latest.lift_rate) << ","
            << g(us.policy_loss) << "," << g(us.value_loss) << "," << g(us.kl)
            << "," << g(us.clip_fraction) << "," << g(cs.hidden_spike_rate)
            << "," << g(sigma) << "\n";
    metrics.flush();

    res.updates_run = u;
    if (advanced && stop_after_advances > 0 && advances >= stop_after_advances) {
      break;
    }
  }

  if (!evaluated) {
    latest = evaluate(policy, cfg, curriculum.current(cfg.curriculum),
                      kTrainEvalBase, cfg.eval_envs, cfg.eval_episodes);
  }

  res.final_stage = curriculum.stage;
  res.stage_advances = advances;
  res.final_eval = latest;
  res.checkpoint = out_dir / "checkpoint_final.txt";
  snn::save_checkpoint(res.checkpoint, {cfg.model, policy.net});
  return res;
}

std::vector<EvalSummary> run_eval(const RunConfig& cfg,
                                  const std::filesystem::path& checkpoint,
                                  const std::filesystem::path& out_dir,
                                  rew::StageId stage_id) {
  cfg.validate();
  resolve_kernels(cfg);
  std::filesystem::create_directories(out_dir);
  const ppo::Policy policy = policy_from_checkpoint(cfg, checkpoint);
  const rew::CurriculumStage stage = rew::make_stage(stage_id, true);

  std::ofstream out = open_out(out_dir / "trials.csv");
  out << "trial,stage,success_rate,grasp_rate,lift_rate,strong_rate,"
         "mean_reward\n";
  std::vector<EvalSummary> trials;
  for (int t = 0; t < cfg.eval_trials; ++t) {
    const EvalSummary ev = evaluate(
        policy, cfg, stage,
        kEvalTrialBase + static_cast<std::uint64_t>(t) *
                             static_cast<std::uint64_t>(cfg.eval_envs),
        cfg.eval_envs, cfg.eval_episodes);
    out << t << "," << static_cast<int>(stage.id) + 1 << ","
        << g(ev.success_rate) << "," << g(ev.grasp_rate) << ","
        << g(ev.lift_rate) << "," << g(ev.strong_rate) << ","
        << g(ev.mean_reward) << "\n";
    trials.push_back(ev);
  }
  return trials;
}

std::vector<AblateRow> run_ablate(const RunConfig& cfg,
                                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out = open_out(out_dir / "ablate.csv");
  out << "model,mode,seed,updates,final_stage,success_rate,grasp_rate,"
         "lift_rate,mean_reward\n";

  std::vector<AblateRow> rows;
  for (const snn::ModelKind model : {snn::ModelKind::Snn, snn::ModelKind::Ann}) {
    for (const env::Mode mode : {env::Mode::Multimodal, env::Mode::Unimodal}) {
      RunConfig cell = cfg;
      cell.model = model;
      cell.mode = mode;
      const std::string cell_name =
          std::string(snn::model_name(model)) + "_" + env::mode_name(mode);
      const TrainResult r = train(cell, out_dir / cell_name);
      out << snn::model_name(model) << "," << env::mode_name(mode) << ","
          << cfg.seed << "," << r.updates_run << ","
          << static_cast<int>(r.final_stage) + 1 << ","
          << g(r.final_eval.success_rate) << "," << g(r.final_eval.grasp_rate)
          << "," << g(r.final_eval.lift_rate) << ","
          << g(r.final_eval.mean_reward) << "\n";
      out.flush();
      rows.push_back({model, mode, r});
    }
  }
  return rows;
}

void dump_trajectory(const RunConfig& cfg,
                     const std::filesystem::path& checkpoint,
                     const std::filesystem::path& out_dir) {
  cfg.validate();
  resolve_kernels(cfg);
  std::filesystem::create_directories(out_dir);
  const bool scripted = checkpoint.empty();
  ppo::Policy policy;
  if (!scripted) policy = policy_from_checkpoint(cfg, checkpoint);

  Rng rng(derive_seed(cfg.seed, kTrajectoryStream));
  env::WorldState state = env::reset(cfg.env, rng);
  const int stage_index = static_cast<int>(rew::StageId::TaskExecution);

  std::ofstream out = open_out(out_dir / "trajectory.csv");
  out << "t,p_mid_x,p_mid_y,p_mid_z,p_obj_x,p_obj_y,p_obj_z,gap_eef,"
         "norm_lf,norm_rf,h\n";
  ppo::Policy::Record rec;
  const auto row = [&out](const env::WorldState& s) {
    out << s.t << "," << g(s.p_mid.x) << "," << g(s.p_mid.y) << ","
        << g(s.p_mid.z) << "," << g(s.p_obj.x) << "," << g(s.p_obj.y) << ","
        << g(s.p_obj.z) << "," << g(s.gap_eef) << "," << g(norm(s.f_lf)) << ","
        << g(norm(s.f_rf)) << "," << g(s.h) << "\n";
  };
  row(state);
  for (int t = 0; t < cfg.env.episode_len; ++t) {
    env::Action action;
    if (scripted) {
      action = oracle::oracle_action(state, cfg.env);
    } else {
      const env::Observation obs =
          env::observe(state, cfg.mode, stage_index, cfg.env);
      action = to_action(policy.forward(obs.values, rec).action_mean);
    }
    state = env::step(state, action, cfg.env);
    row(state);
  }
}

namespace {

energy::ActivityTrace collect_trace(const snn::SpikingNetwork& net,
                                    const RunConfig& cfg, std::int64_t batch,
                                    int window, energy::TraceKind kind) {
  if (batch < 1) throw std::invalid_argument("trace batch must be >= 1");
  if (window < 1) throw std::invalid_argument("trace window must be >= 1");
  energy::ActivityTrace trace;
  trace.kind = kind;
  trace.sizes = net.sizes;
  trace.window = window;

  Rng rng(derive_seed(cfg.seed, kTraceStream));
  env::WorldState state = env::reset(cfg.env, rng);
  const int stage_index = static_cast<int>(rew::StageId::TaskExecution);

  snn::ForwardRecord act_rec, energy_rec;
  snn::AnnRecord ann_rec;
  while (trace.samples < batch) {
    const env::Observation obs =
        env::observe(state, cfg.mode, stage_index, cfg.env);
    snn::ForwardResult act;
    if (kind == energy::TraceKind::Snn) {
      // Act at the control window; charge a separate pass at the energy
      // window so the measured rates match the reported workload.
      act = snn::forward(net, obs.values, cfg.snn_window, act_rec);
      const snn::ForwardResult charged =
          snn::forward(net, obs.values, window, energy_rec);
      trace.add_snn(charged, window);
    } else {
      act = snn::ann_forward(net, obs.values, ann_rec);
      trace.add_ann(ann_rec);
    }
    state = env::step(state, to_action(act.action_mean), cfg.env);
    if (state.t >= cfg.env.episode_len) state = env::reset(cfg.env, rng);
  }
  return trace;
}

}  // namespace

energy::ActivityTrace collect_snn_trace(const snn::SpikingNetwork& net,
                                        const RunConfig& cfg,
                                        std::int64_t batch, int window) {
  return collect_trace(net, cfg, batch, window, energy::TraceKind::Snn);
}

energy::ActivityTrace collect_ann_trace(const snn::SpikingNetwork& net,
                                        const RunConfig& cfg,
                                        std::int64_t batch, int window) {
  return collect_trace(net, cfg, batch, window, energy::TraceKind::Ann);
}

}  // namespace spikegrasp::harness
