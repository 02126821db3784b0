#pragma once

// Clipped-surrogate policy optimization over the spiking actor-critic (or its
// ANN twin). Rollouts are recollected through the live network during the
// update epochs; only observations, actions, old log-probs, rewards, values
// and done flags are stored.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spikegrasp/checkpoint.hpp"
#include "spikegrasp/env.hpp"
#include "spikegrasp/gae.hpp"
#include "spikegrasp/reward.hpp"
#include "spikegrasp/snn.hpp"

namespace spikegrasp::ppo {

struct PpoConfig {
  double discount = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  int epochs = 4;
  int minibatch = 512;
  double learning_rate = 3e-4;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  int horizon = 64;
  double value_scale = 25.0;  // gain between raw value head and value estimate
  double log_std_min = -5.0;
  double log_std_max = 1.0;
  // Training-side floor on per-step rewards, applied by compute_gae (the
  // buffer and all reported statistics keep the untouched values). The
  // hover penalty is an unbounded exponential; at small env counts its tail
  // dominates the advantage scale and destabilizes the update. 0 disables.
  double reward_floor = 5.0;
  // Stop the epoch loop once the mean sampled KL of a minibatch exceeds
  // 1.5x this target. Keeps the update near the trust region when the
  // surrogate gradient is noisy. 0 (the default) disables: with surrogate
  // gradients the sampled KL is noisy enough that early stopping starves
  // the update more than it protects it.
  double target_kl = 0.0;
  // End-of-run targets for linear schedules over the training run. The
  // driver interpolates from entropy_coef (resp. learning_rate) at the
  // first update to these at the last. Negative disables a schedule.
  // Annealing the entropy bonus matters for the spiking policy: the bonus
  // puts a constant upward drift on log_std that the noisier surrogate
  // policy gradient cannot hold back late in training, so exploration
  // noise grows just when the policy needs to commit.
  double entropy_final = -1.0;
  double lr_final = -1.0;
  // Exploration decay: when > 0, the driver anneals the log_std ceiling
  // linearly from log_std_max down to ln(sigma_final) across the run, so
  // action noise is forced to shrink on schedule even when the gradient on
  // log_std is too noisy to shrink it. Near-zero action noise is what makes
  // holding station inside a tight success radius learnable at all; free
  // exploration early plus forced commitment late. <= 0 disables.
  double sigma_final = -1.0;

  void validate() const;  // throws std::invalid_argument
};

// First-moment/second-moment adaptive optimizer state over the flattened
// parameter list (w_in, w_out, log_std).
struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t steps = 0;
  std::vector<double> m_w_in, v_w_in;
  std::vector<double> m_w_out, v_w_out;
  std::vector<double> m_log_std, v_log_std;

  void init(const snn::NetworkSizes& sizes);
  // One update with the given learning rate; grads are consumed as-is.
  void step(snn::SpikingNetwork& net, const snn::Gradients& grads, double lr);
};

// Unified forward/backward over the two model kinds, plus the value gain.
struct Policy {
  snn::ModelKind kind = snn::ModelKind::Snn;
  snn::SpikingNetwork net;
  int window = 8;          // simulation steps per decision (spiking model)
  double value_scale = 25.0;

  struct Record {
    snn::ForwardRecord snn;
    snn::AnnRecord ann;
  };

  // Deterministic readout: action means (raw) and scaled value estimate.
  snn::ForwardResult forward(std::span<const double> obs, Record& rec) const;
  // Accumulates gradients; d_value is with respect to the scaled estimate.
  void backward(const Record& rec, std::span<const double> d_action_mean,
                double d_value, snn::Gradients& grads,
                snn::BpttScratch& scratch) const;
};

struct RolloutBuffer {
  int horizon = 0;
  int num_envs = 0;
  int obs_dim = 0;
  int action_dim = 0;
  // Layout: [t][env][dim] for obs/actions, [t][env] for scalars.
  std::vector<double> obs;
  std::vector<double> actions;    // unsquashed gaussian samples
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<std::uint8_t> dones;
  std::vector<double> bootstrap;  // [env] value of the post-rollout state
  std::vector<double> advantages;
  std::vector<double> returns;

  void resize(int horizon, int num_envs, int obs_dim, int action_dim);
  std::size_t sample_count() const {
    return static_cast<std::size_t>(horizon) * static_cast<std::size_t>(num_envs);
  }
};

struct CollectStats {
  double mean_reward = 0.0;       // mean per-step reward over the rollout
  double hidden_spike_rate = 0.0; // mean hidden firing rate over all forwards
  int episodes_finished = 0;
};

// Rolls `horizon` steps across all environments. Environments reset in place
// at episode boundaries. The action written to the buffer is the raw gaussian
// sample; the environment receives it clamped to [-1, 1]. Per-step reward is
// stage_reward minus the time penalty. Throws std::runtime_error if the
// policy emits a non-finite output.
CollectStats collect(std::vector<env::WorldState>& states,
                     std::vector<Rng>& env_rngs, const Policy& policy,
                     const env::EnvConfig& env_cfg,
                     const rew::RewardParams& reward_params,
                     const rew::CurriculumStage& stage, env::Mode mode,
                     Rng& action_rng, RolloutBuffer& buffer);

// Fills buffer.advantages / buffer.returns from rewards, values and dones.
void compute_gae(RolloutBuffer& buffer, const PpoConfig& cfg);

struct UpdateStats {
  double policy_loss = 0.0;  // minus the mean clipped surrogate
  double value_loss = 0.0;
  double entropy = 0.0;
  double kl = 0.0;           // mean(old_logp - new_logp)
  double clip_fraction = 0.0;
  double grad_norm = 0.0;    // pre-clip norm, averaged over minibatches
};

// Clipped-surrogate building block: min(ratio * adv, clamp(ratio) * adv).
double clipped_surrogate(double ratio, double advantage, double clip_ratio);

// One full update (epochs x minibatches) over the buffer. Advantages are
// normalized per minibatch. Value loss is clipped against the collected
// values. Gradients are global-norm clipped, then applied with Adam; log_std
// is clamped to [log_std_min, log_std_max] after each step.
UpdateStats ppo_update(Policy& policy, Adam& adam, RolloutBuffer& buffer,
                       const PpoConfig& cfg, Rng& shuffle_rng);

// Diagonal gaussian log density of `action` under (mean, exp(log_std)).
double gaussian_log_prob(std::span<const double> action,
                         std::span<const double> mean,
                         std::span<const double> log_std);

}  // namespace spikegrasp::ppo
