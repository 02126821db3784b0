#include "spikegrasp/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spikegrasp::ppo {
namespace {

constexpr double kLogTwoPi = 1.8378770664093453;  // log(2*pi)

void fisher_yates(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

void PpoConfig::validate() const {
  auto bad = [](const char* what) {
    throw std::invalid_argument(std::string("ppo config: ") + what);
  };
  if (!(discount >= 0.0 && discount <= 1.0)) bad("discount must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) bad("gae lambda must be in [0, 1]");
  if (!(clip_ratio > 0.0)) bad("clip ratio must be > 0");
  if (epochs < 1) bad("epochs must be >= 1");
  if (minibatch < 1) bad("minibatch must be >= 1");
  if (!(learning_rate >= 0.0)) bad("learning rate must be >= 0");
  if (value_coef < 0.0) bad("value coef must be >= 0");
  if (entropy_coef < 0.0) bad("entropy coef must be >= 0");
  if (!(max_grad_norm > 0.0)) bad("max grad norm must be > 0");
  if (horizon < 1) bad("horizon must be >= 1");
  if (!(value_scale > 0.0)) bad("value scale must be > 0");
  if (!(log_std_min < log_std_max)) bad("log_std bounds are inverted");
  if (reward_floor < 0.0) bad("reward floor must be >= 0 (0 disables)");
  if (target_kl < 0.0) bad("target kl must be >= 0 (0 disables)");
  if (std::isnan(entropy_final)) bad("entropy final must not be NaN");
  if (std::isnan(lr_final)) bad("lr final must not be NaN");
  if (sigma_final > 0.0 && !(std::log(sigma_final) > log_std_min)) {
    bad("sigma final must stay above exp(log_std_min)");
  }
}

void Adam::init(const snn::NetworkSizes& sizes) {
  const std::size_t n_in = static_cast<std::size_t>(sizes.n_in) *
                           static_cast<std::size_t>(sizes.n_hidden);
  const std::size_t n_out = static_cast<std::size_t>(sizes.n_hidden) *
                            static_cast<std::size_t>(sizes.n_out);
  const std::size_t n_std = static_cast<std::size_t>(sizes.n_out - 1);
  m_w_in.assign(n_in, 0.0);
  v_w_in.assign(n_in, 0.0);
  m_w_out.assign(n_out, 0.0);
  v_w_out.assign(n_out, 0.0);
  m_log_std.assign(n_std, 0.0);
  v_log_std.assign(n_std, 0.0);
  steps = 0;
}

void Adam::step(snn::SpikingNetwork& net, const snn::Gradients& grads, double lr) {
  if (m_w_in.size() != net.w_in.size() || m_w_out.size() != net.w_out.size() ||
      m_log_std.size() != net.log_std.size()) {
    throw std::invalid_argument("adam: state does not match network");
  }
  ++steps;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
  const auto& k = kern::active();
  k.adam_step(net.w_in.data(), grads.w_in.data(), m_w_in.data(), v_w_in.data(),
              lr, beta1, beta2, eps, bc1, bc2, net.w_in.size());
  k.adam_step(net.w_out.data(), grads.w_out.data(), m_w_out.data(),
              v_w_out.data(), lr, beta1, beta2, eps, bc1, bc2, net.w_out.size());
  k.adam_step(net.log_std.data(), grads.log_std.data(), m_log_std.data(),
              v_log_std.data(), lr, beta1, beta2, eps, bc1, bc2,
              net.log_std.size());
}

snn::ForwardResult Policy::forward(std::span<const double> obs,
                                   Record& rec) const {
  snn::ForwardResult res = kind == snn::ModelKind::Snn
                               ? snn::forward(net, obs, window, rec.snn)
                               : snn::ann_forward(net, obs, rec.ann);
  res.value *= value_scale;
  return res;
}

void Policy::backward(const Record& rec, std::span<const double> d_action_mean,
                      double d_value, snn::Gradients& grads,
                      snn::BpttScratch& scratch) const {
  const double d_raw = d_value * value_scale;
  if (kind == snn::ModelKind::Snn) {
    snn::backward(net, rec.snn, d_action_mean, d_raw, grads, scratch);
  } else {
    snn::ann_backward(net, rec.ann, d_action_mean, d_raw, grads, scratch);
  }
}

void RolloutBuffer::resize(int horizon_, int num_envs_, int obs_dim_,
                           int action_dim_) {
  horizon = horizon_;
  num_envs = num_envs_;
  obs_dim = obs_dim_;
  action_dim = action_dim_;
  const std::size_t n = sample_count();
  obs.assign(n * static_cast<std::size_t>(obs_dim_), 0.0);
  actions.assign(n * static_cast<std::size_t>(action_dim_), 0.0);
  log_probs.assign(n, 0.0);
  rewards.assign(n, 0.0);
  values.assign(n, 0.0);
  dones.assign(n, 0);
  bootstrap.assign(static_cast<std::size_t>(num_envs_), 0.0);
  advantages.clear();  // produced by compute_gae
  returns.clear();
}

double gaussian_log_prob(std::span<const double> action,
                         std::span<const double> mean,
                         std::span<const double> log_std) {
  double logp = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double sigma = std::exp(log_std[i]);
    const double z = (action[i] - mean[i]) / sigma;
    logp += -0.5 * z * z - log_std[i] - 0.5 * kLogTwoPi;
  }
  return logp;
}

CollectStats collect(std::vector<env::WorldState>& states,
                     std::vector<Rng>& env_rngs, const Policy& policy,
                     const env::EnvConfig& env_cfg,
                     const rew::RewardParams& reward_params,
                     const rew::CurriculumStage& stage, env::Mode mode,
                     Rng& action_rng, RolloutBuffer& buffer) {
  if (states.size() != env_rngs.size() || states.empty()) {
    throw std::invalid_argument("collect: env state/rng mismatch");
  }
  if (policy.net.sizes.n_in != env::kObsDim) {
    throw std::invalid_argument("collect: network input must match observation");
  }
  const int action_dim = policy.net.action_dim();
  if (action_dim != 6) {
    throw std::invalid_argument("collect: gripper control needs 6 action dims");
  }
  if (buffer.horizon < 1) {
    throw std::invalid_argument("collect: buffer not sized (horizon < 1)");
  }

  const int num_envs = static_cast<int>(states.size());
  buffer.resize(buffer.horizon, num_envs, env::kObsDim, action_dim);

  const int stage_index = static_cast<int>(stage.id);
  Policy::Record rec;
  std::vector<double> action(static_cast<std::size_t>(action_dim));
  CollectStats stats;
  double reward_sum = 0.0;
  double rate_sum = 0.0;
  const double rate_denom = static_cast<double>(policy.net.sizes.n_hidden) *
                            (policy.kind == snn::ModelKind::Snn
                                 ? static_cast<double>(policy.window)
                                 : 1.0);

  for (int t = 0; t < buffer.horizon; ++t) {
    for (int e = 0; e < num_envs; ++e) {
      const std::size_t flat =
          static_cast<std::size_t>(t) * static_cast<std::size_t>(num_envs) +
          static_cast<std::size_t>(e);
      const env::Observation obs =
          env::observe(states[static_cast<std::size_t>(e)], mode, stage_index,
                       env_cfg);
      const snn::ForwardResult out = policy.forward(obs.values, rec);
      if (!std::isfinite(out.value)) {
        throw std::runtime_error("collect: non-finite value estimate");
      }
      for (int i = 0; i < action_dim; ++i) {
        const double mu = out.action_mean[static_cast<std::size_t>(i)];
        if (!std::isfinite(mu)) {
          throw std::runtime_error("collect: non-finite action mean");
        }
        const double sigma =
            std::exp(policy.net.log_std[static_cast<std::size_t>(i)]);
        action[static_cast<std::size_t>(i)] = mu + sigma * action_rng.normal();
      }
      const double logp =
          gaussian_log_prob(action, out.action_mean, policy.net.log_std);

      std::copy(obs.values.begin(), obs.values.end(),
                buffer.obs.begin() +
                    static_cast<std::ptrdiff_t>(flat * env::kObsDim));
      std::copy(action.begin(), action.end(),
                buffer.actions.begin() +
                    static_cast<std::ptrdiff_t>(
                        flat * static_cast<std::size_t>(action_dim)));
      buffer.log_probs[flat] = logp;
      buffer.values[flat] = out.value;
      rate_sum += static_cast<double>(out.spike_count) / rate_denom;

      env::Action act;
      act.v_cmd = {action[0], action[1], action[2]};
      act.yaw_rate = action[3];
      act.pitch_rate = action[4];
      act.gap_rate = action[5];
      env::WorldState next =
          env::step(states[static_cast<std::size_t>(e)], act, env_cfg);
      const env::TactileFeatures tact = env::tactile_features(next);
      const double r = rew::stage_reward(stage, next, tact, reward_params) -
                       reward_params.time_penalty;
      buffer.rewards[flat] = r;
      reward_sum += r;

      const bool done = next.t >= env_cfg.episode_len;
      buffer.dones[flat] = done ? 1 : 0;
      if (done) {
        next = env::reset(env_cfg, env_rngs[static_cast<std::size_t>(e)]);
        ++stats.episodes_finished;
      }
      states[static_cast<std::size_t>(e)] = next;
    }
  }

  for (int e = 0; e < num_envs; ++e) {
    const env::Observation obs = env::observe(
        states[static_cast<std::size_t>(e)], mode, stage_index, env_cfg);
    buffer.bootstrap[static_cast<std::size_t>(e)] =
        policy.forward(obs.values, rec).value;
  }

  const double n = static_cast<double>(buffer.sample_count());
  stats.mean_reward = reward_sum / n;
  stats.hidden_spike_rate = rate_sum / n;
  return stats;
}

void compute_gae(RolloutBuffer& buffer, const PpoConfig& cfg) {
  const std::size_t horizon = static_cast<std::size_t>(buffer.horizon);
  const std::size_t num_envs = static_cast<std::size_t>(buffer.num_envs);
  buffer.advantages.assign(buffer.sample_count(), 0.0);
  buffer.returns.assign(buffer.sample_count(), 0.0);
  std::vector<double> rewards(horizon), values(horizon), adv(horizon),
      ret(horizon);
  std::vector<std::uint8_t> dones(horizon);
  for (std::size_t e = 0; e < num_envs; ++e) {
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::size_t flat = t * num_envs + e;
      rewards[t] = cfg.reward_floor > 0.0
                       ? std::max(buffer.rewards[flat], -cfg.reward_floor)
                       : buffer.rewards[flat];
      values[t] = buffer.values[flat];
      dones[t] = buffer.dones[flat];
    }
    gae(rewards, values, dones, buffer.bootstrap[e], cfg.discount,
        cfg.gae_lambda, adv, ret);
    for (std::size_t t = 0; t < horizon; ++t) {
      const std::size_t flat = t * num_envs + e;
      buffer.advantages[flat] = adv[t];
      buffer.returns[flat] = ret[t];
    }
  }
}

double clipped_surrogate(double ratio, double advantage, double clip_ratio) {
  const double clipped =
      clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * advantage;
  const double unclipped = ratio * advantage;
  return unclipped < clipped ? unclipped : clipped;
}

UpdateStats ppo_update(Policy& policy, Adam& adam, RolloutBuffer& buffer,
                       const PpoConfig& cfg, Rng& shuffle_rng) {
  cfg.validate();
  const std::size_t n = buffer.sample_count();
  if (n == 0) throw std::invalid_argument("ppo_update: empty buffer");
  if (buffer.advantages.size() != n || buffer.returns.size() != n) {
    throw std::logic_error("ppo_update: run compute_gae first");
  }
  const std::size_t action_dim = static_cast<std::size_t>(buffer.action_dim);
  const std::size_t obs_dim = static_cast<std::size_t>(buffer.obs_dim);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  snn::Gradients grads;
  grads.resize(policy.net.sizes);
  snn::BpttScratch scratch;
  Policy::Record rec;
  std::vector<double> d_mean(action_dim);

  UpdateStats stats;
  double kl_sum = 0.0;
  std::size_t clip_count = 0;
  std::size_t sample_count = 0;
  std::size_t minibatch_count = 0;

  const double entropy =
      [&] {
        double h = 0.0;
        for (double ls : policy.net.log_std) h += ls;
        return h + 0.5 * static_cast<double>(action_dim) * (kLogTwoPi + 1.0);
      }();

  bool kl_stop = false;
  for (int epoch = 0; epoch < cfg.epochs && !kl_stop; ++epoch) {
    fisher_yates(order, shuffle_rng);
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(cfg.minibatch)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(cfg.minibatch));
      const std::size_t mb_size = stop - start;
      const double inv_m = 1.0 / static_cast<double>(mb_size);
      const double kl_before = kl_sum;

      // Advantage normalization uses the stored (network-independent)
      // advantages, so gradients need only one forward pass per sample.
      double adv_mean = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        adv_mean += buffer.advantages[order[i]];
      }
      adv_mean *= inv_m;
      double adv_var = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        const double d = buffer.advantages[order[i]] - adv_mean;
        adv_var += d * d;
      }
      const double adv_std = std::sqrt(adv_var * inv_m) + 1e-8;

      grads.zero();
      double surr_sum = 0.0;
      double vloss_sum = 0.0;

      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = order[i];
        const double* obs = &buffer.obs[idx * obs_dim];
        const double* act = &buffer.actions[idx * action_dim];
        const snn::ForwardResult out =
            policy.forward(std::span<const double>(obs, obs_dim), rec);
        const double logp_new = gaussian_log_prob(
            std::span<const double>(act, action_dim), out.action_mean,
            policy.net.log_std);
        const double logp_old = buffer.log_probs[idx];
        const double diff = clamp(logp_new - logp_old, -20.0, 20.0);
        const double ratio = std::exp(diff);
        const double adv_n = (buffer.advantages[idx] - adv_mean) / adv_std;

        const double unclipped = ratio * adv_n;
        const double clipped =
            clamp(ratio, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * adv_n;
        surr_sum += clipped_surrogate(ratio, adv_n, cfg.clip_ratio);
        if (std::fabs(ratio - 1.0) > cfg.clip_ratio) ++clip_count;
        kl_sum += logp_old - logp_new;
        ++sample_count;

        // d(policy_loss)/d(logp_new); zero when the clipped branch is active.
        double d_logp = 0.0;
        if (unclipped <= clipped) d_logp = -adv_n * ratio * inv_m;

        for (std::size_t a = 0; a < action_dim; ++a) {
          const double sigma = std::exp(policy.net.log_std[a]);
          const double z = (act[a] - out.action_mean[a]) / sigma;
          d_mean[a] = d_logp * z / sigma;
          grads.log_std[a] += d_logp * (z * z - 1.0);
        }

        // Clipped value loss (0.5 * worst of raw and clipped error). The
        // clip window lives in value units, so it scales with the readout
        // gain; a bare clip_ratio would pin the critic when returns are
        // two orders of magnitude larger.
        const double v_window = cfg.clip_ratio * cfg.value_scale;
        const double v_old = buffer.values[idx];
        const double ret = buffer.returns[idx];
        const double v_clip =
            v_old + clamp(out.value - v_old, -v_window, v_window);
        const double e_raw = out.value - ret;
        const double e_clip = v_clip - ret;
        double d_value;
        if (e_raw * e_raw >= e_clip * e_clip) {
          vloss_sum += 0.5 * e_raw * e_raw;
          d_value = cfg.value_coef * e_raw * inv_m;
        } else {
          vloss_sum += 0.5 * e_clip * e_clip;
          const bool pass = std::fabs(out.value - v_old) <= v_window;
          d_value = pass ? cfg.value_coef * e_clip * inv_m : 0.0;
        }

        policy.backward(rec, d_mean, d_value, grads, scratch);
      }

      // Sampled-KL trust region: drop this minibatch and stop iterating
      // once the policy has drifted past the target.
      if (cfg.target_kl > 0.0 &&
          (kl_sum - kl_before) * inv_m > 1.5 * cfg.target_kl) {
        kl_stop = true;
        stats.policy_loss += -surr_sum * inv_m;
        stats.value_loss += vloss_sum * inv_m;
        ++minibatch_count;
        break;
      }

      // Entropy bonus depends only on log_std and is identical across the
      // minibatch, so its gradient lands once.
      for (std::size_t a = 0; a < action_dim; ++a) {
        grads.log_std[a] -= cfg.entropy_coef;
      }

      const auto& k = kern::active();
      const double norm_sq = k.sum_sq(grads.w_in.data(), grads.w_in.size()) +
                             k.sum_sq(grads.w_out.data(), grads.w_out.size()) +
                             k.sum_sq(grads.log_std.data(), grads.log_std.size());
      const double gnorm = std::sqrt(norm_sq);
      if (gnorm > cfg.max_grad_norm) {
        const double s = cfg.max_grad_norm / gnorm;
        k.scale(grads.w_in.data(), s, grads.w_in.size());
        k.scale(grads.w_out.data(), s, grads.w_out.size());
        k.scale(grads.log_std.data(), s, grads.log_std.size());
      }
      adam.step(policy.net, grads, cfg.learning_rate);
      for (double& ls : policy.net.log_std) {
        ls = clamp(ls, cfg.log_std_min, cfg.log_std_max);
      }
      policy.net.sync_transpose();

      stats.policy_loss += -surr_sum * inv_m;
      stats.value_loss += vloss_sum * inv_m;
      stats.grad_norm += gnorm;
      ++minibatch_count;
    }
  }

  const double inv_mb = 1.0 / static_cast<double>(minibatch_count);
  stats.policy_loss *= inv_mb;
  stats.value_loss *= inv_mb;
  stats.grad_norm *= inv_mb;
  stats.entropy = entropy;
  stats.kl = kl_sum / static_cast<double>(sample_count);
  stats.clip_fraction =
      static_cast<double>(clip_count) / static_cast<double>(sample_count);
  return stats;
}

}  // namespace spikegrasp::ppo
