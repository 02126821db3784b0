#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "spikegrasp/config.hpp"
#include "spikegrasp/gae.hpp"
#include "spikegrasp/ppo.hpp"
#include "spikegrasp/rng.hpp"

using namespace spikegrasp;

namespace {

// Direct evaluation of A_t = sum_k (gamma*lambda)^k delta_{t+k}, truncating
// each sum at episode boundaries. Quadratic, independent of the recursion.
void gae_brute(const std::vector<double>& r, const std::vector<double>& v,
               const std::vector<std::uint8_t>& done, double bootstrap,
               double gamma, double lambda, std::vector<double>& adv) {
  const std::size_t n = r.size();
  adv.assign(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double factor = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      const double v_next = (k + 1 < n) ? v[k + 1] : bootstrap;
      const double live = done[k] ? 0.0 : 1.0;
      adv[t] += factor * (r[k] + gamma * live * v_next - v[k]);
      if (done[k]) break;
      factor *= gamma * lambda;
    }
  }
}

ppo::Policy tiny_policy(snn::ModelKind kind, std::uint64_t seed,
                        const snn::NetworkSizes& sizes, int window = 4) {
  Rng rng(seed);
  ppo::Policy p;
  p.kind = kind;
  p.window = window;
  p.value_scale = 25.0;
  p.net = snn::make_network(sizes, snn::LifParams{}, snn::LifParams{}, -0.5,
                            rng);
  for (double& w : p.net.w_in) w *= 3.0;  // make the hidden layer spike
  p.net.sync_transpose();
  return p;
}

}  // namespace

TEST_SUITE("gae_ppo") {

TEST_CASE("gae: lambda 0 reduces to one-step deltas") {
  const std::vector<double> r = {1.0, -0.5, 2.0};
  const std::vector<double> v = {0.3, 0.1, -0.2};
  const std::vector<std::uint8_t> done = {0, 0, 0};
  std::vector<double> adv(3), ret(3);
  ppo::gae(r, v, done, 0.7, 0.99, 0.0, adv, ret);
  for (std::size_t t = 0; t < 3; ++t) {
    const double v_next = (t + 1 < 3) ? v[t + 1] : 0.7;
    CHECK(adv[t] == doctest::Approx(r[t] + 0.99 * v_next - v[t]).epsilon(1e-12));
    CHECK(ret[t] == doctest::Approx(adv[t] + v[t]).epsilon(1e-12));
  }
}

TEST_CASE("gae: undiscounted unit rewards count the remaining steps") {
  const std::vector<double> r = {1.0, 1.0, 1.0};
  const std::vector<double> v = {0.0, 0.0, 0.0};
  const std::vector<std::uint8_t> done = {0, 0, 1};
  std::vector<double> adv(3), ret(3);
  ppo::gae(r, v, done, 123.0, 1.0, 1.0, adv, ret);  // bootstrap masked by done
  CHECK(adv[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(adv[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(adv[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gae: matches the brute-force series on random sequences") {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(16);
    std::vector<double> r(n), v(n);
    std::vector<std::uint8_t> done(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = rng.uniform(-2.0, 2.0);
      v[i] = rng.uniform(-2.0, 2.0);
      done[i] = rng.uniform() < 0.25 ? 1 : 0;
    }
    const double bootstrap = rng.uniform(-2.0, 2.0);
    const double gamma = rng.uniform(0.0, 1.0);
    const double lambda = rng.uniform(0.0, 1.0);

    std::vector<double> adv(n), ret(n), expect;
    ppo::gae(r, v, done, bootstrap, gamma, lambda, adv, ret);
    gae_brute(r, v, done, bootstrap, gamma, lambda, expect);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(adv[i] - expect[i]) < 1e-10);
      CHECK(std::abs(ret[i] - (expect[i] + v[i])) < 1e-10);
    }
  }
}

TEST_CASE("gae: episodes are isolated by done flags") {
  // Two concatenated episodes; a huge reward after the boundary must not
  // leak into the first episode's advantages.
  const std::vector<double> r = {0.1, 0.2, 1000.0, 0.3};
  const std::vector<double> v = {0.0, 0.0, 0.0, 0.0};
  const std::vector<std::uint8_t> done = {0, 1, 0, 0};
  std::vector<double> adv(4), ret(4);
  ppo::gae(r, v, done, 0.0, 0.99, 0.95, adv, ret);
  CHECK(adv[0] == doctest::Approx(0.1 + 0.99 * 0.95 * 0.2).epsilon(1e-12));
  CHECK(adv[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(adv[2] > 100.0);
}

TEST_CASE("gae: rejects invalid arguments") {
  const std::vector<double> r = {1.0};
  const std::vector<double> v = {0.0};
  const std::vector<std::uint8_t> done = {0};
  std::vector<double> adv(1), ret(1);
  const std::vector<double> v2 = {0.0, 0.0};
  CHECK_THROWS_AS(ppo::gae(r, v2, done, 0.0, 0.99, 0.95, adv, ret),
                  std::invalid_argument);
  CHECK_THROWS_AS(ppo::gae(r, v, done, 0.0, 1.5, 0.95, adv, ret),
                  std::invalid_argument);
  CHECK_THROWS_AS(ppo::gae(r, v, done, 0.0, 0.99, -0.1, adv, ret),
                  std::invalid_argument);
}

TEST_CASE("clipped surrogate: hand example and clipping sides") {
  // ratio 1.5 with clip 0.2 clamps to 1.2; ratio 0.5 clamps to 0.8 only when
  // that hurts less, per the min.
  CHECK(ppo::clipped_surrogate(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(ppo::clipped_surrogate(0.5, 1.0, 0.2) == doctest::Approx(0.5));
  CHECK(ppo::clipped_surrogate(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  CHECK(ppo::clipped_surrogate(1.5, -1.0, 0.2) == doctest::Approx(-1.5));
  const double mean =
      0.5 * (ppo::clipped_surrogate(1.5, 1.0, 0.2) +
             ppo::clipped_surrogate(0.5, 1.0, 0.2));
  CHECK(mean == doctest::Approx(0.85));
}

TEST_CASE("gaussian log prob: matches the diagonal normal density") {
  const std::vector<double> action = {0.3, -1.0};
  const std::vector<double> mean = {0.0, -0.5};
  const std::vector<double> log_std = {-0.5, 0.2};
  double expect = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double sd = std::exp(log_std[i]);
    const double z = (action[i] - mean[i]) / sd;
    expect += -0.5 * z * z - log_std[i] -
              0.5 * std::log(2.0 * 3.14159265358979323846);
  }
  CHECK(ppo::gaussian_log_prob(action, mean, log_std) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("collect: fills the buffer deterministically and resets episodes") {
  harness::RunConfig cfg;
  cfg.num_envs = 3;
  cfg.snn_hidden = 16;
  cfg.env.episode_len = 10;  // force several resets inside the horizon
  cfg.ppo.horizon = 25;

  const ppo::Policy policy =
      tiny_policy(snn::ModelKind::Snn, 50, cfg.network_sizes(), 4);
  const rew::CurriculumStage stage =
      rew::make_stage(rew::StageId::ExplorationOriented, false);

  const auto run = [&](ppo::RolloutBuffer& buffer) {
    std::vector<env::WorldState> states;
    std::vector<Rng> rngs;
    for (int i = 0; i < cfg.num_envs; ++i) {
      rngs.emplace_back(derive_seed(7, static_cast<std::uint64_t>(i)));
      states.push_back(env::reset(cfg.env, rngs.back()));
    }
    Rng action_rng(derive_seed(7, 1u << 20));
    buffer.resize(cfg.ppo.horizon, cfg.num_envs, env::kObsDim,
                  policy.net.action_dim());
    return ppo::collect(states, rngs, policy, cfg.env, cfg.reward, stage,
                        env::Mode::Multimodal, action_rng, buffer);
  };

  ppo::RolloutBuffer a, b;
  const ppo::CollectStats sa = run(a);
  const ppo::CollectStats sb = run(b);
  CHECK(sa.mean_reward == sb.mean_reward);
  CHECK(sa.hidden_spike_rate == sb.hidden_spike_rate);
  CHECK(sa.episodes_finished == sb.episodes_finished);
  for (std::size_t i = 0; i < a.obs.size(); ++i) CHECK(a.obs[i] == b.obs[i]);
  for (std::size_t i = 0; i < a.actions.size(); ++i) {
    CHECK(a.actions[i] == b.actions[i]);
  }

  // Done flags appear exactly at episode boundaries (t = 9 and 19 per env).
  int dones_seen = 0;
  for (int t = 0; t < a.horizon; ++t) {
    for (int e = 0; e < a.num_envs; ++e) {
      const bool done = a.dones[static_cast<std::size_t>(t) * a.num_envs + e];
      if (done) {
        CHECK((t + 1) % cfg.env.episode_len == 0);
        ++dones_seen;
      }
    }
  }
  CHECK(dones_seen == cfg.num_envs * 2);
  CHECK(sa.episodes_finished == dones_seen);
  CHECK(sa.hidden_spike_rate >= 0.0);
  CHECK(sa.hidden_spike_rate <= 1.0);

  // Stored log probs match the stored raw actions under the current policy.
  ppo::Policy::Record rec;
  for (int t = 0; t < 3; ++t) {
    for (int e = 0; e < a.num_envs; ++e) {
      const std::size_t base =
          (static_cast<std::size_t>(t) * a.num_envs + e) * a.obs_dim;
      const std::span<const double> obs(a.obs.data() + base,
                                        static_cast<std::size_t>(a.obs_dim));
      const snn::ForwardResult out = policy.forward(obs, rec);
      const std::size_t abase =
          (static_cast<std::size_t>(t) * a.num_envs + e) * a.action_dim;
      const std::span<const double> act(a.actions.data() + abase,
                                        static_cast<std::size_t>(a.action_dim));
      const double lp =
          ppo::gaussian_log_prob(act, out.action_mean, policy.net.log_std);
      CHECK(a.log_probs[static_cast<std::size_t>(t) * a.num_envs + e] ==
            doctest::Approx(lp).epsilon(1e-12));
      CHECK(a.values[static_cast<std::size_t>(t) * a.num_envs + e] ==
            doctest::Approx(out.value).epsilon(1e-12));
    }
  }
}

TEST_CASE("ppo update: zero learning rate leaves weights bitwise unchanged") {
  harness::RunConfig cfg;
  cfg.num_envs = 2;
  cfg.snn_hidden = 12;
  cfg.env.episode_len = 16;
  cfg.ppo.horizon = 16;
  cfg.ppo.minibatch = 8;
  cfg.ppo.epochs = 2;
  cfg.ppo.learning_rate = 0.0;

  ppo::Policy policy =
      tiny_policy(snn::ModelKind::Snn, 51, cfg.network_sizes(), 4);
  const std::vector<double> w_in_before = policy.net.w_in;
  const std::vector<double> w_out_before = policy.net.w_out;
  const std::vector<double> log_std_before = policy.net.log_std;

  std::vector<env::WorldState> states;
  std::vector<Rng> rngs;
  for (int i = 0; i < cfg.num_envs; ++i) {
    rngs.emplace_back(derive_seed(9, static_cast<std::uint64_t>(i)));
    states.push_back(env::reset(cfg.env, rngs.back()));
  }
  Rng action_rng(derive_seed(9, 1u << 20));
  Rng shuffle_rng(derive_seed(9, (1u << 20) + 1));
  ppo::RolloutBuffer buffer;
  buffer.resize(cfg.ppo.horizon, cfg.num_envs, env::kObsDim,
                policy.net.action_dim());
  const rew::CurriculumStage stage =
      rew::make_stage(rew::StageId::ExplorationOriented, false);
  ppo::collect(states, rngs, policy, cfg.env, cfg.reward, stage,
               env::Mode::Multimodal, action_rng, buffer);
  ppo::compute_gae(buffer, cfg.ppo);
  ppo::Adam adam;
  adam.init(policy.net.sizes);
  const ppo::UpdateStats stats =
      ppo::ppo_update(policy, adam, buffer, cfg.ppo, shuffle_rng);

  for (std::size_t i = 0; i < w_in_before.size(); ++i) {
    CHECK(policy.net.w_in[i] == w_in_before[i]);
  }
  for (std::size_t i = 0; i < w_out_before.size(); ++i) {
    CHECK(policy.net.w_out[i] == w_out_before[i]);
  }
  for (std::size_t i = 0; i < log_std_before.size(); ++i) {
    CHECK(policy.net.log_std[i] == log_std_before[i]);
  }
  // On-policy data at unchanged weights: ratios 1, no clipping, tiny kl.
  CHECK(stats.clip_fraction == 0.0);
  CHECK(std::abs(stats.kl) < 1e-9);
}

TEST_CASE("ppo update: a few updates stay finite and move the policy") {
  for (const snn::ModelKind kind :
       {snn::ModelKind::Snn, snn::ModelKind::Ann}) {
    harness::RunConfig cfg;
    cfg.num_envs = 4;
    cfg.snn_hidden = 16;
    cfg.env.episode_len = 16;
    cfg.ppo.horizon = 16;
    cfg.ppo.minibatch = 16;
    cfg.ppo.epochs = 2;

    ppo::Policy policy = tiny_policy(kind, 52, cfg.network_sizes(), 4);
    const std::vector<double> before = policy.net.w_out;

    std::vector<env::WorldState> states;
    std::vector<Rng> rngs;
    for (int i = 0; i < cfg.num_envs; ++i) {
      rngs.emplace_back(derive_seed(11, static_cast<std::uint64_t>(i)));
      states.push_back(env::reset(cfg.env, rngs.back()));
    }
    Rng action_rng(derive_seed(11, 1u << 20));
    Rng shuffle_rng(derive_seed(11, (1u << 20) + 1));
    ppo::RolloutBuffer buffer;
    buffer.resize(cfg.ppo.horizon, cfg.num_envs, env::kObsDim,
                  policy.net.action_dim());
    ppo::Adam adam;
    adam.init(policy.net.sizes);
    const rew::CurriculumStage stage =
        rew::make_stage(rew::StageId::ExplorationOriented, false);

    for (int u = 0; u < 3; ++u) {
      ppo::collect(states, rngs, policy, cfg.env, cfg.reward, stage,
                   env::Mode::Multimodal, action_rng, buffer);
      ppo::compute_gae(buffer, cfg.ppo);
      const ppo::UpdateStats stats =
          ppo::ppo_update(policy, adam, buffer, cfg.ppo, shuffle_rng);
      CHECK(std::isfinite(stats.policy_loss));
      CHECK(std::isfinite(stats.value_loss));
      CHECK(std::isfinite(stats.kl));
      CHECK(stats.clip_fraction >= 0.0);
      CHECK(stats.clip_fraction <= 1.0);
      CHECK(stats.grad_norm >= 0.0);
      CHECK(stats.entropy > 0.0);  // gaussian entropy at log_std near -0.5
    }
    bool moved = false;
    for (std::size_t i = 0; i < before.size(); ++i) {
      moved |= policy.net.w_out[i] != before[i];
    }
    CHECK(moved);
    for (double ls : policy.net.log_std) {
      CHECK(ls >= cfg.ppo.log_std_min);
      CHECK(ls <= cfg.ppo.log_std_max);
    }
  }
}

TEST_CASE("ppo update: requires gae to have been computed") {
  harness::RunConfig cfg;
  cfg.num_envs = 1;
  cfg.snn_hidden = 8;
  cfg.ppo.horizon = 4;
  cfg.ppo.minibatch = 4;
  ppo::Policy policy =
      tiny_policy(snn::ModelKind::Snn, 53, cfg.network_sizes(), 2);
  ppo::RolloutBuffer buffer;
  buffer.resize(cfg.ppo.horizon, cfg.num_envs, env::kObsDim,
                policy.net.action_dim());
  ppo::Adam adam;
  adam.init(policy.net.sizes);
  Rng shuffle_rng(1);
  CHECK_THROWS_AS(ppo::ppo_update(policy, adam, buffer, cfg.ppo, shuffle_rng),
                  std::logic_error);
}

}  // TEST_SUITE
