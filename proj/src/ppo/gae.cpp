#include "spikegrasp/gae.hpp"

#include <stdexcept>

namespace spikegrasp::ppo {

void gae(std::span<const double> rewards, std::span<const double> values,
         std::span<const std::uint8_t> dones, double bootstrap_value,
         double gamma, double lambda, std::span<double> advantages_out,
         std::span<double> returns_out) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n || advantages_out.size() != n ||
      returns_out.size() != n) {
    throw std::invalid_argument("gae: span length mismatch");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0) || !(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("gae: gamma and lambda must be in [0, 1]");
  }
  double next_adv = 0.0;
  double next_value = bootstrap_value;
  for (std::size_t i = n; i-- > 0;) {
    const double live = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * live * next_value - values[i];
    next_adv = delta + gamma * lambda * live * next_adv;
    advantages_out[i] = next_adv;
    returns_out[i] = next_adv + values[i];
    next_value = values[i];
  }
}

}  // namespace spikegrasp::ppo
