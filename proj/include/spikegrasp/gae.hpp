#pragma once

#include <cstdint>
#include <span>

namespace spikegrasp::ppo {

// Generalized advantage estimation over one trajectory strip.
//   delta_t = r_t + gamma * (1 - done_t) * V_{t+1} - V_t
//   A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}
// with V_T = bootstrap_value. done_t marks that the state after step t was a
// reset boundary. returns_out[t] = A_t + V_t. Throws std::invalid_argument on
// length mismatch or out-of-range gamma/lambda.
void gae(std::span<const double> rewards, std::span<const double> values,
         std::span<const std::uint8_t> dones, double bootstrap_value,
         double gamma, double lambda, std::span<double> advantages_out,
         std::span<double> returns_out);

}  // namespace spikegrasp::ppo
