#include "spikegrasp/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace spikegrasp::oracle {
namespace {

constexpr double kAlignTol = 0.006;   // lateral tolerance before driving in
constexpr double kCenterTol = 0.004;  // midpoint-on-center tolerance
constexpr double kStandoff = 0.08;    // approach distance held while aligning
constexpr double kTrackGain = 40.0;   // normalized velocity per meter of error
constexpr double kGapGain = 40.0;
constexpr double kSqueeze = 0.005;    // commanded gap below the cube side
constexpr double kPassClear = 0.02;   // extra opening while sliding past
constexpr double kCeilMargin = 0.02;  // keep clear of the workspace top

double track(double err) { return std::clamp(kTrackGain * err, -1.0, 1.0); }

}  // namespace

env::Action oracle_action(const env::WorldState& state,
                          const env::EnvConfig& cfg, double lift_height) {
  env::Action a;  // yaw_rate and pitch_rate stay zero: the spawn is axis-aligned

  const Vec3 dx = state.p_obj - state.p_mid;
  const bool aligned =
      std::abs(dx.y) < kAlignTol && std::abs(dx.z) < kAlignTol;
  const bool centered = aligned && std::abs(dx.x) < kCenterTol;
  const bool both = state.contact_lf && state.contact_rf;

  const double squeeze_gap = std::max(state.s_obj - kSqueeze, cfg.gap_min);
  const double pass_gap = std::min(
      state.s_obj + 2.0 * cfg.finger_radius + kPassClear, cfg.gap_max);
  // Once the gap is inside the contact-onset width, reopening would only
  // thrash; hold the squeeze unless alignment was lost outright.
  const bool deep = state.gap < state.s_obj + 2.0 * cfg.finger_radius - 1e-9;
  const double gap_target =
      (both || centered || (aligned && deep)) ? squeeze_gap : pass_gap;
  a.gap_rate = std::clamp(kGapGain * (gap_target - state.gap), -1.0, 1.0);

  if (both) {
    // Hold center in the horizontal plane and climb until past lift_height;
    // grip transmission is viscous, so climbing can start at first contact.
    a.v_cmd.x = track(dx.x);
    a.v_cmd.y = track(dx.y);
    const bool headroom =
        state.p_mid.z < cfg.workspace_max.z - kCeilMargin;
    a.v_cmd.z = (state.h < lift_height && headroom) ? 1.0 : 0.0;
    return a;
  }

  if (aligned) {
    // Drive in along X (or hold center once there); keep tracking laterally.
    a.v_cmd.x = track(dx.x);
    a.v_cmd.y = track(dx.y);
    a.v_cmd.z = track(dx.z);
    return a;
  }

  // Misaligned: hold a standoff in front of the object while centering Y/Z.
  a.v_cmd.x = track(dx.x - kStandoff);
  a.v_cmd.y = track(dx.y);
  a.v_cmd.z = track(dx.z);
  return a;
}

}  // namespace spikegrasp::oracle
