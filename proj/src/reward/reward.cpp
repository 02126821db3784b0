#include "spikegrasp/reward.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spikegrasp::rew {

void RewardParams::validate() const {
  auto bad = [](const char* what) {
    throw std::invalid_argument(std::string("reward params: ") + what);
  };
  for (double a : {alpha1, alpha2, alpha3, alpha4, alpha5, alpha8, alpha9}) {
    if (!(a >= 0.0)) bad("alpha coefficients must be >= 0");
  }
  for (double l : {lambda1, lambda2, lambda3, lambda4, lambda5, lambda6, lambda7}) {
    if (!(l > 0.0)) bad("lambda slopes must be > 0");
  }
  if (!(gamma1 >= 0.0) || !(gamma2 > 0.0)) bad("gamma coefficients invalid");
  if (!(delta1 > 0.0) || !(delta2 > 0.0) || !(delta3 >= 0.0)) {
    bad("delta margins must be positive");
  }
  if (!(epsilon > 0.0)) bad("gap margin epsilon must be > 0");
  if (!(h1 > 0.0) || !(h2 > h1)) bad("lift thresholds need 0 < h1 < h2");
  if (!(f_tol > 0.0)) bad("force tolerance must be > 0");
  if (time_penalty < 0.0) bad("time penalty must be >= 0");
}

ApproachDistances approach_distances(const env::WorldState& state) {
  ApproachDistances d;
  const double d_mid = norm(state.p_mid - state.p_obj);
  const double d_lf = norm(state.p_lf - state.p_obj);
  const double d_rf = norm(state.p_rf - state.p_obj);
  d.d1 = (d_mid + d_lf + d_rf) / 3.0;
  d.d2 = d_mid;
  const Vec3 rel = state.p_mid - state.p_obj;
  d.d3 = std::sqrt(rel.x * rel.x + rel.z * rel.z);
  return d;
}

double geometry_terms(const ApproachDistances& d, const RewardParams& p) {
  return p.alpha1 * (1.0 - std::tanh(p.lambda1 * d.d1)) +
         p.alpha2 * (1.0 - std::tanh(p.lambda2 * d.d2)) +
         p.alpha3 * (1.0 - std::tanh(p.lambda3 * d.d3));
}

double r_geometry(const env::WorldState& state, const RewardParams& p) {
  return geometry_terms(approach_distances(state), p);
}

double r_symmetry(const env::WorldState& state, const RewardParams& p) {
  const double spread = std::fabs(state.p_lf.y - state.p_rf.y);
  const double off = std::fabs(state.p_mid.y - state.p_obj.y);
  return p.alpha4 * (1.0 - std::tanh(p.lambda4 * spread)) +
         p.gamma1 * std::max(0.0, p.delta1 - off);
}

double r_hover(const env::WorldState& state, const RewardParams& p) {
  const double off = std::fabs(state.p_mid.y - state.p_obj.y);
  return -std::exp(p.lambda5 * (off - p.delta2));
}

double r_touch_grasp(const env::WorldState& state,
                     const env::TactileFeatures& tact, const RewardParams& p) {
  const double gap_err = std::fabs(state.gap_eef - (state.s_obj + p.epsilon));
  double r = p.alpha5 * std::exp(-p.lambda6 * gap_err);

  const Vec3 dir_lf = normalized(state.p_obj - state.p_lf);
  const Vec3 dir_rf = normalized(state.p_obj - state.p_rf);
  const double align = dot(state.f_lf, dir_lf) + dot(state.f_rf, dir_rf);
  const double balance = 1.0 - std::tanh(p.lambda7 * tact.symmetry);
  const double contacts = (tact.contact_lf ? 1.0 : 0.0) +
                          (tact.contact_rf ? 1.0 : 0.0);
  r += 0.5 * (balance + align + contacts);
  return r;
}

double r_pull_lift(const env::WorldState& state, const RewardParams& p) {
  // Finger axis pointing along local +Y; reward its anti-alignment with
  // world +Y (fingers wrapped across the object rather than beside it).
  const Vec3 axis = rotate_yaw_pitch({0.0, 1.0, 0.0}, state.yaw, state.pitch);
  const double anti = dot(axis, Vec3{0.0, -1.0, 0.0});
  // Saturates at gamma2 once h >= 1 - delta3 and floors at zero when the
  // object sits below its spawn height.
  const double lift = clamp(p.gamma2 * (state.h + p.delta3), 0.0, p.gamma2);
  return p.alpha8 * anti + p.alpha9 * lift;
}

}  // namespace spikegrasp::rew
