#include "spikegrasp/env.hpp"

namespace spikegrasp::env {
namespace {

double squash(double v, double scale) { return clamp(v / scale, -1.0, 1.0); }

}  // namespace

const char* mode_name(Mode mode) {
  return mode == Mode::Multimodal ? "multimodal" : "unimodal";
}

bool parse_mode(std::string_view name, Mode& out) {
  if (name == "multimodal") {
    out = Mode::Multimodal;
  } else if (name == "unimodal") {
    out = Mode::Unimodal;
  } else {
    return false;
  }
  return true;
}

Observation observe(const WorldState& state, Mode mode, int stage_index,
                    const EnvConfig& cfg) {
  Observation obs;
  auto put = [&](int slot, double v) {
    obs.values[static_cast<std::size_t>(slot)] = v;
    obs.active[static_cast<std::size_t>(slot)] = 1;
  };

  // Proprioceptive and object kinematics block (slots 0..18).
  put(0, squash(state.p_mid.x, cfg.pos_scale));
  put(1, squash(state.p_mid.y, cfg.pos_scale));
  put(2, squash(state.p_mid.z, cfg.pos_scale));
  put(3, squash(state.p_lf.x, cfg.pos_scale));
  put(4, squash(state.p_lf.y, cfg.pos_scale));
  put(5, squash(state.p_lf.z, cfg.pos_scale));
  put(6, squash(state.p_rf.x, cfg.pos_scale));
  put(7, squash(state.p_rf.y, cfg.pos_scale));
  put(8, squash(state.p_rf.z, cfg.pos_scale));
  put(9, squash(state.p_obj.x, cfg.pos_scale));
  put(10, squash(state.p_obj.y, cfg.pos_scale));
  put(11, squash(state.p_obj.z, cfg.pos_scale));
  put(12, squash(state.v_obj.x, cfg.vel_scale));
  put(13, squash(state.v_obj.y, cfg.vel_scale));
  put(14, squash(state.v_obj.z, cfg.vel_scale));
  const Vec3 rel = state.p_obj - state.p_mid;
  put(15, squash(rel.x, cfg.rel_scale));
  put(16, squash(rel.y, cfg.rel_scale));
  put(17, squash(rel.z, cfg.rel_scale));
  put(18, squash(state.gap_eef, cfg.gap_max));

  if (mode == Mode::Multimodal) {
    // Tactile block (slots 19..25).
    const TactileFeatures tact = tactile_features(state);
    put(19, clamp(tact.norm_lf / cfg.force_scale, 0.0, 1.0));
    put(20, clamp(tact.norm_rf / cfg.force_scale, 0.0, 1.0));
    put(21, clamp(tact.symmetry / cfg.force_scale, 0.0, 1.0));
    put(22, clamp(tact.cos_lf, -1.0, 1.0));
    put(23, clamp(tact.cos_rf, -1.0, 1.0));
    put(24, tact.contact_lf ? 1.0 : 0.0);
    put(25, tact.contact_rf ? 1.0 : 0.0);
    // Semantic block (slots 26..28).
    put(26, clamp(state.s_obj / cfg.side_max, 0.0, 1.0));
    put(27, clamp(static_cast<double>(stage_index) / 2.0, 0.0, 1.0));
    put(28, squash(state.h, cfg.pos_scale));
  }
  // Unimodal: slots 19..28 stay zero with active = 0.
  return obs;
}

}  // namespace spikegrasp::env
