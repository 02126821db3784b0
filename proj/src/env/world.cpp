#include "spikegrasp/env.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spikegrasp::env {
namespace {

void check_finite_action(const Action& a) {
  if (!std::isfinite(a.v_cmd.x) || !std::isfinite(a.v_cmd.y) ||
      !std::isfinite(a.v_cmd.z) || !std::isfinite(a.yaw_rate) ||
      !std::isfinite(a.pitch_rate) || !std::isfinite(a.gap_rate)) {
    throw std::invalid_argument("step: non-finite action");
  }
}

Vec3 clamp_box(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  return {clamp(p.x, lo.x, hi.x), clamp(p.y, lo.y, hi.y), clamp(p.z, lo.z, hi.z)};
}

// Gripper finger axis: local +Y rotated by the gripper pose.
Vec3 finger_axis(double yaw, double pitch) {
  return rotate_yaw_pitch({0.0, 1.0, 0.0}, yaw, pitch);
}

}  // namespace

void EnvConfig::validate() const {
  auto bad = [](const char* what) {
    throw std::invalid_argument(std::string("env config: ") + what);
  };
  if (!(dt > 0.0)) bad("dt must be > 0");
  if (substeps < 1) bad("substeps must be >= 1");
  if (episode_len < 1) bad("episode_len must be >= 1");
  if (!(workspace_min.x < workspace_max.x && workspace_min.y < workspace_max.y &&
        workspace_min.z < workspace_max.z)) {
    bad("workspace box is degenerate");
  }
  if (!(spawn_min.x <= spawn_max.x && spawn_min.y <= spawn_max.y &&
        spawn_min.z <= spawn_max.z)) {
    bad("spawn box is degenerate");
  }
  if (!(spawn_min.x >= workspace_min.x && spawn_max.x <= workspace_max.x &&
        spawn_min.y >= workspace_min.y && spawn_max.y <= workspace_max.y &&
        spawn_min.z >= workspace_min.z && spawn_max.z <= workspace_max.z)) {
    bad("spawn box must lie inside the workspace");
  }
  if (!(gap_min >= 0.0 && gap_max > gap_min)) bad("gap range is degenerate");
  if (!(home_gap >= gap_min && home_gap <= gap_max)) bad("home gap out of range");
  if (!(side_min > 0.0 && side_max >= side_min)) bad("side range is degenerate");
  if (!(object_mass > 0.0)) bad("object mass must be > 0");
  if (drag < 0.0) bad("drag must be >= 0");
  if (!(contact_kp > 0.0) || contact_kd < 0.0) bad("contact gains invalid");
  if (!(finger_radius > 0.0)) bad("finger radius must be > 0");
  if (!(max_speed > 0.0) || !(max_rot_rate > 0.0) || !(max_gap_rate > 0.0)) {
    bad("action rate limits must be > 0");
  }
  if (!(pitch_limit > 0.0)) bad("pitch limit must be > 0");
  if (!(pos_scale > 0.0) || !(rel_scale > 0.0) || !(vel_scale > 0.0) ||
      !(force_scale > 0.0)) {
    bad("observation scales must be > 0");
  }
}

WorldState reset(const EnvConfig& cfg, Rng& rng) {
  WorldState s;
  s.p_mid = cfg.home_pos;
  s.yaw = 0.0;
  s.pitch = 0.0;
  s.gap = cfg.home_gap;
  const Vec3 axis = finger_axis(s.yaw, s.pitch);
  s.p_lf = s.p_mid + axis * (0.5 * s.gap);
  s.p_rf = s.p_mid - axis * (0.5 * s.gap);
  s.gap_eef = norm(s.p_lf - s.p_rf);

  s.p_obj = {rng.uniform(cfg.spawn_min.x, cfg.spawn_max.x),
             rng.uniform(cfg.spawn_min.y, cfg.spawn_max.y),
             rng.uniform(cfg.spawn_min.z, cfg.spawn_max.z)};
  s.s_obj = rng.uniform(cfg.side_min, cfg.side_max);
  s.z_spawn = s.p_obj.z;
  return s;
}

ContactResult sphere_cube_contact(const Vec3& center, double radius,
                                  const Vec3& cube_pos, double cube_yaw,
                                  double side, const Vec3& v_sphere,
                                  const Vec3& v_cube, double cube_yaw_rate,
                                  double kp, double kd) {
  ContactResult result;

  // Closest point on the yaw-rotated cube to the sphere center, computed in
  // the cube frame.
  const Vec3 local = rotate_z(center - cube_pos, -cube_yaw);
  const double half = 0.5 * side;
  const Vec3 closest_local{clamp(local.x, -half, half),
                           clamp(local.y, -half, half),
                           clamp(local.z, -half, half)};
  const Vec3 delta_local = local - closest_local;
  const double dist = norm(delta_local);

  Vec3 normal_local;
  double depth;
  if (dist > 1e-12) {
    // Center outside the cube.
    depth = radius - dist;
    if (depth <= 0.0) return result;
    normal_local = delta_local * (1.0 / dist);
  } else {
    // Center inside the cube: push out along the closest face.
    double best = half - std::fabs(local.x);
    normal_local = {local.x >= 0.0 ? 1.0 : -1.0, 0.0, 0.0};
    const double dy = half - std::fabs(local.y);
    if (dy < best) {
      best = dy;
      normal_local = {0.0, local.y >= 0.0 ? 1.0 : -1.0, 0.0};
    }
    const double dz = half - std::fabs(local.z);
    if (dz < best) {
      best = dz;
      normal_local = {0.0, 0.0, local.z >= 0.0 ? 1.0 : -1.0};
    }
    depth = radius + best;
  }

  const Vec3 normal = rotate_z(normal_local, cube_yaw);  // cube -> sphere
  const Vec3 point = cube_pos + rotate_z(closest_local, cube_yaw);
  const Vec3 v_point =
      v_cube + cross({0.0, 0.0, cube_yaw_rate}, point - cube_pos);
  const Vec3 v_rel = v_sphere - v_point;

  result.touching = true;
  result.point = point;
  result.force = normal * (kp * depth) - v_rel * kd;
  return result;
}

WorldState step(const WorldState& state, const Action& action, double dt,
                const EnvConfig& cfg) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("step: dt must be positive and finite");
  }
  check_finite_action(action);

  const Vec3 v_cmd{clamp(action.v_cmd.x, -1.0, 1.0) * cfg.max_speed,
                   clamp(action.v_cmd.y, -1.0, 1.0) * cfg.max_speed,
                   clamp(action.v_cmd.z, -1.0, 1.0) * cfg.max_speed};
  const double yaw_rate = clamp(action.yaw_rate, -1.0, 1.0) * cfg.max_rot_rate;
  const double pitch_rate =
      clamp(action.pitch_rate, -1.0, 1.0) * cfg.max_rot_rate;
  const double gap_rate = clamp(action.gap_rate, -1.0, 1.0) * cfg.max_gap_rate;

  WorldState s = state;
  const int n_sub = cfg.substeps;
  const double h_sub = dt / n_sub;
  const double inv_mass = 1.0 / cfg.object_mass;
  // Cube yaw inertia about its center.
  const double inertia = cfg.object_mass * s.s_obj * s.s_obj / 6.0;

  Vec3 sum_f_lf{}, sum_f_rf{};

  for (int sub = 0; sub < n_sub; ++sub) {
    // Kinematic gripper.
    s.p_mid = clamp_box(s.p_mid + v_cmd * h_sub, cfg.workspace_min, cfg.workspace_max);
    s.yaw += yaw_rate * h_sub;
    s.pitch = clamp(s.pitch + pitch_rate * h_sub, -cfg.pitch_limit, cfg.pitch_limit);
    s.gap = clamp(s.gap + gap_rate * h_sub, cfg.gap_min, cfg.gap_max);

    const Vec3 axis = finger_axis(s.yaw, s.pitch);
    s.p_lf = s.p_mid + axis * (0.5 * s.gap);
    s.p_rf = s.p_mid - axis * (0.5 * s.gap);

    // Fingertip velocities include the rigid rotation of the offset and the
    // gap rate along the finger axis.
    const Vec3 omega =
        Vec3{0.0, 0.0, yaw_rate} +
        rotate_z({pitch_rate, 0.0, 0.0}, s.yaw);
    const Vec3 r_lf = s.p_lf - s.p_mid;
    const Vec3 r_rf = s.p_rf - s.p_mid;
    const Vec3 v_lf = v_cmd + cross(omega, r_lf) + axis * (0.5 * gap_rate);
    const Vec3 v_rf = v_cmd + cross(omega, r_rf) - axis * (0.5 * gap_rate);

    const ContactResult c_lf = sphere_cube_contact(
        s.p_lf, cfg.finger_radius, s.p_obj, s.q_obj, s.s_obj, v_lf, s.v_obj,
        s.w_obj, cfg.contact_kp, cfg.contact_kd);
    const ContactResult c_rf = sphere_cube_contact(
        s.p_rf, cfg.finger_radius, s.p_obj, s.q_obj, s.s_obj, v_rf, s.v_obj,
        s.w_obj, cfg.contact_kp, cfg.contact_kd);

    // Reaction on the object is exactly the negated fingertip forces.
    const Vec3 f_obj = -(c_lf.force + c_rf.force);
    double torque_z = 0.0;
    if (c_lf.touching) {
      torque_z += cross(c_lf.point - s.p_obj, -c_lf.force).z;
    }
    if (c_rf.touching) {
      torque_z += cross(c_rf.point - s.p_obj, -c_rf.force).z;
    }

    s.v_obj += (f_obj * inv_mass - s.v_obj * cfg.drag) * h_sub;
    s.p_obj += s.v_obj * h_sub;
    s.w_obj += (torque_z / inertia - s.w_obj * cfg.drag) * h_sub;
    s.q_obj += s.w_obj * h_sub;

    sum_f_lf += c_lf.force;
    sum_f_rf += c_rf.force;
  }

  s.v_eef = v_cmd;
  s.f_lf = sum_f_lf * (1.0 / n_sub);
  s.f_rf = sum_f_rf * (1.0 / n_sub);
  s.contact_lf = norm(s.f_lf) > 0.0;
  s.contact_rf = norm(s.f_rf) > 0.0;
  s.gap_eef = norm(s.p_lf - s.p_rf);
  s.h = s.p_obj.z - s.z_spawn;
  s.t = state.t + 1;
  return s;
}

WorldState step(const WorldState& state, const Action& action,
                const EnvConfig& cfg) {
  return step(state, action, cfg.dt, cfg);
}

TactileFeatures tactile_features(const WorldState& state) {
  TactileFeatures f;
  f.norm_lf = norm(state.f_lf);
  f.norm_rf = norm(state.f_rf);
  f.symmetry = std::fabs(f.norm_lf - f.norm_rf);
  constexpr double kEps = 1e-9;
  if (f.norm_lf >= kEps) {
    const Vec3 dir = normalized(state.p_obj - state.p_lf);
    f.cos_lf = dot(state.f_lf * (1.0 / f.norm_lf), dir);
  }
  if (f.norm_rf >= kEps) {
    const Vec3 dir = normalized(state.p_obj - state.p_rf);
    f.cos_rf = dot(state.f_rf * (1.0 / f.norm_rf), dir);
  }
  f.contact_lf = state.contact_lf;
  f.contact_rf = state.contact_rf;
  return f;
}

std::vector<WorldState> batch_step(std::span<const WorldState> states,
                                   std::span<const Action> actions, double dt,
                                   const EnvConfig& cfg) {
  if (states.size() != actions.size()) {
    throw std::invalid_argument("batch_step: states/actions length mismatch");
  }
  std::vector<WorldState> next;
  next.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    next.push_back(step(states[i], actions[i], dt, cfg));
  }
  return next;
}

}  // namespace spikegrasp::env
