#pragma once

// Microgravity two-finger grasping environment. A velocity-controlled gripper
// midpoint carries two fingertip spheres separated along its local Y axis; a
// free-floating cube with one rotational degree of freedom (yaw) responds to
// penalty contact forces. No gravity; an optional linear drag stands in for
// residual damping and can be disabled for momentum-conservation tests.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "spikegrasp/geom.hpp"
#include "spikegrasp/rng.hpp"

namespace spikegrasp::env {

struct EnvConfig {
  double dt = 1.0 / 60.0;
  int substeps = 4;
  int episode_len = 300;

  Vec3 workspace_min{-0.3, -0.3, -0.3};
  Vec3 workspace_max{0.3, 0.3, 0.3};
  Vec3 spawn_min{0.0, -0.1, -0.1};
  Vec3 spawn_max{0.2, 0.1, 0.1};
  Vec3 home_pos{-0.25, 0.0, 0.0};
  double home_gap = 0.12;

  double gap_min = 0.0;
  double gap_max = 0.15;
  double pitch_limit = 1.2;

  double side_min = 0.04;
  double side_max = 0.08;
  double object_mass = 0.1;
  double drag = 0.1;  // 1/s, applied to linear and yaw velocity

  double contact_kp = 1000.0;  // N/m
  double contact_kd = 10.0;    // N*s/m
  double finger_radius = 0.012;

  double max_speed = 0.25;     // m/s per translation axis
  double max_rot_rate = 1.0;   // rad/s
  double max_gap_rate = 0.1;   // m/s

  // Observation normalization scales. The relative-position block gets a
  // close-range scale of its own: the success radius is a few centimeters,
  // and against the workspace scale the last centimeters of approach are
  // all but flat to the network. Clamping beyond rel_scale loses nothing;
  // the absolute-position slots carry the far field.
  double pos_scale = 0.3;
  double rel_scale = 0.1;
  double vel_scale = 0.25;
  double force_scale = 5.0;

  void validate() const;  // throws std::invalid_argument
};

struct WorldState {
  Vec3 p_mid;          // gripper midpoint
  Vec3 p_lf, p_rf;     // fingertip centers
  double yaw = 0.0;    // gripper yaw about world Z
  double pitch = 0.0;  // gripper pitch about its yawed X axis
  Vec3 v_eef;          // commanded midpoint velocity actually applied
  double gap = 0.0;    // commanded finger separation
  double gap_eef = 0.0;  // |p_lf - p_rf|

  Vec3 p_obj, v_obj;
  double q_obj = 0.0;  // object yaw
  double w_obj = 0.0;  // object yaw rate
  double s_obj = 0.0;  // cube side length
  double z_spawn = 0.0;
  double h = 0.0;      // p_obj.z - z_spawn

  Vec3 f_lf, f_rf;     // mean contact force on each fingertip over the step
  bool contact_lf = false, contact_rf = false;

  int t = 0;
};

// Normalized action; every component is clamped to [-1, 1] then scaled by the
// config rates inside step().
struct Action {
  Vec3 v_cmd;
  double yaw_rate = 0.0;
  double pitch_rate = 0.0;
  double gap_rate = 0.0;
};

WorldState reset(const EnvConfig& cfg, Rng& rng);

// Pure step: advances one control interval of length dt using fixed substeps.
// Throws std::invalid_argument on non-finite action or dt <= 0.
WorldState step(const WorldState& state, const Action& action, double dt,
                const EnvConfig& cfg);

// Convenience using cfg.dt.
WorldState step(const WorldState& state, const Action& action,
                const EnvConfig& cfg);

// Contact force exerted on a fingertip sphere by the cube, and its reaction
// application point. Zero force when separated. Exposed for direct testing of
// the force law (spring along the contact normal, damping on the full
// relative velocity).
struct ContactResult {
  Vec3 force;        // on the fingertip
  Vec3 point;        // contact point on the cube surface (world)
  bool touching = false;
};
ContactResult sphere_cube_contact(const Vec3& center, double radius,
                                  const Vec3& cube_pos, double cube_yaw,
                                  double side, const Vec3& v_sphere,
                                  const Vec3& v_cube, double cube_yaw_rate,
                                  double kp, double kd);

struct TactileFeatures {
  double norm_lf = 0.0;
  double norm_rf = 0.0;
  double symmetry = 0.0;  // | |f_lf| - |f_rf| |
  double cos_lf = 0.0;    // alignment of f_lf with fingertip->object
  double cos_rf = 0.0;
  bool contact_lf = false;
  bool contact_rf = false;
};

TactileFeatures tactile_features(const WorldState& state);

// --- observation assembly -------------------------------------------------

inline constexpr int kObsDim = 29;

enum class Mode { Multimodal, Unimodal };

const char* mode_name(Mode mode);                  // "multimodal" | "unimodal"
bool parse_mode(std::string_view name, Mode& out);

struct Observation {
  std::array<double, kObsDim> values{};
  // 1 where the slot is populated; unimodal runs zero-fill and clear slots
  // 19..28 (tactile block and semantic block).
  std::array<std::uint8_t, kObsDim> active{};
};

// stage_index is 0, 1 or 2 and enters the semantic block as stage_index/2.
Observation observe(const WorldState& state, Mode mode, int stage_index,
                    const EnvConfig& cfg);

std::vector<WorldState> batch_step(std::span<const WorldState> states,
                                   std::span<const Action> actions, double dt,
                                   const EnvConfig& cfg);

}  // namespace spikegrasp::env
