#pragma once

// Staged grasping reward. Five shaping families (approach geometry, lateral
// symmetry, hover containment, tactile grasp, pull-lift) are blended by a
// three-stage curriculum; each stage also carries its own success criterion.

#include <string_view>

#include "spikegrasp/env.hpp"

namespace spikegrasp::rew {

struct RewardParams {
  double alpha1 = 0.5, alpha2 = 0.5, alpha3 = 0.3;  // approach geometry
  double alpha4 = 0.5;                              // finger symmetry
  double alpha5 = 1.0;                              // gap shaping
  double alpha8 = 0.5, alpha9 = 2.0;                // pull-lift
  double lambda1 = 5.0, lambda2 = 5.0, lambda3 = 8.0;
  double lambda4 = 10.0, lambda5 = 10.0;
  double lambda6 = 50.0, lambda7 = 1.0;
  double gamma1 = 2.0, gamma2 = 5.0;
  double delta1 = 0.03, delta2 = 0.05, delta3 = 0.02;  // meters
  double epsilon = 0.01;                                // gap margin, meters
  double h1 = 0.10, h2 = 0.20;                          // lift thresholds
  double f_tol = 0.5;                                   // N
  double time_penalty = 0.001;

  void validate() const;  // throws std::invalid_argument
};

// Approach-geometry distances derived from a state: d1 is the mean fingertip
// and midpoint distance to the object center, d2 the midpoint distance, d3
// the midpoint distance projected onto the X-Z plane (approach alignment).
struct ApproachDistances {
  double d1 = 0.0, d2 = 0.0, d3 = 0.0;
};
ApproachDistances approach_distances(const env::WorldState& state);

// Sum of alpha_i * (1 - tanh(lambda_i * d_i)). Kept callable on raw distances
// so the shaping curve itself is testable.
double geometry_terms(const ApproachDistances& d, const RewardParams& p);

double r_geometry(const env::WorldState& state, const RewardParams& p);
double r_symmetry(const env::WorldState& state, const RewardParams& p);
double r_hover(const env::WorldState& state, const RewardParams& p);
double r_touch_grasp(const env::WorldState& state,
                     const env::TactileFeatures& tact, const RewardParams& p);
double r_pull_lift(const env::WorldState& state, const RewardParams& p);

// --- curriculum -------------------------------------------------------------

enum class StageId : int {
  ExplorationOriented = 0,
  SkillLearning = 1,
  TaskExecution = 2,
};

const char* stage_name(StageId id);

// A stage couples a reward blend (weights on the shaping families) with a
// success criterion; stage II tightens its criterion from geometric to
// tactile partway through.
enum class SuccessRule { Approach, GraspGeometric, GraspTactile, Lift };

struct CurriculumStage {
  StageId id = StageId::ExplorationOriented;
  double w_explore = 1.0;  // weight on r_geometry + r_symmetry + r_hover
  double w_grasp = 0.0;    // weight on r_touch_grasp
  double w_lift = 0.0;     // weight on r_pull_lift (0 or 1)
  SuccessRule rule = SuccessRule::Approach;
};

// tactile_phase selects the stage-II success handover (false: geometric
// criterion, true: tactile criterion). Ignored by stages I and III.
CurriculumStage make_stage(StageId id, bool tactile_phase);

// Blended shaping reward for the stage (no time penalty; the trainer
// subtracts RewardParams::time_penalty per step).
double stage_reward(const CurriculumStage& stage, const env::WorldState& state,
                    const env::TactileFeatures& tact, const RewardParams& p);

bool success(const CurriculumStage& stage, const env::WorldState& state,
             const env::TactileFeatures& tact, const RewardParams& p);

// Strong variant of the lift criterion (h > h2); reported, never gating.
bool lift_strong(const env::WorldState& state, const RewardParams& p);

struct CurriculumConfig {
  double advance_threshold = 0.8;
  int window = 10;       // evaluation windows in the rolling mean
  int min_updates = 50;  // minimum updates spent in a stage
  int tactile_handover = 25;  // updates-in-stage where stage II switches rule

  void validate() const;
};

struct StageProgress {
  std::vector<double> recent;  // last `window` evaluation success rates
  int updates_in_stage = 0;

  void record_rate(double rate, int window);
  double rolling_rate() const;  // mean of `recent`; 0 when empty
};

// Advancement decision: full window of evaluations at or above threshold and
// the minimum dwell satisfied. Stage III never advances further; stages never
// regress.
StageId advance(const StageProgress& progress, StageId stage,
                const CurriculumConfig& cfg);

struct CurriculumState {
  StageId stage = StageId::ExplorationOriented;
  StageProgress progress;

  CurriculumStage current(const CurriculumConfig& cfg) const {
    return make_stage(stage, progress.updates_in_stage >= cfg.tactile_handover);
  }
  // Returns true when the stage changed (progress resets).
  bool try_advance(const CurriculumConfig& cfg);
};

}  // namespace spikegrasp::rew
