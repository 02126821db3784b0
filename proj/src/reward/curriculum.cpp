#include "spikegrasp/reward.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace spikegrasp::rew {

const char* stage_name(StageId id) {
  switch (id) {
    case StageId::ExplorationOriented:
      return "exploration";
    case StageId::SkillLearning:
      return "skill";
    case StageId::TaskExecution:
      return "execution";
  }
  return "unknown";
}

CurriculumStage make_stage(StageId id, bool tactile_phase) {
  CurriculumStage stage;
  stage.id = id;
  switch (id) {
    case StageId::ExplorationOriented:
      stage.w_explore = 1.0;
      stage.w_grasp = 0.0;
      stage.w_lift = 0.0;
      stage.rule = SuccessRule::Approach;
      break;
    case StageId::SkillLearning:
      stage.w_explore = 0.5;
      stage.w_grasp = 1.0;
      stage.w_lift = 0.0;
      stage.rule = tactile_phase ? SuccessRule::GraspTactile
                                 : SuccessRule::GraspGeometric;
      break;
    case StageId::TaskExecution:
      stage.w_explore = 0.25;
      stage.w_grasp = 0.5;
      stage.w_lift = 1.0;
      stage.rule = SuccessRule::Lift;
      break;
  }
  return stage;
}

double stage_reward(const CurriculumStage& stage, const env::WorldState& state,
                    const env::TactileFeatures& tact, const RewardParams& p) {
  double r = stage.w_explore *
             (r_geometry(state, p) + r_symmetry(state, p) + r_hover(state, p));
  if (stage.w_grasp != 0.0) r += stage.w_grasp * r_touch_grasp(state, tact, p);
  if (stage.w_lift != 0.0) r += stage.w_lift * r_pull_lift(state, p);
  return r;
}

bool success(const CurriculumStage& stage, const env::WorldState& state,
             const env::TactileFeatures& tact, const RewardParams& p) {
  switch (stage.rule) {
    case SuccessRule::Approach: {
      const double d_mid = norm(state.p_mid - state.p_obj);
      const double off = std::fabs(state.p_mid.y - state.p_obj.y);
      return d_mid < p.delta2 && off < p.delta1;
    }
    case SuccessRule::GraspGeometric: {
      const double d_mid = norm(state.p_mid - state.p_obj);
      const double gap_err = std::fabs(state.gap_eef - (state.s_obj + p.epsilon));
      return gap_err < p.epsilon && d_mid < p.delta2;
    }
    case SuccessRule::GraspTactile:
      return tact.contact_lf && tact.contact_rf && tact.symmetry < p.f_tol;
    case SuccessRule::Lift:
      return state.h > p.h1;
  }
  return false;
}

bool lift_strong(const env::WorldState& state, const RewardParams& p) {
  return state.h > p.h2;
}

void CurriculumConfig::validate() const {
  auto bad = [](const char* what) {
    throw std::invalid_argument(std::string("curriculum config: ") + what);
  };
  if (!(advance_threshold > 0.0 && advance_threshold <= 1.0)) {
    bad("advance threshold must be in (0, 1]");
  }
  if (window < 1) bad("window must be >= 1");
  if (min_updates < 1) bad("min updates must be >= 1");
  if (tactile_handover < 0) bad("tactile handover must be >= 0");
}

void StageProgress::record_rate(double rate, int window) {
  recent.push_back(rate);
  const std::size_t cap = static_cast<std::size_t>(window);
  if (recent.size() > cap) {
    recent.erase(recent.begin(),
                 recent.begin() + static_cast<std::ptrdiff_t>(recent.size() - cap));
  }
}

double StageProgress::rolling_rate() const {
  if (recent.empty()) return 0.0;
  double s = 0.0;
  for (double r : recent) s += r;
  return s / static_cast<double>(recent.size());
}

StageId advance(const StageProgress& progress, StageId stage,
                const CurriculumConfig& cfg) {
  if (stage == StageId::TaskExecution) return stage;
  if (progress.updates_in_stage < cfg.min_updates) return stage;
  if (progress.recent.size() < static_cast<std::size_t>(cfg.window)) return stage;
  if (progress.rolling_rate() < cfg.advance_threshold) return stage;
  return static_cast<StageId>(static_cast<int>(stage) + 1);
}

bool CurriculumState::try_advance(const CurriculumConfig& cfg) {
  const StageId next = advance(progress, stage, cfg);
  if (next == stage) return false;
  stage = next;
  progress = StageProgress{};
  return true;
}

}  // namespace spikegrasp::rew
