#include <cmath>
#include <stdexcept>

#include <doctest.h>

#include "spikegrasp/reward.hpp"
#include "spikegrasp/rng.hpp"

using namespace spikegrasp;

namespace {

env::WorldState craft(const Vec3& p_mid, double gap, const Vec3& p_obj,
                      double side) {
  env::WorldState s;
  s.p_mid = p_mid;
  s.gap = gap;
  s.p_lf = p_mid - Vec3{0.0, gap / 2.0, 0.0};
  s.p_rf = p_mid + Vec3{0.0, gap / 2.0, 0.0};
  s.gap_eef = gap;
  s.p_obj = p_obj;
  s.s_obj = side;
  s.z_spawn = p_obj.z;
  return s;
}

env::WorldState random_state(Rng& rng) {
  env::WorldState s = craft({rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                             rng.uniform(-0.3, 0.3)},
                            rng.uniform(0.0, 0.15),
                            {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                             rng.uniform(-0.3, 0.3)},
                            rng.uniform(0.04, 0.08));
  s.yaw = rng.uniform(-3.1, 3.1);
  s.pitch = rng.uniform(-1.2, 1.2);
  s.h = rng.uniform(-0.05, 0.3);
  s.f_lf = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
            rng.uniform(-3.0, 3.0)};
  s.f_rf = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0),
            rng.uniform(-3.0, 3.0)};
  s.contact_lf = rng.uniform() < 0.5;
  s.contact_rf = rng.uniform() < 0.5;
  return s;
}

}  // namespace

TEST_SUITE("reward") {

TEST_CASE("geometry terms match the closed form") {
  rew::RewardParams p;  // alpha (.5,.5,.3), lambda (5,5,8)
  rew::ApproachDistances d{0.1, 0.1, 0.02};
  CHECK(rew::geometry_terms(d, p) ==
        doctest::Approx(0.79028829145074053).epsilon(1e-12));

  // Zero distance saturates at the alpha sum; far away decays toward zero.
  CHECK(rew::geometry_terms({0.0, 0.0, 0.0}, p) ==
        doctest::Approx(p.alpha1 + p.alpha2 + p.alpha3).epsilon(1e-12));
  CHECK(rew::geometry_terms({5.0, 5.0, 5.0}, p) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("approach distances from a crafted pose") {
  const env::WorldState s = craft({0.0, -0.1, 0.0}, 0.1, {0.0, 0.0, 0.0}, 0.05);
  const rew::ApproachDistances d = rew::approach_distances(s);
  // fingertips at y = -0.15 and -0.05: mean of (0.1 + 0.15 + 0.05) / 3
  CHECK(d.d1 == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(d.d2 == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(d.d3 == doctest::Approx(0.0).epsilon(1e-12));  // offset is pure y
}

TEST_CASE("symmetry and hover match the closed forms") {
  rew::RewardParams p;
  env::WorldState s = craft({0.0, 0.01, 0.0}, 0.08, {0.0, 0.0, 0.0}, 0.05);
  CHECK(rew::r_symmetry(s, p) ==
        doctest::Approx(0.20798161486607541).epsilon(1e-12));
  CHECK(rew::r_hover(s, p) ==
        doctest::Approx(-0.67032004603563933).epsilon(1e-12));

  // Hover penalty is bounded above by -exp(-lambda5 * delta2) at zero offset.
  env::WorldState centered = craft({0.0, 0.0, 0.0}, 0.08, {0.0, 0.0, 0.0}, 0.05);
  CHECK(rew::r_hover(centered, p) ==
        doctest::Approx(-std::exp(-p.lambda5 * p.delta2)).epsilon(1e-12));
}

TEST_CASE("touch-grasp reward matches the closed form") {
  rew::RewardParams p;
  env::WorldState s = craft({0.0, 0.0, 0.0}, 0.07, {0.0, 0.0, 0.0}, 0.05);
  // gap_err = |0.07 - 0.06| = 0.01; forces give align = 2 + 1.5 = 3.5 and
  // symmetry 0.5; both fingers in contact.
  s.f_lf = {0.0, 2.0, 0.0};
  s.f_rf = {0.0, -1.5, 0.0};
  s.contact_lf = s.contact_rf = true;
  const env::TactileFeatures tact = env::tactile_features(s);
  CHECK(tact.symmetry == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rew::r_touch_grasp(s, tact, p) ==
        doctest::Approx(3.6254720810826289).epsilon(1e-12));

  // Force-free floor: gap term plus the balance half.
  env::WorldState idle = craft({0.0, 0.0, 0.0}, 0.07, {0.0, 0.0, 0.0}, 0.05);
  const env::TactileFeatures none = env::tactile_features(idle);
  CHECK(rew::r_touch_grasp(idle, none, p) ==
        doctest::Approx(std::exp(-0.5) + 0.5).epsilon(1e-12));
}

TEST_CASE("pull-lift reward matches the closed form and saturates") {
  rew::RewardParams p;
  env::WorldState s = craft({0.0, 0.0, 0.1}, 0.05, {0.0, 0.0, 0.1}, 0.05);
  s.yaw = 3.14159265358979323846;  // finger axis flipped onto -Y
  s.h = 0.12;
  CHECK(rew::r_pull_lift(s, p) == doctest::Approx(1.9).epsilon(1e-9));

  s.h = 2.0;  // far past the cap
  CHECK(rew::r_pull_lift(s, p) ==
        doctest::Approx(p.alpha8 + p.alpha9 * p.gamma2).epsilon(1e-9));
}

TEST_CASE("rewards are translation invariant") {
  rew::RewardParams p;
  Rng rng(13);
  for (int i = 0; i < 50; ++i) {
    env::WorldState s = random_state(rng);
    env::WorldState t = s;
    const Vec3 shift{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                     rng.uniform(-1.0, 1.0)};
    t.p_mid += shift;
    t.p_lf += shift;
    t.p_rf += shift;
    t.p_obj += shift;
    CHECK(rew::r_geometry(t, p) ==
          doctest::Approx(rew::r_geometry(s, p)).epsilon(1e-12));
    CHECK(rew::r_symmetry(t, p) ==
          doctest::Approx(rew::r_symmetry(s, p)).epsilon(1e-12));
    CHECK(rew::r_hover(t, p) ==
          doctest::Approx(rew::r_hover(s, p)).epsilon(1e-12));
    const env::TactileFeatures ts = env::tactile_features(s);
    const env::TactileFeatures tt = env::tactile_features(t);
    CHECK(rew::r_touch_grasp(t, tt, p) ==
          doctest::Approx(rew::r_touch_grasp(s, ts, p)).epsilon(1e-12));
  }
}

TEST_CASE("geometry reward decays monotonically with distance") {
  rew::RewardParams p;
  double prev = rew::geometry_terms({0.0, 0.0, 0.0}, p);
  for (double d = 0.02; d < 0.5; d += 0.02) {
    const double r = rew::geometry_terms({d, d, d}, p);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("stage blends compose the families with the stage weights") {
  rew::RewardParams p;
  Rng rng(14);
  const env::WorldState s = random_state(rng);
  const env::TactileFeatures tact = env::tactile_features(s);
  const double explore =
      rew::r_geometry(s, p) + rew::r_symmetry(s, p) + rew::r_hover(s, p);
  const double grasp = rew::r_touch_grasp(s, tact, p);
  const double lift = rew::r_pull_lift(s, p);

  const rew::CurriculumStage s1 =
      rew::make_stage(rew::StageId::ExplorationOriented, false);
  const rew::CurriculumStage s2 =
      rew::make_stage(rew::StageId::SkillLearning, false);
  const rew::CurriculumStage s3 =
      rew::make_stage(rew::StageId::TaskExecution, false);

  CHECK(s1.w_explore == 1.0);
  CHECK(s1.w_grasp == 0.0);
  CHECK(s1.w_lift == 0.0);
  CHECK(s2.w_explore == 0.5);
  CHECK(s2.w_grasp == 1.0);
  CHECK(s2.w_lift == 0.0);
  CHECK(s3.w_explore == 0.25);
  CHECK(s3.w_grasp == 0.5);
  CHECK(s3.w_lift == 1.0);

  CHECK(rew::stage_reward(s1, s, tact, p) ==
        doctest::Approx(explore).epsilon(1e-12));
  CHECK(rew::stage_reward(s2, s, tact, p) ==
        doctest::Approx(0.5 * explore + grasp).epsilon(1e-12));
  CHECK(rew::stage_reward(s3, s, tact, p) ==
        doctest::Approx(0.25 * explore + 0.5 * grasp + lift).epsilon(1e-12));
}

TEST_CASE("stage success criteria") {
  rew::RewardParams p;
  const rew::CurriculumStage s1 =
      rew::make_stage(rew::StageId::ExplorationOriented, false);
  const rew::CurriculumStage s2g =
      rew::make_stage(rew::StageId::SkillLearning, false);
  const rew::CurriculumStage s2t =
      rew::make_stage(rew::StageId::SkillLearning, true);
  const rew::CurriculumStage s3 =
      rew::make_stage(rew::StageId::TaskExecution, false);
  CHECK(s2g.rule == rew::SuccessRule::GraspGeometric);
  CHECK(s2t.rule == rew::SuccessRule::GraspTactile);

  // Approach: midpoint within delta2 and laterally within delta1.
  env::WorldState near = craft({0.02, 0.005, 0.0}, 0.1, {0.0, 0.0, 0.0}, 0.05);
  CHECK(rew::success(s1, near, env::tactile_features(near), p));
  env::WorldState far = craft({0.2, 0.0, 0.0}, 0.1, {0.0, 0.0, 0.0}, 0.05);
  CHECK_FALSE(rew::success(s1, far, env::tactile_features(far), p));

  // Geometric grasp: gap within epsilon of s + epsilon, and still near.
  env::WorldState fit = craft({0.0, 0.0, 0.0}, 0.055, {0.0, 0.0, 0.0}, 0.05);
  CHECK(rew::success(s2g, fit, env::tactile_features(fit), p));
  env::WorldState wide = craft({0.0, 0.0, 0.0}, 0.12, {0.0, 0.0, 0.0}, 0.05);
  CHECK_FALSE(rew::success(s2g, wide, env::tactile_features(wide), p));

  // Tactile grasp: both contacts with balanced force magnitudes.
  env::WorldState held = fit;
  held.contact_lf = held.contact_rf = true;
  held.f_lf = {0.0, 1.0, 0.0};
  held.f_rf = {0.0, -1.2, 0.0};
  CHECK(rew::success(s2t, held, env::tactile_features(held), p));
  held.f_rf = {0.0, -2.0, 0.0};  // imbalance beyond f_tol
  CHECK_FALSE(rew::success(s2t, held, env::tactile_features(held), p));
  held.f_rf = {0.0, -1.0, 0.0};
  held.contact_rf = false;
  CHECK_FALSE(rew::success(s2t, held, env::tactile_features(held), p));

  // Lift: height above h1; strong lift above h2.
  env::WorldState up = fit;
  up.h = 0.15;
  CHECK(rew::success(s3, up, env::tactile_features(up), p));
  CHECK_FALSE(rew::lift_strong(up, p));
  up.h = 0.25;
  CHECK(rew::lift_strong(up, p));
  up.h = 0.05;
  CHECK_FALSE(rew::success(s3, up, env::tactile_features(up), p));
}

TEST_CASE("curriculum advancement gate") {
  rew::CurriculumConfig cfg;  // threshold .8, window 10, min_updates 50
  rew::StageProgress ready;
  ready.updates_in_stage = 60;
  for (int i = 0; i < 10; ++i) ready.record_rate(0.9, cfg.window);
  CHECK(rew::advance(ready, rew::StageId::ExplorationOriented, cfg) ==
        rew::StageId::SkillLearning);

  // Same rates but not enough dwell time.
  rew::StageProgress young = ready;
  young.updates_in_stage = 10;
  CHECK(rew::advance(young, rew::StageId::ExplorationOriented, cfg) ==
        rew::StageId::ExplorationOriented);

  // Enough dwell but an incomplete window.
  rew::StageProgress sparse;
  sparse.updates_in_stage = 60;
  for (int i = 0; i < 5; ++i) sparse.record_rate(1.0, cfg.window);
  CHECK(rew::advance(sparse, rew::StageId::ExplorationOriented, cfg) ==
        rew::StageId::ExplorationOriented);

  // Mean below threshold holds.
  rew::StageProgress weak;
  weak.updates_in_stage = 60;
  for (int i = 0; i < 10; ++i) weak.record_rate(i < 5 ? 0.9 : 0.6, cfg.window);
  CHECK(rew::advance(weak, rew::StageId::ExplorationOriented, cfg) ==
        rew::StageId::ExplorationOriented);

  // The last stage is terminal.
  CHECK(rew::advance(ready, rew::StageId::TaskExecution, cfg) ==
        rew::StageId::TaskExecution);

  // Only the most recent `window` rates count.
  rew::StageProgress recover;
  recover.updates_in_stage = 100;
  for (int i = 0; i < 10; ++i) recover.record_rate(0.0, cfg.window);
  for (int i = 0; i < 10; ++i) recover.record_rate(0.95, cfg.window);
  CHECK(rew::advance(recover, rew::StageId::SkillLearning, cfg) ==
        rew::StageId::TaskExecution);

  // CurriculumState resets progress on a transition.
  rew::CurriculumState state;
  state.progress = ready;
  CHECK(state.try_advance(cfg));
  CHECK(state.stage == rew::StageId::SkillLearning);
  CHECK(state.progress.updates_in_stage == 0);
  CHECK(state.progress.recent.empty());
  CHECK_FALSE(state.try_advance(cfg));

  // Handover flips the stage-II rule partway through the dwell.
  state.progress.updates_in_stage = cfg.tactile_handover;
  CHECK(state.current(cfg).rule == rew::SuccessRule::GraspTactile);
  state.progress.updates_in_stage = cfg.tactile_handover - 1;
  CHECK(state.current(cfg).rule == rew::SuccessRule::GraspGeometric);
}

TEST_CASE("stage names and parameter validation") {
  CHECK(std::string(rew::stage_name(rew::StageId::ExplorationOriented)) ==
        "exploration");
  CHECK(std::string(rew::stage_name(rew::StageId::SkillLearning)) == "skill");
  CHECK(std::string(rew::stage_name(rew::StageId::TaskExecution)) ==
        "execution");

  rew::RewardParams bad;
  bad.lambda3 = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  rew::RewardParams order;
  order.h2 = order.h1;
  CHECK_THROWS_AS(order.validate(), std::invalid_argument);
  rew::CurriculumConfig cc;
  cc.window = 0;
  CHECK_THROWS_AS(cc.validate(), std::invalid_argument);
}

}  // TEST_SUITE
