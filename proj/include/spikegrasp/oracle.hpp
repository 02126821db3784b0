#pragma once

// Scripted grasp controller used as a physics oracle and trajectory source.
// Stateless: each call maps the current world state to one action. Phases are
// inferred from geometry and contact, in order: align laterally at a standoff
// in front of the object, drive in along X with the gap pre-opened just past
// the cube, close to a light squeeze once centered, then lift to lift_height
// above the spawn point.

#include "spikegrasp/env.hpp"

namespace spikegrasp::oracle {

env::Action oracle_action(const env::WorldState& state,
                          const env::EnvConfig& cfg,
                          double lift_height = 0.18);

}  // namespace spikegrasp::oracle
