#pragma once

#include "uniloc/scenegen/types.hpp"

#include <vector>

namespace uniloc::scenegen {

// Builds a deterministic synthetic city strip: a meandering x-monotone trajectory, a
// persistent pool of roadside objects shared by nearby scenes, and one SceneTriplet per
// accepted camera location. Splits are contiguous spatial blocks along the trajectory
// (train, then val, then test). Throws ErrorKind::config for invalid settings and
// ErrorKind::generation when the extent cannot hold the requested scenes.
std::vector<SceneTriplet> generate_world(const WorldConfig& cfg);

// Scene counts per split implied by cfg.splitFractions (rounded; test takes the remainder).
std::array<std::size_t, 3> split_counts(const WorldConfig& cfg);

} // namespace uniloc::scenegen
