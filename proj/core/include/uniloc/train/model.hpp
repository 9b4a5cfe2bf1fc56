#pragma once

#include "uniloc/instance/encoders.hpp"
#include "uniloc/scene/sap.hpp"
#include "uniloc/scenegen/types.hpp"

#include <span>
#include <vector>

namespace uniloc::train {

using numcore::Graph;
using numcore::Matrix;
using numcore::ParamStore;
using numcore::Var;
using scene::Modality;
using scenegen::SceneTriplet;

struct ModelOptions {
    scene::SapConfig sap;
    instance::EncoderOptions encoder;
};

// How the text modality samples hints from a scene.
struct HintPolicy {
    std::size_t k = 6;
    std::uint64_t seed = 0;
};

// Seeded uniform sample of min(k, n) instance indices, returned in ascending order. For one
// (scene, seed) the samples for increasing k are nested.
std::vector<std::size_t> select_text_hints(const SceneTriplet& scene, std::size_t k, std::uint64_t seed);

// One unit-norm row per scene for the requested modality.
Var scene_batch_descriptors(Graph& g, std::span<const SceneTriplet* const> scenes, Modality m,
                            const ModelOptions& opts, const HintPolicy& hints);

// Parameters for one modality: its instance branch plus its SAP stack.
void init_modality(ParamStore& store, Modality m, std::size_t stubDim, std::size_t dim, const scene::SapConfig& sap,
                   std::uint64_t seed);

} // namespace uniloc::train
