#pragma once

#include "uniloc/retrieval/search.hpp"
#include "uniloc/train/model.hpp"

#include <vector>

namespace uniloc::retrieval {

// One scene descriptor per scene, computed in chunks. Scenes that violate the descriptor
// contract (empty or degenerate) are skipped, listed in db.skipped and reported on stderr.
DescriptorDB build_db(std::span<const scenegen::SceneTriplet* const> scenes, Modality m,
                      const numcore::ParamStore& store, const train::ModelOptions& opts,
                      const train::HintPolicy& hints, std::size_t chunk = 64);

DbSet build_all(std::span<const scenegen::SceneTriplet* const> scenes, const numcore::ParamStore& store,
                const train::ModelOptions& opts, const train::HintPolicy& hints);

} // namespace uniloc::retrieval
