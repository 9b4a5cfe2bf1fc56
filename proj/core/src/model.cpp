#include "uniloc/train/model.hpp"

#include "uniloc/errors.hpp"
#include "uniloc/numcore/rng.hpp"

#include <algorithm>
#include <numeric>

namespace uniloc::train {

std::vector<std::size_t> select_text_hints(const SceneTriplet& scene, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx(scene.instances.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (k >= idx.size()) return idx;
    numcore::Rng rng(numcore::mix_seed(seed, scene.sceneId));
    rng.shuffle(idx);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Var scene_batch_descriptors(Graph& g, std::span<const SceneTriplet* const> scenes, Modality m,
                            const ModelOptions& opts, const HintPolicy& hints) {
    if (scenes.empty()) raise(ErrorKind::contract, "scene batch is empty");
    std::vector<std::size_t> counts;
    counts.reserve(scenes.size());
    Var inst;
    switch (m) {
    case Modality::text: {
        if (hints.k == 0) raise(ErrorKind::config, "hintsPerScene must be positive");
        std::vector<instance::TextInstanceInput> in;
        for (const SceneTriplet* s : scenes) {
            const auto pick = select_text_hints(*s, hints.k, hints.seed);
            for (std::size_t i : pick) in.push_back(instance::make_text_input(s->instances[i], opts.encoder));
            counts.push_back(pick.size());
        }
        if (in.empty()) raise(ErrorKind::emptyScene, "no hints in batch");
        inst = instance::encode_text_batch(g, in, opts.encoder);
        break;
    }
    case Modality::image: {
        std::vector<instance::ImageInstanceInput> in;
        for (const SceneTriplet* s : scenes) {
            for (const auto& rec : s->instances) in.push_back(instance::make_image_input(rec));
            counts.push_back(s->instances.size());
        }
        if (in.empty()) raise(ErrorKind::emptyScene, "no instances in batch");
        inst = instance::encode_image_batch(g, in, opts.encoder);
        break;
    }
    case Modality::point: {
        std::vector<instance::PointInstanceInput> in;
        for (const SceneTriplet* s : scenes) {
            for (const auto& rec : s->instances) in.push_back(instance::make_point_input(rec, s->location));
            counts.push_back(s->instances.size());
        }
        if (in.empty()) raise(ErrorKind::emptyScene, "no instances in batch");
        inst = instance::encode_point_batch(g, in, opts.encoder);
        break;
    }
    }
    return scene::scene_descriptors(g, inst, counts, m, opts.sap);
}

void init_modality(ParamStore& store, Modality m, std::size_t stubDim, std::size_t dim, const scene::SapConfig& sap,
                   std::uint64_t seed) {
    switch (m) {
    case Modality::text: instance::init_text_branch(store, stubDim, dim, seed); break;
    case Modality::image: instance::init_image_branch(store, stubDim, dim, seed); break;
    case Modality::point: instance::init_point_branch(store, dim, seed); break;
    }
    scene::init_sap(store, m, dim, sap, seed);
}

} // namespace uniloc::train
