#include "uniloc/retrieval/database.hpp"

#include "uniloc/errors.hpp"

#include <algorithm>
#include <iostream>

namespace uniloc::retrieval {

namespace {

bool is_scene_fault(const Error& e) {
    return e.kind() == ErrorKind::emptyScene || e.kind() == ErrorKind::degenerateScene;
}

} // namespace

DescriptorDB build_db(std::span<const scenegen::SceneTriplet* const> scenes, Modality m,
                      const numcore::ParamStore& store, const train::ModelOptions& opts,
                      const train::HintPolicy& hints, std::size_t chunk) {
    std::size_t dim = 0;
    std::vector<double> flat;
    DescriptorDB acc;
    acc.modality = m;
    auto emit = [&](std::span<const scenegen::SceneTriplet* const> part, const Matrix& f) {
        dim = f.cols();
        for (std::size_t r = 0; r < part.size(); ++r) {
            acc.ids.push_back(part[r]->sceneId);
            acc.locations.push_back(part[r]->location);
            const auto row = f.row_span(r);
            flat.insert(flat.end(), row.begin(), row.end());
        }
    };
    chunk = std::max<std::size_t>(chunk, 1);
    for (std::size_t off = 0; off < scenes.size(); off += chunk) {
        const auto part = scenes.subspan(off, std::min(chunk, scenes.size() - off));
        try {
            numcore::Graph g(store);
            emit(part, g.value(train::scene_batch_descriptors(g, part, m, opts, hints)));
        } catch (const Error& e) {
            if (!is_scene_fault(e)) throw;
            // Retry one scene at a time to isolate the offenders.
            for (std::size_t i = 0; i < part.size(); ++i) {
                try {
                    numcore::Graph g(store);
                    emit(part.subspan(i, 1), g.value(train::scene_batch_descriptors(g, part.subspan(i, 1), m, opts, hints)));
                } catch (const Error& inner) {
                    if (!is_scene_fault(inner)) throw;
                    acc.skipped.push_back(part[i]->sceneId);
                    std::cerr << "warning: skipping scene " << part[i]->sceneId << " (" << scene::modality_key(m)
                              << "): " << inner.what() << '\n';
                }
            }
        }
    }
    acc.vectors = Matrix(acc.ids.size(), dim, std::move(flat));
    validate(acc);
    return acc;
}

DbSet build_all(std::span<const scenegen::SceneTriplet* const> scenes, const numcore::ParamStore& store,
                const train::ModelOptions& opts, const train::HintPolicy& hints) {
    DbSet out;
    for (Modality m : scene::kAllModalities) out.emplace(m, build_db(scenes, m, store, opts, hints));
    return out;
}

} // namespace uniloc::retrieval
