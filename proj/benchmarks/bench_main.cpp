#include "uniloc/numcore/matrix.hpp"
#include "uniloc/numcore/rng.hpp"
#include "uniloc/retrieval/database.hpp"
#include "uniloc/retrieval/search.hpp"
#include "uniloc/scenegen/world.hpp"
#include "uniloc/train/model.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace uniloc;
using numcore::Matrix;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    numcore::Rng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

const std::vector<scenegen::SceneTriplet>& bench_world() {
    static const auto data = [] {
        scenegen::WorldConfig wc;
        wc.numScenes = 64;
        return scenegen::generate_world(wc);
    }();
    return data;
}

} // namespace

static void BM_matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_matrix(n, n, 1);
    const Matrix b = random_matrix(n, n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(numcore::matmul(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_matmul)->Arg(16)->Arg(64)->Arg(128);

static void BM_query_topk(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    constexpr std::size_t kDim = 64;
    retrieval::DescriptorDB db;
    db.modality = scene::Modality::image;
    db.vectors = random_matrix(m, kDim, 3);
    for (std::size_t r = 0; r < m; ++r) {
        double n2 = 0.0;
        for (double v : db.vectors.row_span(r)) n2 += v * v;
        for (double& v : db.vectors.row_span(r)) v /= std::sqrt(n2);
        db.ids.push_back(r);
        db.locations.push_back({static_cast<double>(r), 0.0});
    }
    const Matrix q = random_matrix(1, kDim, 4);
    for (auto _ : state) benchmark::DoNotOptimize(retrieval::query_topk(db, q.row_span(0), 5));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}
BENCHMARK(BM_query_topk)->Arg(128)->Arg(1024)->Arg(10000);

static void BM_scene_descriptors(benchmark::State& state) {
    const auto m = static_cast<scene::Modality>(state.range(0));
    const auto& data = bench_world();
    std::vector<const scenegen::SceneTriplet*> scenes;
    for (const auto& s : data) scenes.push_back(&s);
    train::ModelOptions opts;
    numcore::ParamStore store;
    train::init_modality(store, m, data.front().instances.front().stubImageVec.size(), 64, opts.sap, 5);
    for (auto _ : state) benchmark::DoNotOptimize(retrieval::build_db(scenes, m, store, opts, {6, 0}));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scenes.size()));
    state.SetLabel(std::string(scene::modality_key(m)));
}
BENCHMARK(BM_scene_descriptors)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
