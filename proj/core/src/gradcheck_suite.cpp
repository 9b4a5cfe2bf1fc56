#include "uniloc/train/gradcheck_suite.hpp"

#include "uniloc/errors.hpp"
#include "uniloc/loss/contrastive.hpp"
#include "uniloc/numcore/gradcheck.hpp"
#include "uniloc/numcore/nn.hpp"
#include "uniloc/numcore/rng.hpp"
#include "uniloc/scenegen/world.hpp"
#include "uniloc/train/model.hpp"

#include <chrono>
#include <functional>

namespace uniloc::train {

namespace {

constexpr std::size_t kDim = 8;
constexpr std::size_t kStub = 8;
constexpr std::size_t kInstances = 3;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    numcore::Rng rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = rng.normal();
    return m;
}

// Two generated scenes cut down to three instances each.
std::vector<SceneTriplet> tiny_scenes(std::uint64_t seed) {
    scenegen::WorldConfig wc;
    wc.numScenes = 2;
    wc.stubDim = kStub;
    wc.seed = seed;
    auto scenes = scenegen::generate_world(wc);
    for (auto& s : scenes) s.instances.resize(kInstances);
    return scenes;
}

// init(store, attempt) fills a fresh store. At width 8 an unlucky draw can leave every ReLU of a
// branch dead for some instance, which the final normalization rejects; such draws are redrawn.
BlockCheck check(std::string name, const numcore::LossBuilder& build,
                 const std::function<void(ParamStore&, std::uint64_t)>& init, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    ParamStore store;
    numcore::GradCheckReport report;
    // A smaller step than the default keeps the stencil off nearby ReLU and max kinks.
    numcore::GradCheckOptions options;
    options.step = 1e-6;
    for (std::uint64_t attempt = 0;; ++attempt) {
        store = ParamStore{};
        init(store, attempt);
        // Zero biases put exactly-zero pre-activations on the ReLU kink (black colours, dead
        // rows); a small jitter moves the check to a generic point.
        numcore::Rng jitter(numcore::mix_seed(seed, 0x6a69747465 + attempt));
        for (auto& [path, entry] : store)
            for (double& v : entry.tensor.data()) v += 0.05 * jitter.normal();
        try {
            report = numcore::grad_check(build, store, seed, options);
            break;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::degenerateScene || attempt == 7) throw;
        }
    }
    BlockCheck out;
    out.block = std::move(name);
    out.worst = report.worst();
    out.worstPath = report.worst_path();
    out.parameters = store.parameter_count();
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace

std::vector<BlockCheck> run_gradcheck_suite(std::uint64_t seed) {
    using namespace numcore;
    std::vector<BlockCheck> out;
    // Each attempt draws from its own stream.
    auto draw = [seed](std::uint64_t tag, std::uint64_t attempt) { return mix_seed(mix_seed(seed, tag), attempt); };
    const Matrix target = random_matrix(2 * kInstances, kDim, mix_seed(seed, 1));

    {
        const Matrix x = random_matrix(2 * kInstances, kDim, mix_seed(seed, 3));
        out.push_back(check("mlp3", [&](Graph& g) {
            return sum_all(g, hadamard(g, mlp3_forward(g, g.constant(x), "mlp"), g.constant(target)));
        }, [&](ParamStore& s, std::uint64_t a) { add_mlp3(s, "mlp", kDim, kDim, kDim, draw(2, a)); }, seed));
    }
    {
        const Matrix x = random_matrix(2 * kInstances, kDim, mix_seed(seed, 5));
        const std::vector<bool> mask{true, true, false, true, true, true};
        out.push_back(check("mhsa_block", [&](Graph& g) {
            const Var y = mhsa_block_forward(g, g.constant(x), mask, "mhsa", 2, kInstances);
            return sum_all(g, hadamard(g, y, g.constant(target)));
        }, [&](ParamStore& s, std::uint64_t a) { add_mhsa_block(s, "mhsa", kDim, 2 * kDim, draw(4, a)); }, seed));
    }

    const auto scenes = tiny_scenes(seed);
    const std::vector<const SceneTriplet*> batch{&scenes[0], &scenes[1]};

    std::vector<instance::TextInstanceInput> txt;
    std::vector<instance::ImageInstanceInput> img;
    std::vector<instance::PointInstanceInput> pts;
    for (const auto* sc : batch)
        for (const auto& rec : sc->instances) {
            txt.push_back(instance::make_text_input(rec, {}));
            img.push_back(instance::make_image_input(rec));
            pts.push_back(instance::make_point_input(rec, sc->location));
        }

    out.push_back(check("text_branch", [&](Graph& g) {
        return sum_all(g, hadamard(g, instance::encode_text_batch(g, txt), g.constant(target)));
    }, [&](ParamStore& s, std::uint64_t a) { instance::init_text_branch(s, kStub, kDim, draw(6, a)); }, seed));
    out.push_back(check("image_branch", [&](Graph& g) {
        return sum_all(g, hadamard(g, instance::encode_image_batch(g, img), g.constant(target)));
    }, [&](ParamStore& s, std::uint64_t a) { instance::init_image_branch(s, kStub, kDim, draw(7, a)); }, seed));
    out.push_back(check("point_branch", [&](Graph& g) {
        return sum_all(g, hadamard(g, instance::encode_point_batch(g, pts), g.constant(target)));
    }, [&](ParamStore& s, std::uint64_t a) { instance::init_point_branch(s, kDim, draw(8, a)); }, seed));

    const Matrix sceneTarget = random_matrix(2, kDim, mix_seed(seed, 9));
    const Matrix inst = random_matrix(2 * kInstances, kDim, mix_seed(seed, 10));
    for (const auto mode : {scene::PoolMode::sap, scene::PoolMode::max}) {
        scene::SapConfig cfg;
        cfg.heads = 2;
        cfg.pool = mode;
        out.push_back(check(mode == scene::PoolMode::sap ? "sap_stack" : "max_pool_stack", [&](Graph& g) {
            const Var f = scene::scene_descriptors(g, g.constant(inst), {kInstances, kInstances}, Modality::image, cfg);
            return sum_all(g, hadamard(g, f, g.constant(sceneTarget)));
        }, [&](ParamStore& s, std::uint64_t a) { scene::init_sap(s, Modality::image, kDim, cfg, draw(11, a)); }, seed));
    }

    ModelOptions opts;
    opts.sap.heads = 2;
    out.push_back(check("scene_loss", [&](Graph& g) {
        const Var i = scene_batch_descriptors(g, batch, Modality::image, opts, {});
        const Var t = scene_batch_descriptors(g, batch, Modality::text, opts, {});
        const Var p = scene_batch_descriptors(g, batch, Modality::point, opts, {});
        return loss::combined_scene_loss(g, loss::batch_contrastive(g, i, t, 0.1),
                                         loss::batch_contrastive(g, i, p, 0.1), 0.3);
    }, [&](ParamStore& s, std::uint64_t a) {
        for (const auto m : scene::kAllModalities) init_modality(s, m, kStub, kDim, opts.sap, draw(12, a));
    }, seed));
    return out;
}

} // namespace uniloc::train
