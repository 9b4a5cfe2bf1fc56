#include "doctest.h"

#include "uniloc/errors.hpp"
#include "uniloc/loss/contrastive.hpp"
#include "uniloc/retrieval/database.hpp"
#include "uniloc/scenegen/world.hpp"
#include "uniloc/train/trainer.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

using namespace uniloc;
using namespace uniloc::train;
using numcore::tensors_equal;

namespace {

const std::vector<SceneTriplet>& small_world() {
    static const std::vector<SceneTriplet> data = [] {
        scenegen::WorldConfig wc;
        wc.numScenes = 72;
        wc.seed = 7;
        wc.stubDim = 16;
        return scenegen::generate_world(wc);
    }();
    return data;
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.D = 16;
    cfg.epochsInstance = 6;
    cfg.epochsScene = 2;
    cfg.batchInstance = 64;
    cfg.batchScene = 12;
    cfg.heads = 2;
    cfg.seed = 11;
    return cfg;
}

const PretrainedPair& small_pretrained() {
    static const PretrainedPair pair = pretrain_instance_models(small_world(), small_config());
    return pair;
}

bool all_zero(const Matrix& m) {
    return std::all_of(m.data().begin(), m.data().end(), [](double v) { return v == 0.0; });
}

SceneTriplet scene_with(std::size_t n) {
    SceneTriplet s;
    s.sceneId = 5;
    s.instances.resize(n);
    return s;
}

} // namespace

TEST_CASE("select_text_hints sampling") {
    const SceneTriplet s12 = scene_with(12);
    const auto a = select_text_hints(s12, 6, 0);
    CHECK(a.size() == 6);
    CHECK(a == select_text_hints(s12, 6, 0));
    CHECK(std::is_sorted(a.begin(), a.end()));
    CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 6);
    CHECK(a.back() < 12);

    // Smaller k keeps a subset of the larger sample.
    const auto b5 = select_text_hints(s12, 5, 0);
    const auto b4 = select_text_hints(s12, 4, 0);
    CHECK(std::includes(a.begin(), a.end(), b5.begin(), b5.end()));
    CHECK(std::includes(b5.begin(), b5.end(), b4.begin(), b4.end()));

    const SceneTriplet s7 = scene_with(7);
    CHECK(select_text_hints(s7, 9, 3) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
    CHECK(select_text_hints(s7, 7, 3) == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});

    // Different seeds eventually pick different subsets.
    bool differs = false;
    for (std::uint64_t seed = 1; seed < 20 && !differs; ++seed) differs = select_text_hints(s12, 6, seed) != a;
    CHECK(differs);
}

TEST_CASE("train config json") {
    TrainConfig cfg;
    cfg.alpha = 0.7;
    cfg.pool = scene::PoolMode::max;
    cfg.useUv = false;
    cfg.sapDepth = {2, 1, 3};
    const auto j = to_json(cfg);
    CHECK(train_config_from_json(nlohmann::json::parse(j.dump())) == cfg);
    CHECK(paper_train_config().batchScene == 64);
    CHECK(TrainConfig{}.batchScene == 32);

    nlohmann::json partial = {{"alpha", 0.9}};
    CHECK(train_config_from_json(partial).alpha == 0.9);
    CHECK(train_config_from_json(partial).D == 64);

    nlohmann::json bad = {{"alpah", 0.9}};
    try {
        train_config_from_json(bad);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        CHECK(std::string(e.what()).find("alpah") != std::string::npos);
    }

    auto expect_config_error = [](TrainConfig c) {
        try {
            validate(c);
            FAIL("expected a config error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::config);
        }
    };
    TrainConfig c;
    c.tau = 0.0;
    expect_config_error(c);
    c = {};
    c.alpha = 1.5;
    expect_config_error(c);
    c = {};
    c.D = 0;
    expect_config_error(c);
    c = {};
    c.batchScene = 0;
    expect_config_error(c);
    c = {};
    c.D = 18; // not divisible by 4 heads
    expect_config_error(c);
}

TEST_CASE("instance pretraining is deterministic and logged") {
    const auto& pair = small_pretrained();
    std::ostringstream log;
    const auto again = pretrain_instance_models(small_world(), small_config(), &log);
    CHECK(tensors_equal(pair.imageText.params, again.imageText.params));
    CHECK(tensors_equal(pair.imagePoint.params, again.imagePoint.params));

    CHECK(pair.imageText.stage == Stage::instanceIT);
    CHECK(pair.imagePoint.stage == Stage::instanceIP);
    CHECK(!pair.imageText.params.paths("text/").empty());
    CHECK(!pair.imageText.params.paths("image/").empty());
    CHECK(pair.imageText.params.paths("point/").empty());
    CHECK(!pair.imagePoint.params.paths("point/").empty());
    CHECK(!pair.imagePoint.params.paths("image/").empty());
    CHECK(pair.imagePoint.params.paths("text/").empty());

    std::size_t lines = 0;
    std::string line;
    std::istringstream in(log.str());
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("epoch"));
        CHECK(j.contains("lr"));
        CHECK(j.contains("loss"));
        ++lines;
    }
    CHECK(lines == 2 * small_config().epochsInstance);
}

TEST_CASE("instance training loss trends down") {
    for (const Checkpoint* ck : {&small_pretrained().imageText, &small_pretrained().imagePoint}) {
        const auto& h = ck->history;
        REQUIRE(h.size() == small_config().epochsInstance);
        CHECK(h.back().loss < h.front().loss);
        std::size_t down = 0;
        for (std::size_t i = 1; i < h.size(); ++i) down += h[i].loss < h[i - 1].loss;
        CHECK(down * 10 >= (h.size() - 1) * 9);
    }
}

TEST_CASE("scene parameters follow the transfer rule") {
    const auto cfg = small_config();
    const auto& pair = small_pretrained();
    const auto stub = dataset_stub_dim(small_world());
    CHECK(stub == 16);
    const ParamStore p = init_scene_params(stub, &pair, cfg);
    CHECK(tensors_equal(p, pair.imageText.params, "image/"));
    CHECK(tensors_equal(p, pair.imageText.params, "text/"));
    CHECK(tensors_equal(p, pair.imagePoint.params, "point/"));
    CHECK(!p.paths("sap/image/").empty());
    CHECK(!p.paths("sap/text/").empty());
    CHECK(!p.paths("sap/point/").empty());

    // Fresh attention pooling is the same with or without pretraining.
    const ParamStore fresh = init_scene_params(stub, nullptr, cfg);
    CHECK(tensors_equal(p, fresh, "sap/"));
    CHECK(!tensors_equal(p, fresh, "image/"));

    TrainConfig wide = cfg;
    wide.D = 32;
    try {
        init_scene_params(stub, &pair, wide);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }

    TrainConfig needs = cfg;
    needs.pretrain = true;
    CHECK_THROWS_AS(train_scene_model(small_world(), nullptr, needs), Error);
}

TEST_CASE("alpha one leaves the point pathway without gradient") {
    const auto cfg = small_config();
    const auto stub = dataset_stub_dim(small_world());
    const ParamStore p = init_scene_params(stub, &small_pretrained(), cfg);
    const auto train = split_view(small_world(), scenegen::Split::train);
    const std::vector<const SceneTriplet*> batch(train.begin(), train.begin() + 8);
    const auto opts = model_options(cfg);

    ParamStore grads = p;
    grads.zero_grad();
    Graph g(p);
    const Var i = scene_batch_descriptors(g, batch, Modality::image, opts, {6, 1});
    const Var t = scene_batch_descriptors(g, batch, Modality::text, opts, {6, 1});
    const Var pt = scene_batch_descriptors(g, batch, Modality::point, opts, {6, 1});
    const Var loss = loss::combined_scene_loss(g, loss::batch_contrastive(g, i, t, cfg.tau),
                                               loss::batch_contrastive(g, i, pt, cfg.tau), 1.0);
    g.backward(loss, grads);

    for (const auto& path : grads.paths("point/")) CHECK_MESSAGE(all_zero(grads.grad(path)), path);
    for (const auto& path : grads.paths("sap/point/")) CHECK_MESSAGE(all_zero(grads.grad(path)), path);
    bool textMoves = false;
    for (const auto& path : grads.paths("text/")) textMoves = textMoves || !all_zero(grads.grad(path));
    CHECK(textMoves);
}

TEST_CASE("frozen stub inputs are constants") {
    const auto cfg = small_config();
    const ParamStore p = init_scene_params(16, nullptr, cfg);
    const auto train = split_view(small_world(), scenegen::Split::train);
    const std::vector<const SceneTriplet*> batch(train.begin(), train.begin() + 4);
    Graph g(p);
    const Var i = scene_batch_descriptors(g, batch, Modality::image, model_options(cfg), {});
    const Var t = scene_batch_descriptors(g, batch, Modality::text, model_options(cfg), {});
    ParamStore grads = p;
    grads.zero_grad();
    g.backward(loss::batch_contrastive(g, i, t, cfg.tau), grads);
    // Every leaf that is not a parameter (stub vectors, colours, counts, UVs) is gradient-free.
    std::size_t constants = 0;
    for (std::size_t id = 0; id < g.size(); ++id) {
        const Var v{id};
        if (!g.requires_grad(v)) {
            ++constants;
            CHECK(!g.has_grad(v));
        }
    }
    CHECK(constants > 0);
}

TEST_CASE("scene training is deterministic and checkpoints round trip") {
    TrainConfig cfg = small_config();
    std::ostringstream log;
    const auto a = train_scene_model(small_world(), &small_pretrained(), cfg, &log);
    const auto b = train_scene_model(small_world(), &small_pretrained(), cfg);
    CHECK(tensors_equal(a.params, b.params));
    CHECK(a.epoch == b.epoch);
    CHECK(a.stage == Stage::scene);
    CHECK(a.history.size() == cfg.epochsScene);
    for (const auto& rec : a.history) {
        CHECK(rec.r1.size() == 8);
        CHECK(rec.r1.count("T2I") == 1);
    }

    std::string line;
    std::istringstream in(log.str());
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("r1").size() == 8);
        ++lines;
    }
    CHECK(lines == cfg.epochsScene);

    const auto dir = std::filesystem::temp_directory_path() / "uniloc_test_train";
    std::filesystem::create_directories(dir);
    const auto path = dir / "scene.ulc";
    save_checkpoint(a, path);
    CHECK(std::filesystem::exists(path.string() + ".json"));
    const auto back = load_checkpoint(path);
    CHECK(tensors_equal(back.params, a.params));
    CHECK(back.config == a.config);
    CHECK(back.epoch == a.epoch);
    CHECK(back.stage == a.stage);
    REQUIRE(back.history.size() == a.history.size());
    for (std::size_t e = 0; e < a.history.size(); ++e) {
        CHECK(back.history[e].loss == a.history[e].loss);
        CHECK(back.history[e].r1 == a.history[e].r1);
    }
    std::filesystem::remove_all(dir);

    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ulc"), Error);
}

TEST_CASE("untrained model sits near chance") {
    const auto cfg = small_config();
    const ParamStore p = init_scene_params(16, nullptr, cfg);
    const auto scenes = split_view(small_world(), scenegen::Split::train);
    const auto dbs = retrieval::build_all(scenes, p, model_options(cfg), {6, 0});
    const double m = static_cast<double>(scenes.size());
    for (const auto& task : retrieval::default_tasks()) {
        if (!task.involves_text()) continue;
        const auto r = retrieval::recall_at_k(dbs.at(task.query), dbs.at(task.db), {1, 3, 5},
                                              retrieval::Criterion::exact(), false, task.name());
        for (const auto& [k, v] : r.recall) CHECK_MESSAGE(v <= 3.0 * static_cast<double>(k) / m, task.name());
    }
}

TEST_CASE("evaluation reports are nested in k") {
    const auto cfg = small_config();
    const ParamStore p = init_scene_params(16, &small_pretrained(), cfg);
    const auto s = evaluate_epoch(p, cfg, split_view(small_world(), scenegen::Split::val));
    CHECK(s.reports.size() == 8);
    for (const auto& r : s.reports) {
        CHECK(r.recall.at(1) <= r.recall.at(3));
        CHECK(r.recall.at(3) <= r.recall.at(5));
    }
}
