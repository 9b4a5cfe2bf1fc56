#include "uniloc/train/trainer.hpp"

#include "uniloc/errors.hpp"
#include "uniloc/loss/contrastive.hpp"
#include "uniloc/numcore/optim.hpp"
#include "uniloc/numcore/rng.hpp"
#include "uniloc/retrieval/database.hpp"

#include <fstream>
#include <ostream>

namespace uniloc::train {

namespace {

using numcore::mix_seed;
using numcore::fnv1a64;

using InstanceRef = std::pair<const SceneTriplet*, std::size_t>;

nlohmann::ordered_json record_json(const EpochRecord& r) {
    nlohmann::ordered_json j;
    j["stage"] = stage_key(r.stage);
    j["epoch"] = r.epoch;
    j["lr"] = r.lr;
    j["loss"] = r.loss;
    nlohmann::ordered_json r1 = nlohmann::ordered_json::object();
    for (const auto& [task, v] : r.r1) r1[task] = v;
    j["r1"] = r1;
    return j;
}

EpochRecord record_from_json(const nlohmann::json& j) {
    EpochRecord r;
    r.stage = stage_from_key(j.at("stage").get<std::string>());
    r.epoch = j.at("epoch").get<std::size_t>();
    r.lr = j.at("lr").get<double>();
    r.loss = j.at("loss").get<double>();
    for (const auto& [task, v] : j.at("r1").items()) r.r1[task] = v.get<double>();
    return r;
}

void emit(std::ostream* log, const EpochRecord& r) {
    if (!log) return;
    *log << record_json(r).dump() << '\n';
    log->flush();
}

double run_batch(ParamStore& store, numcore::AdamState& adam, double lr, const std::function<Var(Graph&)>& build) {
    Graph g(store);
    const Var loss = build(g);
    const double value = g.value(loss)(0, 0);
    if (!std::isfinite(value)) raise(ErrorKind::training, "non-finite loss");
    g.backward(loss, store);
    adam_step(store, adam, lr);
    return value;
}

void train_instance_stage(ParamStore& store, Stage stage, const std::vector<InstanceRef>& items,
                          const TrainConfig& cfg, std::vector<EpochRecord>& history, std::ostream* log) {
    numcore::AdamState adam;
    const instance::EncoderOptions enc{cfg.useUv};
    const std::uint64_t stageSalt = fnv1a64(stage_key(stage));
    for (std::size_t epoch = 0; epoch < cfg.epochsInstance; ++epoch) {
        const double lr = numcore::lr_at_epoch(epoch, cfg.lrBase);
        numcore::Rng rng(mix_seed(mix_seed(cfg.seed, stageSalt), epoch));
        std::vector<InstanceRef> order = items;
        rng.shuffle(order);
        double sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t off = 0; off + 2 <= order.size(); off += cfg.batchInstance) {
            const std::size_t n = std::min(cfg.batchInstance, order.size() - off);
            std::vector<instance::ImageInstanceInput> img;
            std::vector<instance::TextInstanceInput> txt;
            std::vector<instance::PointInstanceInput> pts;
            for (std::size_t i = off; i < off + n; ++i) {
                const auto& [scene, idx] = order[i];
                const auto& rec = scene->instances[idx];
                img.push_back(instance::make_image_input(rec));
                if (stage == Stage::instanceIT) txt.push_back(instance::make_text_input(rec, enc));
                else pts.push_back(instance::make_point_input(rec, scene->location));
            }
            sum += run_batch(store, adam, lr, [&](Graph& g) {
                const Var i = instance::encode_image_batch(g, img, enc);
                const Var other = stage == Stage::instanceIT ? instance::encode_text_batch(g, txt, enc)
                                                             : instance::encode_point_batch(g, pts, enc);
                return loss::batch_contrastive(g, i, other, cfg.tau);
            });
            ++batches;
        }
        EpochRecord rec{stage, epoch + 1, lr, batches ? sum / static_cast<double>(batches) : 0.0, {}};
        history.push_back(rec);
        emit(log, rec);
    }
}

void check_dim(bool ok, const std::string& what) {
    if (!ok) raise(ErrorKind::config, "pretrained checkpoint incompatible: " + what);
}

} // namespace

std::string_view stage_key(Stage s) noexcept {
    switch (s) {
    case Stage::instanceIT: return "instanceIT";
    case Stage::instanceIP: return "instanceIP";
    case Stage::scene: return "scene";
    }
    return "scene";
}

Stage stage_from_key(std::string_view key) {
    for (Stage s : {Stage::instanceIT, Stage::instanceIP, Stage::scene})
        if (stage_key(s) == key) return s;
    raise(ErrorKind::parse, "unknown stage '" + std::string(key) + "'");
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path, const nlohmann::ordered_json* run) {
    ckpt.params.save(path);
    nlohmann::ordered_json j;
    j["format"] = 1;
    j["stage"] = stage_key(ckpt.stage);
    j["epoch"] = ckpt.epoch;
    j["config"] = to_json(ckpt.config);
    j["history"] = nlohmann::ordered_json::array();
    for (const auto& r : ckpt.history) j["history"].push_back(record_json(r));
    if (run) j["run"] = *run;
    std::ofstream out(path.string() + ".json");
    if (!out) raise(ErrorKind::io, "cannot write checkpoint sidecar for '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Checkpoint c;
    c.params = ParamStore::load(path);
    std::ifstream in(path.string() + ".json");
    if (!in) raise(ErrorKind::io, "missing checkpoint sidecar '" + path.string() + ".json'");
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.at("format").get<int>() != 1) raise(ErrorKind::parse, "unsupported checkpoint format");
        c.stage = stage_from_key(j.at("stage").get<std::string>());
        c.epoch = j.at("epoch").get<std::size_t>();
        c.config = train_config_from_json(j.at("config"));
        for (const auto& r : j.at("history")) c.history.push_back(record_from_json(r));
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::parse, "checkpoint sidecar '" + path.string() + ".json': " + e.what());
    }
    return c;
}

ModelOptions model_options(const TrainConfig& cfg) { return {sap_config(cfg), {cfg.useUv}}; }

std::vector<const SceneTriplet*> split_view(const std::vector<SceneTriplet>& scenes, scenegen::Split split) {
    std::vector<const SceneTriplet*> out;
    for (const auto& s : scenes)
        if (s.split == split) out.push_back(&s);
    return out;
}

std::size_t dataset_stub_dim(const std::vector<SceneTriplet>& dataset) {
    for (const auto& s : dataset)
        for (const auto& r : s.instances) return r.stubImageVec.size();
    return 0;
}

PretrainedPair pretrain_instance_models(const std::vector<SceneTriplet>& dataset, const TrainConfig& cfg,
                                        std::ostream* log) {
    validate(cfg);
    std::vector<InstanceRef> items;
    for (const SceneTriplet* s : split_view(dataset, scenegen::Split::train))
        for (std::size_t i = 0; i < s->instances.size(); ++i) items.emplace_back(s, i);
    if (items.empty()) raise(ErrorKind::data, "train split has no instances");
    const std::size_t stubDim = dataset_stub_dim(dataset);

    PretrainedPair out;
    const std::uint64_t itSeed = mix_seed(cfg.seed, fnv1a64("imageText"));
    const std::uint64_t ipSeed = mix_seed(cfg.seed, fnv1a64("imagePoint"));
    instance::init_text_branch(out.imageText.params, stubDim, cfg.D, itSeed);
    instance::init_image_branch(out.imageText.params, stubDim, cfg.D, itSeed);
    instance::init_image_branch(out.imagePoint.params, stubDim, cfg.D, ipSeed);
    instance::init_point_branch(out.imagePoint.params, cfg.D, ipSeed);

    for (auto [ckpt, stage] : {std::pair{&out.imageText, Stage::instanceIT}, std::pair{&out.imagePoint, Stage::instanceIP}}) {
        ckpt->config = cfg;
        ckpt->stage = stage;
        ckpt->epoch = cfg.epochsInstance;
        train_instance_stage(ckpt->params, stage, items, cfg, ckpt->history, log);
    }
    return out;
}

ParamStore init_scene_params(std::size_t stubDim, const PretrainedPair* pretrained, const TrainConfig& cfg) {
    validate(cfg);
    ParamStore store;
    if (pretrained) {
        const auto& it = pretrained->imageText.params;
        const auto& ip = pretrained->imagePoint.params;
        check_dim(instance::branch_dim(it, "text") == cfg.D, "text branch width differs from D");
        check_dim(instance::branch_dim(it, "image") == cfg.D, "image branch width differs from D");
        check_dim(instance::branch_dim(ip, "point") == cfg.D, "point branch width differs from D");
        check_dim(instance::text_stub_dim(it) == stubDim, "stub width differs from the dataset");
        store.copy_prefix_from(it, "text/");
        store.copy_prefix_from(it, "image/");
        store.copy_prefix_from(ip, "point/");
    } else {
        const std::uint64_t seed = mix_seed(cfg.seed, fnv1a64("sceneBranches"));
        instance::init_text_branch(store, stubDim, cfg.D, seed);
        instance::init_image_branch(store, stubDim, cfg.D, seed);
        instance::init_point_branch(store, cfg.D, seed);
    }
    const auto sap = sap_config(cfg);
    const std::uint64_t sapSeed = mix_seed(cfg.seed, fnv1a64("sap"));
    for (Modality m : scene::kAllModalities) scene::init_sap(store, m, cfg.D, sap, sapSeed);
    return store;
}

Checkpoint train_scene_model(const std::vector<SceneTriplet>& dataset, const PretrainedPair* pretrained,
                             const TrainConfig& cfg, std::ostream* log) {
    validate(cfg);
    if (cfg.pretrain && !pretrained)
        raise(ErrorKind::config, "scene training with pretrain=true needs pretrained checkpoints");
    const auto train = split_view(dataset, scenegen::Split::train);
    const auto val = split_view(dataset, scenegen::Split::val);
    if (train.size() < 2) raise(ErrorKind::data, "train split needs at least two scenes");

    Checkpoint out;
    out.config = cfg;
    out.stage = Stage::scene;
    out.params = init_scene_params(dataset_stub_dim(dataset), cfg.pretrain ? pretrained : nullptr, cfg);
    ParamStore& store = out.params;
    ParamStore best = store;
    double bestScore = -1.0;
    std::size_t bestEpoch = 0;

    const ModelOptions opts = model_options(cfg);
    numcore::AdamState adam;
    for (std::size_t epoch = 0; epoch < cfg.epochsScene; ++epoch) {
        const double lr = numcore::lr_at_epoch(epoch, cfg.lrBase);
        numcore::Rng rng(mix_seed(mix_seed(cfg.seed, fnv1a64("sceneOrder")), epoch));
        auto order = train;
        rng.shuffle(order);
        double sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t off = 0; off + 2 <= order.size(); off += cfg.batchScene) {
            const std::size_t n = std::min(cfg.batchScene, order.size() - off);
            const std::span<const SceneTriplet* const> batch(order.data() + off, n);
            const HintPolicy hints{cfg.hintsPerScene, mix_seed(mix_seed(cfg.seed, epoch), off)};
            sum += run_batch(store, adam, lr, [&](Graph& g) {
                const Var t = scene_batch_descriptors(g, batch, Modality::text, opts, hints);
                const Var i = scene_batch_descriptors(g, batch, Modality::image, opts, hints);
                const Var p = scene_batch_descriptors(g, batch, Modality::point, opts, hints);
                return loss::combined_scene_loss(g, loss::batch_contrastive(g, i, t, cfg.tau),
                                                 loss::batch_contrastive(g, i, p, cfg.tau), cfg.alpha);
            });
            ++batches;
        }
        EpochRecord rec{Stage::scene, epoch + 1, lr, batches ? sum / static_cast<double>(batches) : 0.0, {}};
        if (!val.empty()) {
            const auto summary = evaluate_epoch(store, cfg, val);
            for (const auto& r : summary.reports) rec.r1[r.task] = r.recall.at(1);
            if (summary.meanCrossModalR1 > bestScore) {
                bestScore = summary.meanCrossModalR1;
                best = store;
                bestEpoch = epoch + 1;
            }
        } else {
            best = store;
            bestEpoch = epoch + 1;
        }
        out.history.push_back(rec);
        emit(log, rec);
    }
    out.params = std::move(best);
    out.epoch = bestEpoch;
    return out;
}

EvalSummary evaluate_epoch(const ParamStore& params, const TrainConfig& cfg,
                           const std::vector<const SceneTriplet*>& scenes, std::size_t hintsPerScene) {
    if (scenes.empty()) raise(ErrorKind::evaluation, "no scenes to evaluate");
    const HintPolicy hints{hintsPerScene ? hintsPerScene : cfg.hintsPerScene, cfg.evalHintSeed};
    const auto dbs = retrieval::build_all(scenes, params, model_options(cfg), hints);
    EvalSummary s;
    s.reports = retrieval::run_task_matrix(dbs, cfg.evalDistance, {1, 3, 5});
    s.meanCrossModalR1 = retrieval::mean_cross_modal_r1(s.reports);
    return s;
}

} // namespace uniloc::train
