#include "uniloc/cli/app.hpp"

#include "uniloc/cli/run_config.hpp"
#include "uniloc/errors.hpp"
#include "uniloc/instance/encoders.hpp"
#include "uniloc/retrieval/database.hpp"
#include "uniloc/scenegen/dataset_io.hpp"
#include "uniloc/scenegen/world.hpp"
#include "uniloc/train/gradcheck_suite.hpp"
#include "uniloc/train/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

namespace uniloc::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using scenegen::SceneTriplet;
using scene::Modality;

namespace {

// A failure already mapped to its exit code.
struct CommandError {
    int code;
    std::string message;
};

// Runs f; library errors become the phase's exit code, except config errors which are always 2.
template <typename F>
auto in_phase(int code, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw CommandError{e.kind() == ErrorKind::config ? int{exitConfig} : code, e.what()};
    } catch (const nlohmann::json::exception& e) {
        throw CommandError{code, e.what()};
    } catch (const fs::filesystem_error& e) {
        throw CommandError{code, e.what()};
    }
}

struct Options {
    std::string configPath;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> dataset, checkpoints, reports, out, checkpoint, split, stage, pool;
    std::optional<std::size_t> scenes, dim, epochsInstance, epochsScene;
    std::optional<double> alpha;
    std::optional<std::uint64_t> hintSeed;
    std::vector<double> distances, alphas;
    std::vector<std::size_t> ks, hints;
    bool noPretrain = false;
    bool noUv = false;
};

RunConfig resolve(const Options& o) {
    return in_phase(exitConfig, [&] {
        RunConfig cfg = o.configPath.empty() ? RunConfig{} : load_run_config(o.configPath);
        if (o.seed) {
            cfg.world.seed = *o.seed;
            cfg.train.seed = *o.seed;
        }
        if (o.dataset) cfg.paths.dataset = *o.dataset;
        if (o.checkpoints) cfg.paths.checkpoints = *o.checkpoints;
        if (o.reports) cfg.paths.reports = *o.reports;
        if (o.scenes) cfg.world.numScenes = *o.scenes;
        if (o.dim) cfg.train.D = *o.dim;
        if (o.epochsInstance) cfg.train.epochsInstance = *o.epochsInstance;
        if (o.epochsScene) cfg.train.epochsScene = *o.epochsScene;
        if (o.alpha) cfg.train.alpha = *o.alpha;
        if (o.noPretrain) cfg.train.pretrain = false;
        if (o.noUv) cfg.train.useUv = false;
        if (o.pool) {
            if (*o.pool == "sap") cfg.train.pool = scene::PoolMode::sap;
            else if (*o.pool == "max") cfg.train.pool = scene::PoolMode::max;
            else raise(ErrorKind::config, "--pool must be sap or max");
        }
        if (o.split) cfg.eval.split = *o.split;
        if (o.hintSeed) cfg.eval.hintSeed = *o.hintSeed;
        if (!o.distances.empty()) cfg.eval.distances = o.distances;
        if (!o.ks.empty()) cfg.eval.ks = o.ks;
        if (!o.hints.empty()) cfg.eval.hints = o.hints;
        if (!o.alphas.empty()) cfg.eval.alphas = o.alphas;
        validate(cfg);
        return cfg;
    });
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_json(const fs::path& p, const ordered_json& j) {
    ensure_parent(p);
    std::ofstream f(p);
    if (!f) raise(ErrorKind::io, "cannot write '" + p.string() + "'");
    f << j.dump(2) << '\n';
}

std::vector<SceneTriplet> load_dataset(const RunConfig& cfg) {
    return in_phase(exitData, [&] {
        if (!fs::exists(cfg.paths.dataset))
            raise(ErrorKind::data, "dataset '" + cfg.paths.dataset + "' does not exist (run `uniloc generate` first)");
        auto data = scenegen::read_dataset(fs::path(cfg.paths.dataset));
        if (data.empty()) raise(ErrorKind::data, "dataset '" + cfg.paths.dataset + "' is empty");
        return data;
    });
}

scenegen::Split split_of(const RunConfig& cfg) { return scenegen::split_from_key(cfg.eval.split); }

fs::path ckpt_path(const RunConfig& cfg, std::string_view name) { return fs::path(cfg.paths.checkpoints) / name; }

std::string fixed(double v, int digits = 3) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

// JSONL log whose first record echoes the run config.
std::ofstream open_log(const fs::path& p, const ordered_json& run) {
    ensure_parent(p);
    std::ofstream f(p);
    if (!f) raise(ErrorKind::io, "cannot write '" + p.string() + "'");
    f << ordered_json{{"config", run}}.dump() << '\n';
    return f;
}

// --- generate ---------------------------------------------------------------------------

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
    const auto data = in_phase(exitData, [&] { return scenegen::generate_world(cfg.world); });
    std::array<std::size_t, 3> counts{};
    for (const auto& s : data) ++counts[static_cast<std::size_t>(s.split)];
    const ordered_json run = to_json(cfg);
    in_phase(exitData, [&] {
        const fs::path p(cfg.paths.dataset);
        ensure_parent(p);
        scenegen::write_dataset(data, p);
        ordered_json meta;
        meta["config"] = run;
        meta["scenes"] = data.size();
        meta["counts"] = {{"train", counts[0]}, {"val", counts[1]}, {"test", counts[2]}};
        write_json(p.string() + ".meta.json", meta);
    });
    out << "wrote " << data.size() << " scenes to " << cfg.paths.dataset << " (train " << counts[0] << ", val "
        << counts[1] << ", test " << counts[2] << ")\n";
    return exitOk;
}

// --- train ------------------------------------------------------------------------------

train::PretrainedPair load_pretrained(const RunConfig& cfg) {
    train::PretrainedPair pair;
    pair.imageText = train::load_checkpoint(ckpt_path(cfg, "imageText.ulc"));
    pair.imagePoint = train::load_checkpoint(ckpt_path(cfg, "imagePoint.ulc"));
    return pair;
}

train::PretrainedPair run_pretrain(const RunConfig& cfg, const std::vector<SceneTriplet>& data, std::ostream& out) {
    const ordered_json run = to_json(cfg);
    return in_phase(exitTraining, [&] {
        auto log = open_log(fs::path(cfg.paths.checkpoints) / "pretrain.jsonl", run);
        auto pair = train::pretrain_instance_models(data, cfg.train, &log);
        train::save_checkpoint(pair.imageText, ckpt_path(cfg, "imageText.ulc"), &run);
        train::save_checkpoint(pair.imagePoint, ckpt_path(cfg, "imagePoint.ulc"), &run);
        out << "instance stage: " << pair.imageText.history.size() << " epochs, final loss image-text "
            << fixed(pair.imageText.history.empty() ? 0.0 : pair.imageText.history.back().loss, 4)
            << ", image-point "
            << fixed(pair.imagePoint.history.empty() ? 0.0 : pair.imagePoint.history.back().loss, 4) << "\n";
        return pair;
    });
}

int cmd_train(const RunConfig& cfg, const std::string& stage, const std::optional<std::string>& outPath,
              std::ostream& out) {
    if (stage != "instance" && stage != "scene" && stage != "both")
        throw CommandError{exitConfig, "--stage must be instance, scene or both"};
    const auto data = load_dataset(cfg);
    std::optional<train::PretrainedPair> pair;
    if (stage == "instance" || (stage == "both" && cfg.train.pretrain)) pair = run_pretrain(cfg, data, out);
    if (stage == "instance") return exitOk;

    const ordered_json run = to_json(cfg);
    in_phase(exitTraining, [&] {
        if (cfg.train.pretrain && !pair) pair = load_pretrained(cfg);
        const fs::path dest = outPath ? fs::path(*outPath) : ckpt_path(cfg, "scene.ulc");
        auto log = open_log(fs::path(dest).replace_extension(".jsonl"), run);
        const auto ck = train::train_scene_model(data, cfg.train.pretrain ? &*pair : nullptr, cfg.train, &log);
        ensure_parent(dest);
        train::save_checkpoint(ck, dest, &run);
        double best = 0.0;
        for (const auto& r : ck.history)
            if (r.epoch == ck.epoch)
                for (const auto& t : retrieval::default_tasks())
                    if (t.cross_modal() && r.r1.count(t.name())) best += r.r1.at(t.name()) / 6.0;
        out << "scene stage: kept epoch " << ck.epoch << " of " << ck.history.size()
            << " (validation mean cross-modal R@1 " << fixed(best) << "), wrote " << dest.string() << "\n";
    });
    return exitOk;
}

// --- eval -------------------------------------------------------------------------------

train::Checkpoint load_for_eval(const fs::path& p, const std::vector<SceneTriplet>& data) {
    return in_phase(exitEvaluation, [&] {
        auto ck = train::load_checkpoint(p);
        for (const char* branch : {"text", "image", "point"})
            if (ck.params.paths(std::string(branch) + "/").empty() ||
                ck.params.paths("sap/" + std::string(branch) + "/").empty())
                raise(ErrorKind::evaluation, "checkpoint '" + p.string() + "' is not a scene-stage model");
        const std::size_t stub = train::dataset_stub_dim(data);
        if (instance::text_stub_dim(ck.params) != stub)
            raise(ErrorKind::evaluation, "checkpoint expects stub width " +
                                             std::to_string(instance::text_stub_dim(ck.params)) +
                                             " but the dataset has " + std::to_string(stub));
        return ck;
    });
}

struct HintRun {
    std::size_t hints;
    retrieval::DbSet dbs;
};

// Image and point databases are shared; the text database depends on the hint count.
std::vector<HintRun> build_databases(const std::vector<const SceneTriplet*>& scenes, const train::Checkpoint& ck,
                                     const RunConfig& cfg) {
    const auto opts = train::model_options(ck.config);
    retrieval::DbSet base;
    for (Modality m : {Modality::image, Modality::point})
        base[m] = retrieval::build_db(scenes, m, ck.params, opts, {cfg.eval.hints.front(), cfg.eval.hintSeed});
    std::vector<HintRun> runs;
    for (std::size_t h : cfg.eval.hints) {
        HintRun r{h, base};
        r.dbs[Modality::text] = retrieval::build_db(scenes, Modality::text, ck.params, opts, {h, cfg.eval.hintSeed});
        runs.push_back(std::move(r));
    }
    return runs;
}

int cmd_eval(const RunConfig& cfg, const std::optional<std::string>& checkpoint,
             const std::optional<std::string>& outPath, std::ostream& out) {
    const auto data = load_dataset(cfg);
    const fs::path ckp = checkpoint ? fs::path(*checkpoint) : ckpt_path(cfg, "scene.ulc");
    const auto ck = load_for_eval(ckp, data);
    const auto scenes = train::split_view(data, split_of(cfg));
    if (scenes.empty()) throw CommandError{exitData, "split '" + cfg.eval.split + "' is empty"};

    ordered_json report;
    report["config"] = to_json(cfg);
    report["checkpoint"] = ckp.string();
    report["checkpointConfig"] = train::to_json(ck.config);
    report["split"] = cfg.eval.split;
    report["results"] = ordered_json::array();
    in_phase(exitEvaluation, [&] {
        for (const auto& hr : build_databases(scenes, ck, cfg)) {
            for (double d : cfg.eval.distances) {
                const auto reports = retrieval::run_task_matrix(hr.dbs, d, cfg.eval.ks);
                ordered_json r;
                r["hints"] = hr.hints;
                r["d"] = d;
                r["meanCrossModalR1"] = retrieval::mean_cross_modal_r1(reports);
                r["reports"] = ordered_json::array();
                out << "hints " << hr.hints << ", d " << d << " m:";
                for (const auto& rep : reports) {
                    r["reports"].push_back(ordered_json::parse(retrieval::report_to_json(rep)));
                    out << "  " << rep.task;
                    for (const auto& [k, v] : rep.recall) out << " R@" << k << "=" << fixed(v);
                }
                out << "\n";
                report["results"].push_back(r);
            }
        }
        const fs::path dest = outPath ? fs::path(*outPath) : fs::path(cfg.paths.reports) / "eval.json";
        write_json(dest, report);
        out << "wrote " << dest.string() << "\n";
    });
    return exitOk;
}

// --- gradcheck --------------------------------------------------------------------------

int cmd_gradcheck(const RunConfig& cfg, std::uint64_t seed, const std::optional<std::string>& outPath,
                  std::ostream& out) {
    constexpr double kTolerance = 1e-4;
    const auto blocks = in_phase(exitTraining, [&] { return train::run_gradcheck_suite(seed); });
    ordered_json j;
    j["config"] = to_json(cfg);
    j["seed"] = seed;
    j["tolerance"] = kTolerance;
    j["blocks"] = ordered_json::array();
    bool ok = true;
    for (const auto& b : blocks) {
        ok = ok && b.worst < kTolerance;
        j["blocks"].push_back({{"block", b.block},
                               {"worstRelativeError", b.worst},
                               {"worstPath", b.worstPath},
                               {"parameters", b.parameters},
                               {"seconds", b.seconds}});
        out << std::left << std::setw(16) << b.block << " " << std::scientific << std::setprecision(2) << b.worst
            << std::defaultfloat << "  " << (b.worst < kTolerance ? "ok" : "FAILED") << "  (" << b.worstPath
            << ")\n";
    }
    j["passed"] = ok;
    in_phase(exitTraining, [&] {
        write_json(outPath ? fs::path(*outPath) : fs::path(cfg.paths.reports) / "gradcheck.json", j);
    });
    if (!ok) throw CommandError{exitTraining, "gradient check exceeded tolerance"};
    return exitOk;
}

// --- embed-dump -------------------------------------------------------------------------

int cmd_embed_dump(const RunConfig& cfg, const std::optional<std::string>& checkpoint,
                   const std::optional<std::string>& outPath, std::ostream& out) {
    const auto data = load_dataset(cfg);
    const fs::path ckp = checkpoint ? fs::path(*checkpoint) : ckpt_path(cfg, "scene.ulc");
    const auto ck = load_for_eval(ckp, data);
    const auto scenes = train::split_view(data, split_of(cfg));
    if (scenes.empty()) throw CommandError{exitData, "split '" + cfg.eval.split + "' is empty"};
    in_phase(exitEvaluation, [&] {
        const auto dbs = retrieval::build_all(scenes, ck.params, train::model_options(ck.config),
                                              {cfg.eval.hints.front(), cfg.eval.hintSeed});
        const fs::path dest = outPath ? fs::path(*outPath) : fs::path(cfg.paths.reports) / "embeddings.csv";
        ensure_parent(dest);
        std::ofstream f(dest);
        if (!f) raise(ErrorKind::io, "cannot write '" + dest.string() + "'");
        retrieval::write_embedding_csv(dbs, f);
        ordered_json meta;
        meta["config"] = to_json(cfg);
        meta["checkpoint"] = ckp.string();
        meta["split"] = cfg.eval.split;
        meta["hints"] = cfg.eval.hints.front();
        meta["rows"] = 3 * scenes.size();
        write_json(dest.string() + ".json", meta);
        out << "wrote " << dest.string() << "\n";
    });
    return exitOk;
}

// --- ablate -----------------------------------------------------------------------------

int cmd_ablate(const RunConfig& cfg, const std::optional<std::string>& outPath, std::ostream& out) {
    if (cfg.eval.alphas.empty()) throw CommandError{exitConfig, "no alpha values to sweep"};
    const auto data = load_dataset(cfg);
    std::optional<train::PretrainedPair> pair;
    if (cfg.train.pretrain) {
        const bool have = fs::exists(ckpt_path(cfg, "imageText.ulc")) && fs::exists(ckpt_path(cfg, "imagePoint.ulc"));
        pair = have ? in_phase(exitTraining, [&] { return load_pretrained(cfg); }) : run_pretrain(cfg, data, out);
    }
    const auto scenes = train::split_view(data, split_of(cfg));
    if (scenes.empty()) throw CommandError{exitData, "split '" + cfg.eval.split + "' is empty"};

    ordered_json table;
    table["config"] = to_json(cfg);
    table["split"] = cfg.eval.split;
    table["d"] = cfg.eval.distances.front();
    table["hints"] = cfg.eval.hints.front();
    table["rows"] = ordered_json::array();
    out << "alpha";
    for (const auto& t : retrieval::default_tasks()) out << "  " << std::setw(5) << t.name();
    out << "   mean\n";
    for (double a : cfg.eval.alphas) {
        train::TrainConfig tc = cfg.train;
        tc.alpha = a;
        const auto ck = in_phase(exitTraining, [&] {
            return train::train_scene_model(data, tc.pretrain ? &*pair : nullptr, tc);
        });
        in_phase(exitEvaluation, [&] {
            const auto dbs = retrieval::build_all(scenes, ck.params, train::model_options(tc),
                                                  {cfg.eval.hints.front(), cfg.eval.hintSeed});
            const auto reports = retrieval::run_task_matrix(dbs, cfg.eval.distances.front(), cfg.eval.ks);
            ordered_json row;
            row["alpha"] = a;
            row["epoch"] = ck.epoch;
            row["r1"] = ordered_json::object();
            out << fixed(a, 1) << "  ";
            for (const auto& r : reports) {
                row["r1"][r.task] = r.recall.at(cfg.eval.ks.front());
                out << "  " << fixed(r.recall.at(cfg.eval.ks.front()));
            }
            row["meanCrossModalR1"] = retrieval::mean_cross_modal_r1(reports);
            out << "  " << fixed(row["meanCrossModalR1"].get<double>()) << "\n";
            table["rows"].push_back(row);
        });
    }
    const fs::path dest = outPath ? fs::path(*outPath) : fs::path(cfg.paths.reports) / "ablate_alpha.json";
    in_phase(exitEvaluation, [&] { write_json(dest, table); });
    out << "wrote " << dest.string() << "\n";
    return exitOk;
}

} // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"UniLoc synthetic-scene localization experiments", "uniloc"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("-c,--config", o.configPath, "JSON run config (flags override file values)");
    app.add_option("--seed", o.seed, "seed for generation and training");
    app.add_option("--dataset", o.dataset, "dataset JSONL path");
    app.add_option("--checkpoints", o.checkpoints, "checkpoint directory");
    app.add_option("--reports", o.reports, "report directory");

    auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
    gen->add_option("--scenes", o.scenes, "number of scenes");
    gen->add_option("--out", o.out, "dataset path (overrides paths.dataset)");

    auto* pre = app.add_subcommand("pretrain", "instance-level pretraining (same as train --stage instance)");

    auto* tr = app.add_subcommand("train", "train instance and/or scene models");
    std::string stage = "both";
    tr->add_option("--stage", stage, "instance, scene or both")->check(CLI::IsMember({"instance", "scene", "both"}));
    tr->add_flag("--no-pretrain", o.noPretrain, "train the scene model from fresh branches");
    tr->add_option("--pool", o.pool, "scene pooling: sap or max")->check(CLI::IsMember({"sap", "max"}));
    tr->add_flag("--no-uv", o.noUv, "drop UV embeddings and position phrases");
    tr->add_option("--alpha", o.alpha, "weight of the image-text term");
    tr->add_option("--out", o.out, "scene checkpoint path");

    auto* abl = app.add_subcommand("ablate", "alpha sweep of the scene loss");
    abl->add_option("--alphas", o.alphas, "alpha values")->delimiter(',');
    abl->add_option("--split", o.split, "train, val or test");
    abl->add_option("--out", o.out, "output path");
    abl->add_flag("--no-pretrain", o.noPretrain, "train the scene models from fresh branches");

    for (auto* sub : {pre, tr, abl}) {
        sub->add_option("--dim", o.dim, "embedding width D");
        sub->add_option("--epochs-instance", o.epochsInstance, "instance-stage epochs");
        sub->add_option("--epochs-scene", o.epochsScene, "scene-stage epochs");
    }

    auto* ev = app.add_subcommand("eval", "evaluate a scene checkpoint");
    auto* dump = app.add_subcommand("embed-dump", "write scene descriptors as CSV");
    for (auto* sub : {ev, dump}) {
        sub->add_option("--checkpoint", o.checkpoint, "scene checkpoint (default <checkpoints>/scene.ulc)");
        sub->add_option("--split", o.split, "train, val or test");
        sub->add_option("--hint-seed", o.hintSeed, "seed for hint sampling");
        sub->add_option("--out", o.out, "output path");
    }
    ev->add_option("--d", o.distances, "distance thresholds in meters")->delimiter(',');
    ev->add_option("--ks", o.ks, "recall cut-offs")->delimiter(',');
    ev->add_option("--hints", o.hints, "hint counts per scene")->delimiter(',');
    dump->add_option("--hints", o.hints, "hint count per scene")->delimiter(',');

    auto* gc = app.add_subcommand("gradcheck", "finite-difference checks for every trainable block");
    std::uint64_t gcSeed = 1;
    gc->add_option("--check-seed", gcSeed, "seed for the checked blocks");
    gc->add_option("--out", o.out, "output path");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exitOk : int{exitConfig};
    }

    try {
        const RunConfig cfg = resolve(o);
        if (gen->parsed()) {
            RunConfig c = cfg;
            if (o.out) c.paths.dataset = *o.out;
            return cmd_generate(c, out);
        }
        if (pre->parsed()) return cmd_train(cfg, "instance", std::nullopt, out);
        if (tr->parsed()) return cmd_train(cfg, stage, o.out, out);
        if (ev->parsed()) return cmd_eval(cfg, o.checkpoint, o.out, out);
        if (dump->parsed()) return cmd_embed_dump(cfg, o.checkpoint, o.out, out);
        if (gc->parsed()) return cmd_gradcheck(cfg, gcSeed, o.out, out);
        if (abl->parsed()) return cmd_ablate(cfg, o.out, out);
    } catch (const CommandError& e) {
        err << "uniloc: " << e.message << "\n";
        return e.code;
    }
    return exitOk;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args), out, err);
}

} // namespace uniloc::cli
