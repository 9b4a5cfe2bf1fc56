#include "uniloc/cli/run_config.hpp"

#include "uniloc/errors.hpp"
#include "uniloc/scenegen/world.hpp"

#include <fstream>

namespace uniloc::cli {

namespace {

template <typename T>
T read(const nlohmann::json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        raise(ErrorKind::config, "bad value for key '" + key + "': " + v.dump());
    }
}

std::size_t read_count(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_unsigned()) raise(ErrorKind::config, "key '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

double read_number(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number()) raise(ErrorKind::config, "key '" + key + "' must be a number");
    return v.get<double>();
}

template <typename T, typename F>
std::vector<T> read_list(const nlohmann::json& v, const std::string& key, F item) {
    if (!v.is_array()) raise(ErrorKind::config, "key '" + key + "' must be an array");
    std::vector<T> out;
    for (const auto& x : v) out.push_back(item(x, key));
    return out;
}

void require_object(const nlohmann::json& j, const std::string& what) {
    if (!j.is_object()) raise(ErrorKind::config, what + " must be a JSON object");
}

EvalSettings eval_from_json(const nlohmann::json& j) {
    require_object(j, "eval");
    EvalSettings e;
    for (const auto& [key, v] : j.items()) {
        const std::string k = "eval." + key;
        if (key == "distances") e.distances = read_list<double>(v, k, read_number);
        else if (key == "ks") e.ks = read_list<std::size_t>(v, k, read_count);
        else if (key == "hints") e.hints = read_list<std::size_t>(v, k, read_count);
        else if (key == "hintSeed") e.hintSeed = read<std::uint64_t>(v, k);
        else if (key == "split") e.split = read<std::string>(v, k);
        else if (key == "alphas") e.alphas = read_list<double>(v, k, read_number);
        else raise(ErrorKind::config, "unknown key '" + k + "'");
    }
    return e;
}

Paths paths_from_json(const nlohmann::json& j) {
    require_object(j, "paths");
    Paths p;
    for (const auto& [key, v] : j.items()) {
        const std::string k = "paths." + key;
        if (key == "dataset") p.dataset = read<std::string>(v, k);
        else if (key == "checkpoints") p.checkpoints = read<std::string>(v, k);
        else if (key == "reports") p.reports = read<std::string>(v, k);
        else raise(ErrorKind::config, "unknown key '" + k + "'");
    }
    return p;
}

} // namespace

nlohmann::ordered_json to_json(const scenegen::WorldConfig& w) {
    nlohmann::ordered_json j;
    j["numScenes"] = w.numScenes;
    j["areaExtent"] = w.areaExtent;
    j["minInstances"] = w.minInstances;
    j["maxInstances"] = w.maxInstances;
    j["submapRadius"] = w.submapRadius;
    j["seed"] = w.seed;
    j["splitFractions"] = w.splitFractions;
    j["minSeparation"] = w.minSeparation;
    j["sceneSpacing"] = w.sceneSpacing;
    j["minVisiblePoints"] = w.minVisiblePoints;
    j["stubDim"] = w.stubDim;
    j["objectDensity"] = w.objectDensity;
    return j;
}

scenegen::WorldConfig world_config_from_json(const nlohmann::json& j, const scenegen::WorldConfig& base) {
    require_object(j, "world");
    scenegen::WorldConfig w = base;
    for (const auto& [key, v] : j.items()) {
        const std::string k = "world." + key;
        if (key == "numScenes") w.numScenes = read_count(v, k);
        else if (key == "areaExtent") w.areaExtent = read_number(v, k);
        else if (key == "minInstances") w.minInstances = read_count(v, k);
        else if (key == "maxInstances") w.maxInstances = read_count(v, k);
        else if (key == "submapRadius") w.submapRadius = read_number(v, k);
        else if (key == "seed") w.seed = read<std::uint64_t>(v, k);
        else if (key == "minSeparation") w.minSeparation = read_number(v, k);
        else if (key == "sceneSpacing") w.sceneSpacing = read_number(v, k);
        else if (key == "minVisiblePoints") w.minVisiblePoints = read_count(v, k);
        else if (key == "stubDim") w.stubDim = read_count(v, k);
        else if (key == "objectDensity") w.objectDensity = read_number(v, k);
        else if (key == "splitFractions") {
            const auto f = read_list<double>(v, k, read_number);
            if (f.size() != 3) raise(ErrorKind::config, "key '" + k + "' needs three fractions");
            w.splitFractions = {f[0], f[1], f[2]};
        } else {
            raise(ErrorKind::config, "unknown key '" + k + "'");
        }
    }
    scenegen::validate(w);
    return w;
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["version"] = kRunConfigVersion;
    j["world"] = to_json(cfg.world);
    j["train"] = train::to_json(cfg.train);
    nlohmann::ordered_json e;
    e["distances"] = cfg.eval.distances;
    e["ks"] = cfg.eval.ks;
    e["hints"] = cfg.eval.hints;
    e["hintSeed"] = cfg.eval.hintSeed;
    e["split"] = cfg.eval.split;
    e["alphas"] = cfg.eval.alphas;
    j["eval"] = e;
    j["paths"] = {{"dataset", cfg.paths.dataset}, {"checkpoints", cfg.paths.checkpoints},
                  {"reports", cfg.paths.reports}};
    return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    require_object(j, "run config");
    if (!j.contains("version")) raise(ErrorKind::config, "missing key 'version'");
    if (!j.at("version").is_number_integer() || j.at("version").get<int>() != kRunConfigVersion)
        raise(ErrorKind::config, "unsupported config version " + j.at("version").dump() + " (expected " +
                                     std::to_string(kRunConfigVersion) + ")");
    RunConfig cfg;
    for (const auto& [key, v] : j.items()) {
        if (key == "version") continue;
        if (key == "world") cfg.world = world_config_from_json(v);
        else if (key == "train") cfg.train = train::train_config_from_json(v);
        else if (key == "eval") cfg.eval = eval_from_json(v);
        else if (key == "paths") cfg.paths = paths_from_json(v);
        else raise(ErrorKind::config, "unknown key '" + key + "'");
    }
    validate(cfg);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::config, "cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::config, "config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

void validate(const RunConfig& cfg) {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) raise(ErrorKind::config, msg);
    };
    scenegen::validate(cfg.world);
    train::validate(cfg.train);
    need(!cfg.paths.dataset.empty(), "paths.dataset must not be empty");
    need(!cfg.paths.checkpoints.empty(), "paths.checkpoints must not be empty");
    need(!cfg.paths.reports.empty(), "paths.reports must not be empty");
    need(!cfg.eval.ks.empty(), "eval.ks must not be empty");
    for (auto k : cfg.eval.ks) need(k > 0, "eval.ks entries must be positive");
    need(!cfg.eval.hints.empty(), "eval.hints must not be empty");
    for (auto h : cfg.eval.hints) need(h > 0, "eval.hints entries must be positive");
    need(!cfg.eval.distances.empty(), "eval.distances must not be empty");
    for (double d : cfg.eval.distances) need(d > 0.0, "eval.distances entries must be positive");
    for (double a : cfg.eval.alphas) need(a >= 0.0 && a <= 1.0, "eval.alphas entries must lie in [0, 1]");
    need(cfg.eval.split == "train" || cfg.eval.split == "val" || cfg.eval.split == "test",
         "eval.split must be train, val or test");
}

} // namespace uniloc::cli
