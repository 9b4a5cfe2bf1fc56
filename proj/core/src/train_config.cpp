#include "uniloc/train/config.hpp"

#include "uniloc/errors.hpp"

#include <string>

namespace uniloc::train {

namespace {

template <typename T>
T read(const nlohmann::json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const nlohmann::json::exception&) {
        raise(ErrorKind::config, "bad value for train key '" + key + "': " + v.dump());
    }
}

std::size_t read_count(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_unsigned()) raise(ErrorKind::config, "train key '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

} // namespace

TrainConfig paper_train_config() {
    TrainConfig c;
    c.batchScene = 64;
    return c;
}

void validate(const TrainConfig& c) {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) raise(ErrorKind::config, msg);
    };
    need(c.D > 0, "D must be positive");
    need(c.lrBase > 0.0, "lrBase must be positive");
    need(c.batchInstance >= 2, "batchInstance must be at least 2");
    need(c.batchScene >= 2, "batchScene must be at least 2");
    need(c.tau > 0.0, "tau must be positive");
    need(c.alpha >= 0.0 && c.alpha <= 1.0, "alpha must be in [0,1]");
    need(c.hintsPerScene > 0, "hintsPerScene must be positive");
    need(c.heads > 0 && c.D % c.heads == 0, "D must be divisible by heads");
    need(c.evalDistance >= 0.0, "evalDistance must be non-negative");
}

scene::SapConfig sap_config(const TrainConfig& cfg) {
    scene::SapConfig s;
    s.heads = cfg.heads;
    s.depth = cfg.sapDepth;
    s.ffnHidden = cfg.ffnHidden;
    s.pool = cfg.pool;
    return s;
}

nlohmann::ordered_json to_json(const TrainConfig& c) {
    nlohmann::ordered_json j;
    j["D"] = c.D;
    j["lrBase"] = c.lrBase;
    j["epochsInstance"] = c.epochsInstance;
    j["epochsScene"] = c.epochsScene;
    j["batchInstance"] = c.batchInstance;
    j["batchScene"] = c.batchScene;
    j["tau"] = c.tau;
    j["alpha"] = c.alpha;
    j["hintsPerScene"] = c.hintsPerScene;
    j["seed"] = c.seed;
    j["sapDepth"] = {{"text", c.sapDepth[0]}, {"image", c.sapDepth[1]}, {"point", c.sapDepth[2]}};
    j["heads"] = c.heads;
    j["ffnHidden"] = c.ffnHidden;
    j["pool"] = c.pool == scene::PoolMode::sap ? "sap" : "max";
    j["useUv"] = c.useUv;
    j["pretrain"] = c.pretrain;
    j["evalHintSeed"] = c.evalHintSeed;
    j["evalDistance"] = c.evalDistance;
    return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base) {
    if (!j.is_object()) raise(ErrorKind::config, "train config must be an object");
    TrainConfig c = base;
    for (const auto& [key, v] : j.items()) {
        if (key == "D") c.D = read_count(v, key);
        else if (key == "lrBase") c.lrBase = read<double>(v, key);
        else if (key == "epochsInstance") c.epochsInstance = read_count(v, key);
        else if (key == "epochsScene") c.epochsScene = read_count(v, key);
        else if (key == "batchInstance") c.batchInstance = read_count(v, key);
        else if (key == "batchScene") c.batchScene = read_count(v, key);
        else if (key == "tau") c.tau = read<double>(v, key);
        else if (key == "alpha") c.alpha = read<double>(v, key);
        else if (key == "hintsPerScene") c.hintsPerScene = read_count(v, key);
        else if (key == "seed") c.seed = read<std::uint64_t>(v, key);
        else if (key == "heads") c.heads = read_count(v, key);
        else if (key == "ffnHidden") c.ffnHidden = read_count(v, key);
        else if (key == "useUv") c.useUv = read<bool>(v, key);
        else if (key == "pretrain") c.pretrain = read<bool>(v, key);
        else if (key == "evalHintSeed") c.evalHintSeed = read<std::uint64_t>(v, key);
        else if (key == "evalDistance") c.evalDistance = read<double>(v, key);
        else if (key == "pool") {
            const auto p = read<std::string>(v, key);
            if (p == "sap") c.pool = scene::PoolMode::sap;
            else if (p == "max") c.pool = scene::PoolMode::max;
            else raise(ErrorKind::config, "pool must be 'sap' or 'max', got '" + p + "'");
        } else if (key == "sapDepth") {
            if (!v.is_object()) raise(ErrorKind::config, "sapDepth must be an object");
            for (const auto& [m, d] : v.items()) {
                if (m == "text") c.sapDepth[0] = read_count(d, "sapDepth.text");
                else if (m == "image") c.sapDepth[1] = read_count(d, "sapDepth.image");
                else if (m == "point") c.sapDepth[2] = read_count(d, "sapDepth.point");
                else raise(ErrorKind::config, "unknown key 'sapDepth." + m + "'");
            }
        } else {
            raise(ErrorKind::config, "unknown key 'train." + key + "'");
        }
    }
    validate(c);
    return c;
}

} // namespace uniloc::train
