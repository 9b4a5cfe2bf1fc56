#pragma once

#include "uniloc/scene/sap.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>

namespace uniloc::train {

// Defaults are the desk-scale settings (D = 64, scene batch 32); paper_train_config() holds
// the published values.
struct TrainConfig {
    std::size_t D = 64;
    double lrBase = 5e-4;
    std::size_t epochsInstance = 20;
    std::size_t epochsScene = 20;
    std::size_t batchInstance = 256;
    std::size_t batchScene = 32;
    double tau = 0.1;
    double alpha = 0.3;
    std::size_t hintsPerScene = 6;
    std::uint64_t seed = 42;
    std::array<std::size_t, 3> sapDepth{1, 2, 2}; // text, image, point
    std::size_t heads = 4;
    std::size_t ffnHidden = 0; // 0 means 2 * D
    scene::PoolMode pool = scene::PoolMode::sap;
    bool useUv = true;
    bool pretrain = true;
    // Validation during scene training.
    std::uint64_t evalHintSeed = 0;
    double evalDistance = 20.0;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

TrainConfig paper_train_config();

// Throws ErrorKind::config.
void validate(const TrainConfig& cfg);

scene::SapConfig sap_config(const TrainConfig& cfg);

nlohmann::ordered_json to_json(const TrainConfig& cfg);
// Starts from `base` and overrides the keys present; unknown keys are config errors.
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base = {});

} // namespace uniloc::train
