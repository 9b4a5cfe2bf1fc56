#pragma once

#include "uniloc/scenegen/types.hpp"
#include "uniloc/train/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace uniloc::cli {

inline constexpr int kRunConfigVersion = 1;

struct EvalSettings {
    std::vector<double> distances{20.0};
    std::vector<std::size_t> ks{1, 3, 5};
    std::vector<std::size_t> hints{6};
    std::uint64_t hintSeed = 0;
    std::string split = "test";
    std::vector<double> alphas{0.1, 0.3, 0.5, 0.7, 0.9};

    friend bool operator==(const EvalSettings&, const EvalSettings&) = default;
};

struct Paths {
    std::string dataset = "uniloc_run/dataset.jsonl";
    std::string checkpoints = "uniloc_run/checkpoints";
    std::string reports = "uniloc_run/reports";

    friend bool operator==(const Paths&, const Paths&) = default;
};

// Everything one command needs. JSON layout:
// {"version":1,"world":{...},"train":{...},"eval":{...},"paths":{...}}
// Sections and keys are optional; missing ones keep their defaults. Unknown keys are rejected.
struct RunConfig {
    scenegen::WorldConfig world;
    train::TrainConfig train;
    EvalSettings eval;
    Paths paths;
};

nlohmann::ordered_json to_json(const scenegen::WorldConfig& w);
scenegen::WorldConfig world_config_from_json(const nlohmann::json& j, const scenegen::WorldConfig& base = {});

nlohmann::ordered_json to_json(const RunConfig& cfg);
// Throws ErrorKind::config naming the offending key.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Cross-section checks (paths non-empty, ks/hints/distances positive, ...). Throws ErrorKind::config.
void validate(const RunConfig& cfg);

} // namespace uniloc::cli
