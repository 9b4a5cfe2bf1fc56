#pragma once

#include "uniloc/retrieval/search.hpp"
#include "uniloc/train/config.hpp"
#include "uniloc/train/model.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace uniloc::train {

enum class Stage : std::uint8_t { instanceIT, instanceIP, scene };
std::string_view stage_key(Stage s) noexcept;
Stage stage_from_key(std::string_view key);

struct EpochRecord {
    Stage stage = Stage::scene;
    std::size_t epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    // Validation R@1 per task; empty for the instance stages.
    std::map<std::string, double> r1;
};

struct Checkpoint {
    ParamStore params;
    TrainConfig config;
    std::size_t epoch = 0;
    Stage stage = Stage::scene;
    std::vector<EpochRecord> history;
};

struct PretrainedPair {
    Checkpoint imageText;
    Checkpoint imagePoint;
};

// Writes <path> (parameters) and <path>.json (stage, epoch, config, history). A non-null `run`
// is stored verbatim under "run" in the sidecar.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path, const nlohmann::ordered_json* run = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

ModelOptions model_options(const TrainConfig& cfg);

std::vector<const SceneTriplet*> split_view(const std::vector<SceneTriplet>& scenes, scenegen::Split split);

// Instance-level contrastive pretraining of the Image-Text and Image-Point models over
// uniformly shuffled instances of the train split. One JSON line per epoch goes to `log`.
PretrainedPair pretrain_instance_models(const std::vector<SceneTriplet>& dataset, const TrainConfig& cfg,
                                        std::ostream* log = nullptr);

// Scene-stage parameters before any update: text and image branches from the Image-Text
// checkpoint, point branch from the Image-Point checkpoint, fresh attention pooling. With
// pretrained == nullptr every branch is freshly initialised.
ParamStore init_scene_params(std::size_t stubDim, const PretrainedPair* pretrained, const TrainConfig& cfg);

// Scene-level training under alpha * L(I,T) + (1 - alpha) * L(I,P). Keeps the epoch with the
// best mean cross-modal validation R@1 (the last epoch when the val split is empty).
Checkpoint train_scene_model(const std::vector<SceneTriplet>& dataset, const PretrainedPair* pretrained,
                             const TrainConfig& cfg, std::ostream* log = nullptr);

struct EvalSummary {
    std::vector<retrieval::RecallReport> reports;
    double meanCrossModalR1 = 0.0;
};

// Task matrix over `scenes` with the configured hint seed and distance.
EvalSummary evaluate_epoch(const ParamStore& params, const TrainConfig& cfg,
                           const std::vector<const SceneTriplet*>& scenes, std::size_t hintsPerScene = 0);

// Width of the frozen stub vectors in a dataset (0 for an empty dataset).
std::size_t dataset_stub_dim(const std::vector<SceneTriplet>& dataset);

} // namespace uniloc::train
