#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chestnet/data.hpp"
#include "chestnet/model.hpp"
#include "chestnet/training.hpp"

namespace chestnet {

/// Where a run's images come from: a manifest when `manifest` is set,
/// otherwise the synthetic generator.
struct DataConfig {
    std::string manifest;
    std::string image_root;  // defaults to the manifest's directory
    std::string boxes;       // optional boxes.csv
    std::vector<std::string> vocabulary;
    bool strict = true;
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    // Optional affine normalization applied after [0,1] scaling.
    std::optional<double> mean;
    std::optional<double> stddev;
};

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    SynthConfig synth;
    DataConfig data;
    std::string output_dir = "run";
    std::uint64_t seed = 1;

    /// Cross-field checks; throws ConfigError before any work starts.
    void validate() const;
};

nlohmann::json to_json(const BackboneConfig& c);
nlohmann::json to_json(const AttentionConfig& c);
nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const SynthConfig& c);
nlohmann::json to_json(const DataConfig& c);
nlohmann::json to_json(const RunConfig& c);

/// Parsers start from defaults and reject unknown keys.
BackboneConfig backbone_from_json(const nlohmann::json& j);
AttentionConfig attention_from_json(const nlohmann::json& j);
ModelConfig model_from_json(const nlohmann::json& j);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace chestnet
