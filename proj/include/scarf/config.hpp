// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "scarf/backbone.hpp"
#include "scarf/detector.hpp"
#include "scarf/fusion.hpp"
#include "scarf/nn.hpp"
#include "scarf/scene.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

/// Everything needed to reproduce a training run. Every field has a default;
/// the JSON form holds exactly these keys.
struct TrainConfig {
    // Model.
    FusionKind fusion = FusionKind::ScarfFull;
    int k = 3;
    std::int64_t d = 32;
    std::int64_t d_out = 0;  // 0 ("same"): redistributed maps keep each level's width
    CombineMode combine = CombineMode::ChannelConcat;
    bool attention = true;
    std::int64_t reduction = 4;
    std::vector<std::int64_t> stage_channels{8, 16, 32, 64, 128};
    std::int64_t input_size = 64;
    double anchor_scale = 1.5;

    // Optimiser. An empty schedule means SgdConfig::default_schedule(iterations).
    std::vector<LrPhase> lr_schedule;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int batch_size = 8;

    // Run.
    std::int64_t iterations = 2000;
    std::uint64_t seed = 0;
    std::uint64_t data_seed = 1234;
    std::int64_t eval_interval = 500;  // 0 disables intermediate evaluation

    // Data. Empty paths select procedurally generated scenes.
    Difficulty difficulty = Difficulty::Hard;
    std::int64_t train_count = 800;
    std::int64_t eval_count = 200;
    std::string train_data;
    std::string eval_data;

    PyramidSpec pyramid() const;
    FusionConfig fusion_config() const;
    AnchorConfig anchor_config() const;
    SgdConfig sgd() const;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;

    bool operator==(const TrainConfig&) const;
};

nlohmann::ordered_json to_json(const TrainConfig& cfg);
/// Strict: unknown keys and ill-typed values throw ConfigError; absent keys keep defaults.
TrainConfig config_from_json(const nlohmann::json& j);

TrainConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const TrainConfig& cfg);

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
