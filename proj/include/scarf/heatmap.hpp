// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Activation heatmaps of pyramid levels before and after fusion.

#pragma once

#include <string_view>

#include "scarf/model.hpp"
#include "scarf/scene.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

enum class HeatmapStage { Pyramid, Fused };
std::string_view to_string(HeatmapStage s);
/// "pyramid" or "scarf".
HeatmapStage parse_heatmap_stage(std::string_view s);

/// Channel of fmap[C, H, W] with the largest spatial mean (lowest index on ties).
std::int64_t select_channel(const Tensor& fmap);

/// Min-max normalisation of one channel to [0, 255]; a constant channel maps to 128.
GrayImage channel_heatmap(const Tensor& fmap, std::int64_t channel);

/// channel_heatmap of the selected channel, at the map's native resolution.
GrayImage heatmap(const Tensor& fmap);

/// Feature map of `level` at `stage` for an image (resized to the model input if needed).
Tensor heatmap_features(const DetectorModel& model, const Tensor& image, int level, HeatmapStage stage);

GrayImage visualize_heatmap(const DetectorModel& model, const Tensor& image, int level, HeatmapStage stage);

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
