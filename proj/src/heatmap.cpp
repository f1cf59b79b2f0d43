// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "scarf/ops.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

std::string_view to_string(HeatmapStage s) { return s == HeatmapStage::Pyramid ? "pyramid" : "scarf"; }

HeatmapStage parse_heatmap_stage(std::string_view s) {
    if (s == "pyramid") return HeatmapStage::Pyramid;
    if (s == "scarf") return HeatmapStage::Fused;
    throw ArgumentError("unknown heatmap stage '" + std::string(s) + "' (expected pyramid or scarf)");
}

std::int64_t select_channel(const Tensor& fmap) {
    if (fmap.rank() != 3 || fmap.numel() == 0) throw ShapeError("select_channel expects a non-empty [C, H, W] map");
    const auto C = fmap.dim(0), plane = fmap.dim(1) * fmap.dim(2);
    const auto v = fmap.data();
    std::int64_t best = 0;
    double best_mean = 0;
    for (std::int64_t c = 0; c < C; ++c) {
        double s = 0;
        for (std::int64_t i = 0; i < plane; ++i) s += static_cast<double>(v[static_cast<std::size_t>(c * plane + i)]);
        const double mean = s / static_cast<double>(plane);
        if (c == 0 || mean > best_mean) {
            best = c;
            best_mean = mean;
        }
    }
    return best;
}

GrayImage channel_heatmap(const Tensor& fmap, std::int64_t channel) {
    if (fmap.rank() != 3) throw ShapeError("channel_heatmap expects [C, H, W], got " + shape_str(fmap.dims()));
    if (channel < 0 || channel >= fmap.dim(0)) throw ArgumentError("channel out of range");
    const auto H = fmap.dim(1), W = fmap.dim(2);
    const auto plane = fmap.data().subspan(static_cast<std::size_t>(channel * H * W), static_cast<std::size_t>(H * W));
    const auto [lo_it, hi_it] = std::minmax_element(plane.begin(), plane.end());
    const double lo = *lo_it, hi = *hi_it;
    GrayImage g{W, H, std::vector<std::uint8_t>(static_cast<std::size_t>(H * W), 128)};
    if (hi > lo) {
        for (std::size_t i = 0; i < plane.size(); ++i) {
            g.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * (static_cast<double>(plane[i]) - lo) / (hi - lo)));
        }
    }
    return g;
}

GrayImage heatmap(const Tensor& fmap) { return channel_heatmap(fmap, select_channel(fmap)); }

Tensor heatmap_features(const DetectorModel& model, const Tensor& image, int level, HeatmapStage stage) {
    const auto& cfg = model.config();
    if (level < 0 || level >= cfg.k) {
        throw ArgumentError("level " + std::to_string(level) + " out of range [0, " + std::to_string(cfg.k) + ")");
    }
    if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("heatmap input must be [3, H, W]");
    Tensor x = image.detached();
    if (x.dim(1) != cfg.input_size || x.dim(2) != cfg.input_size) x = bilinear_resize(x, cfg.input_size, cfg.input_size);
    const auto out = model.forward(x);
    const auto& levels = stage == HeatmapStage::Pyramid ? out.pyramid.levels : out.fused.levels;
    return levels[static_cast<std::size_t>(level)];
}

GrayImage visualize_heatmap(const DetectorModel& model, const Tensor& image, int level, HeatmapStage stage) {
    return heatmap(heatmap_features(model, image, level, stage));
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
