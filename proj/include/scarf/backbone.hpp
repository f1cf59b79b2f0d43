// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "scarf/nn.hpp"
#include "scarf/tensor.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

/// Shape of the bottom-up pipeline. Stage s (1-based) has stride 2^s; the last
/// `k` stages form the detection pyramid.
struct PyramidSpec {
    int k = 3;
    std::vector<std::int64_t> stage_channels{8, 16, 32, 64, 128};
    std::int64_t input_h = 64, input_w = 64;

    int stages() const { return static_cast<int>(stage_channels.size()); }
    int first_level_stage() const { return stages() - k + 1; }
    std::int64_t max_stride() const { return std::int64_t{1} << stages(); }

    /// Pyramid level i (0 = largest map) properties.
    std::int64_t stride(int level) const { return std::int64_t{1} << (first_level_stage() + level); }
    std::int64_t channels(int level) const { return stage_channels[static_cast<std::size_t>(first_level_stage() - 1 + level)]; }
    std::int64_t height(int level) const { return input_h / stride(level); }
    std::int64_t width(int level) const { return input_w / stride(level); }
    std::vector<std::int64_t> level_channels() const;

    void validate() const;
};

struct LevelInfo {
    std::int64_t stride, channels, height, width;
};

/// Ordered pyramid levels, largest spatial size first.
struct PyramidFeatures {
    std::vector<Tensor> levels;

    int k() const { return static_cast<int>(levels.size()); }
    std::vector<LevelInfo> info(std::int64_t input_h) const;
};

/// Receptive field (in input pixels) of one unit of pyramid level `level`.
std::int64_t receptive_field(const PyramidSpec& spec, int level);

/// Bottom-up CNN: each stage is conv3x3/s2 -> relu -> conv3x3/s1 -> relu.
class Backbone {
public:
    Backbone(ParamStore& store, const PyramidSpec& spec, const std::string& prefix = "backbone");

    const PyramidSpec& spec() const { return spec_; }
    PyramidFeatures forward(const ParamStore& store, const Tensor& image) const;

private:
    PyramidSpec spec_;
    std::vector<Conv2dLayer> down_, refine_;
};

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
