// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/backbone.hpp"

#include "scarf/ops.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

std::vector<std::int64_t> PyramidSpec::level_channels() const {
    std::vector<std::int64_t> out;
    for (int l = 0; l < k; ++l) out.push_back(channels(l));
    return out;
}

void PyramidSpec::validate() const {
    if (k < 2) throw ConfigError("pyramid needs k >= 2 levels");
    if (k > stages()) throw ConfigError("pyramid has more levels than backbone stages");
    for (auto c : stage_channels) {
        if (c < 1) throw ConfigError("stage channel counts must be positive");
    }
    if (input_h < 1 || input_w < 1 || input_h % max_stride() != 0 || input_w % max_stride() != 0) {
        throw ConfigError("input size " + std::to_string(input_h) + "x" + std::to_string(input_w) +
                          " must be a positive multiple of the maximum stride " + std::to_string(max_stride()));
    }
}

std::vector<LevelInfo> PyramidFeatures::info(std::int64_t input_h) const {
    std::vector<LevelInfo> out;
    for (const auto& t : levels) out.push_back({input_h / t.dim(1), t.dim(0), t.dim(1), t.dim(2)});
    return out;
}

std::int64_t receptive_field(const PyramidSpec& spec, int level) {
    // Standard recurrence: rf += (kernel - 1) * jump, jump *= stride.
    std::int64_t rf = 1, jump = 1;
    const int last_stage = spec.first_level_stage() + level;
    for (int s = 1; s <= last_stage; ++s) {
        rf += 2 * jump;
        jump *= 2;
        rf += 2 * jump;
    }
    return rf;
}

Backbone::Backbone(ParamStore& store, const PyramidSpec& spec, const std::string& prefix) : spec_(spec) {
    spec_.validate();
    std::int64_t in = 3;
    for (int s = 0; s < spec_.stages(); ++s) {
        const auto out = spec_.stage_channels[static_cast<std::size_t>(s)];
        const std::string name = prefix + ".stage" + std::to_string(s + 1);
        down_.push_back(Conv2dLayer::create(store, name + ".down", in, out, 3, 2));
        refine_.push_back(Conv2dLayer::create(store, name + ".refine", out, out, 3, 1));
        in = out;
    }
}

PyramidFeatures Backbone::forward(const ParamStore& store, const Tensor& image) const {
    if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("backbone expects a [3, H, W] image, got " + shape_str(image.dims()));
    if (image.dim(1) % spec_.max_stride() != 0 || image.dim(2) % spec_.max_stride() != 0) {
        throw ShapeError("image " + shape_str(image.dims()) + " is not divisible by stride " +
                         std::to_string(spec_.max_stride()));
    }
    PyramidFeatures out;
    Tensor x = image;
    for (int s = 0; s < spec_.stages(); ++s) {
        x = relu(down_[static_cast<std::size_t>(s)].forward(store, x));
        x = relu(refine_[static_cast<std::size_t>(s)].forward(store, x));
        if (s + 1 >= spec_.first_level_stage()) out.levels.push_back(x);
    }
    return out;
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
