// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/arnet.hpp"

#include "scarf/ops.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

std::string_view to_string(CombineMode mode) { return mode == CombineMode::ChannelConcat ? "concat" : "add"; }

CombineMode parse_combine_mode(std::string_view s) {
    if (s == "concat") return CombineMode::ChannelConcat;
    if (s == "add") return CombineMode::ElementAdd;
    throw ConfigError("unknown combine mode '" + std::string(s) + "' (expected concat or add)");
}

std::int64_t combined_channels(CombineMode mode, std::int64_t original, std::int64_t redistributed) {
    if (mode == CombineMode::ChannelConcat) return original + redistributed;
    if (original != redistributed) {
        throw ConfigError("element-wise addition needs matching channels (" + std::to_string(original) + " vs " +
                          std::to_string(redistributed) + ")");
    }
    return original;
}

Tensor combine(CombineMode mode, const Tensor& original, const Tensor& redistributed) {
    if (mode == CombineMode::ElementAdd) {
        combined_channels(mode, original.dim(0), redistributed.dim(0));
        return add(original, redistributed);
    }
    const Tensor parts[] = {original, redistributed};
    return concat_channels(parts);
}

SeBlock::SeBlock(ParamStore& store, const std::string& prefix, std::int64_t channels, std::int64_t reduction)
    : channels_(channels) {
    if (reduction < 1 || channels % reduction != 0) {
        throw ConfigError("SE reduction " + std::to_string(reduction) + " must divide " + std::to_string(channels));
    }
    fc1_ = LinearLayer::create(store, prefix + ".fc1", channels, channels / reduction);
    fc2_ = LinearLayer::create(store, prefix + ".fc2", channels / reduction, channels);
}

Tensor SeBlock::logits(const ParamStore& store, const Tensor& z) const {
    if (z.rank() != 3 || z.dim(0) != channels_) {
        throw ShapeError("SE block expects " + std::to_string(channels_) + " channels, got " + shape_str(z.dims()));
    }
    return fc2_.forward(store, relu(fc1_.forward(store, global_avg_pool(z))));
}

Tensor SeBlock::attention(const ParamStore& store, const Tensor& z) const { return sigmoid(logits(store, z)); }

Tensor se_attention(const ParamStore& store, const SeBlock& block, const Tensor& z) { return block.attention(store, z); }

ArNet::ArNet(ParamStore& store, const PyramidSpec& spec, std::int64_t fused_channels, const ArNetConfig& cfg,
             const std::string& prefix)
    : cfg_(cfg), fused_channels_(fused_channels), original_channels_(spec.level_channels()) {
    if (cfg_.out_channels.empty()) cfg_.out_channels = original_channels_;
    if (cfg_.out_channels.size() != original_channels_.size()) {
        throw ConfigError("ArNet needs one output channel count per pyramid level");
    }
    for (std::size_t l = 0; l < original_channels_.size(); ++l) {
        combined_channels(cfg_.mode, original_channels_[l], cfg_.out_channels[l]);
    }
    if (cfg_.attention) se_.emplace_back(store, prefix + ".se", fused_channels, cfg_.reduction);
    for (std::size_t l = 0; l < original_channels_.size(); ++l) {
        convs_.push_back(Conv2dLayer::create(store, prefix + ".level" + std::to_string(l), fused_channels, cfg_.out_channels[l], 1));
    }
}

std::vector<std::int64_t> ArNet::output_channels() const {
    std::vector<std::int64_t> out;
    for (std::size_t l = 0; l < original_channels_.size(); ++l) {
        out.push_back(combined_channels(cfg_.mode, original_channels_[l], cfg_.out_channels[l]));
    }
    return out;
}

PyramidFeatures ArNet::forward(const ParamStore& store, const FusedFeatures& fused, const PyramidFeatures& pyramid) const {
    if (static_cast<int>(fused.levels.size()) != pyramid.k()) {
        throw ArgumentError("fused features and pyramid disagree on the number of levels");
    }
    return redistribute(store, concat_channels(fused.levels), pyramid);
}

PyramidFeatures ArNet::redistribute(const ParamStore& store, const Tensor& z, const PyramidFeatures& pyramid) const {
    if (pyramid.k() != static_cast<int>(convs_.size())) {
        throw ArgumentError("ArNet configured for " + std::to_string(convs_.size()) + " levels, got " +
                            std::to_string(pyramid.k()));
    }
    if (z.rank() != 3 || z.dim(0) != fused_channels_) {
        throw ShapeError("ArNet expects a stack of " + std::to_string(fused_channels_) + " channels, got " + shape_str(z.dims()));
    }
    const Tensor weighted = cfg_.attention ? hadamard(z, se_.front().attention(store, z)) : z;
    PyramidFeatures out;
    for (int l = 0; l < pyramid.k(); ++l) {
        const Tensor& x = pyramid.levels[static_cast<std::size_t>(l)];
        const Tensor resized = (x.dim(1) == z.dim(1) && x.dim(2) == z.dim(2)) ? weighted : bilinear_resize(weighted, x.dim(1), x.dim(2));
        const Tensor m = convs_[static_cast<std::size_t>(l)].forward(store, resized);
        out.levels.push_back(combine(cfg_.mode, x, m));
    }
    return out;
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
