// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/fusion.hpp"

#include "scarf/ops.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

namespace {

constexpr std::pair<FusionKind, std::string_view> kKindNames[] = {
    {FusionKind::Plain, "plain"},
    {FusionKind::ConvFusion, "conv"},
    {FusionKind::TopDown, "topdown"},
    {FusionKind::UniLstm, "unilstm"},
    {FusionKind::ScarfNoAttention, "scarf-noatt"},
    {FusionKind::ScarfFull, "scarf"},
};

ArNetConfig arnet_config(const PyramidSpec& spec, const FusionConfig& cfg, bool attention) {
    ArNetConfig a;
    a.mode = cfg.mode;
    a.attention = attention;
    a.reduction = cfg.reduction;
    if (cfg.d_out > 0) a.out_channels.assign(static_cast<std::size_t>(spec.k), cfg.d_out);
    return a;
}

}  // namespace

std::string_view to_string(FusionKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

FusionKind parse_fusion_kind(std::string_view s) {
    for (const auto& [k, name] : kKindNames) {
        if (name == s) return k;
    }
    throw ConfigError("unknown fusion kind '" + std::string(s) +
                      "' (expected plain, conv, topdown, unilstm, scarf-noatt or scarf)");
}

const std::vector<FusionKind>& all_fusion_kinds() {
    static const std::vector<FusionKind> kinds = {FusionKind::Plain,   FusionKind::ConvFusion,       FusionKind::TopDown,
                                                  FusionKind::UniLstm, FusionKind::ScarfNoAttention, FusionKind::ScarfFull};
    return kinds;
}

std::vector<std::int64_t> fusion_output_channels(const PyramidSpec& spec, const FusionConfig& cfg) {
    std::vector<std::int64_t> out = spec.level_channels();
    if (cfg.kind == FusionKind::Plain) return out;
    for (auto& c : out) c = combined_channels(cfg.mode, c, cfg.d_out > 0 ? cfg.d_out : c);
    return out;
}

std::unique_ptr<Fusion> make_fusion(ParamStore& store, const PyramidSpec& spec, const FusionConfig& cfg,
                                    const std::string& prefix) {
    switch (cfg.kind) {
        case FusionKind::Plain:
            return std::make_unique<PlainFusion>(spec);
        case FusionKind::ConvFusion:
            return std::make_unique<ConvFusion>(store, spec, cfg, prefix);
        case FusionKind::TopDown:
            return std::make_unique<TopDownFusion>(store, spec, cfg, prefix);
        case FusionKind::UniLstm:
        case FusionKind::ScarfNoAttention:
        case FusionKind::ScarfFull:
            return std::make_unique<LstmFusion>(store, spec, cfg, prefix);
    }
    throw ConfigError("unhandled fusion kind");
}

ConvFusion::ConvFusion(ParamStore& store, const PyramidSpec& spec, const FusionConfig& cfg, const std::string& prefix)
    : matching_(store, prefix + ".match", spec.level_channels(), cfg.d, spec.height(0), spec.width(0)),
      mixer_(Conv2dLayer::create(store, prefix + ".mix", spec.k * cfg.d, spec.k * 2 * cfg.d, 1)),
      arnet_(store, spec, spec.k * 2 * cfg.d, arnet_config(spec, cfg, cfg.attention), prefix + ".arnet") {}

PyramidFeatures ConvFusion::forward(const ParamStore& store, const PyramidFeatures& pyramid) const {
    if (pyramid.k() < 2) throw ArgumentError("conv fusion needs at least two pyramid levels");
    std::vector<Tensor> matched;
    for (int l = 0; l < pyramid.k(); ++l) matched.push_back(matching_.forward(store, pyramid.levels[static_cast<std::size_t>(l)], l));
    return arnet_.redistribute(store, mixer_.forward(store, concat_channels(matched)), pyramid);
}

TopDownFusion::TopDownFusion(ParamStore& store, const PyramidSpec& spec, const FusionConfig& cfg, const std::string& prefix)
    : mode_(cfg.mode), channels_(spec.level_channels()) {
    if (spec.k < 2) throw ArgumentError("top-down fusion needs at least two pyramid levels");
    for (auto c : channels_) {
        path_channels_.push_back(cfg.d_out > 0 ? cfg.d_out : c);
        combined_channels(mode_, c, path_channels_.back());
    }
    for (int l = 0; l < spec.k; ++l) {
        const auto i = static_cast<std::size_t>(l);
        lateral_.push_back(Conv2dLayer::create(store, prefix + ".lateral" + std::to_string(l), channels_[i], path_channels_[i], 1));
        if (l + 1 < spec.k) {
            topdown_.push_back(
                Conv2dLayer::create(store, prefix + ".topdown" + std::to_string(l), path_channels_[i + 1], path_channels_[i], 1));
        }
    }
}

std::vector<Tensor> TopDownFusion::pathway(const ParamStore& store, const PyramidFeatures& pyramid) const {
    const int k = pyramid.k();
    if (k != static_cast<int>(lateral_.size())) throw ArgumentError("top-down fusion configured for a different k");
    std::vector<Tensor> p(static_cast<std::size_t>(k));
    p[static_cast<std::size_t>(k - 1)] = lateral_.back().forward(store, pyramid.levels.back());
    for (int l = k - 2; l >= 0; --l) {
        const Tensor& x = pyramid.levels[static_cast<std::size_t>(l)];
        const Tensor& above = p[static_cast<std::size_t>(l + 1)];
        if (x.dim(1) != 2 * above.dim(1) || x.dim(2) != 2 * above.dim(2)) {
            throw ShapeError("top-down fusion needs a 2x size ratio between levels, got " + shape_str(x.dims()) + " and " +
                             shape_str(above.dims()));
        }
        const Tensor up = bilinear_resize(above, x.dim(1), x.dim(2));
        p[static_cast<std::size_t>(l)] =
            add(lateral_[static_cast<std::size_t>(l)].forward(store, x), topdown_[static_cast<std::size_t>(l)].forward(store, up));
    }
    return p;
}

PyramidFeatures TopDownFusion::forward(const ParamStore& store, const PyramidFeatures& pyramid) const {
    const std::vector<Tensor> p = pathway(store, pyramid);
    PyramidFeatures out;
    for (int l = 0; l < pyramid.k(); ++l) {
        out.levels.push_back(combine(mode_, pyramid.levels[static_cast<std::size_t>(l)], p[static_cast<std::size_t>(l)]));
    }
    return out;
}

std::vector<std::int64_t> TopDownFusion::output_channels() const {
    std::vector<std::int64_t> out;
    for (std::size_t l = 0; l < channels_.size(); ++l) out.push_back(combined_channels(mode_, channels_[l], path_channels_[l]));
    return out;
}

namespace {

ScNetConfig scnet_config(const FusionConfig& cfg) {
    ScNetConfig s;
    s.d = cfg.d;
    s.bidirectional = cfg.kind != FusionKind::UniLstm;
    return s;
}

bool lstm_attention(const FusionConfig& cfg) {
    switch (cfg.kind) {
        case FusionKind::ScarfFull:
            return true;
        case FusionKind::ScarfNoAttention:
            return false;
        default:
            return cfg.attention;
    }
}

}  // namespace

LstmFusion::LstmFusion(ParamStore& store, const PyramidSpec& spec, const FusionConfig& cfg, const std::string& prefix)
    : kind_(cfg.kind),
      scnet_(store, spec, scnet_config(cfg), prefix + ".scnet"),
      arnet_(store, spec, spec.k * scnet_.fused_channels(), arnet_config(spec, cfg, lstm_attention(cfg)), prefix + ".arnet") {
    if (cfg.kind != FusionKind::UniLstm && cfg.kind != FusionKind::ScarfNoAttention && cfg.kind != FusionKind::ScarfFull) {
        throw ConfigError("LstmFusion built for a non-recurrent fusion kind");
    }
}

PyramidFeatures LstmFusion::forward(const ParamStore& store, const PyramidFeatures& pyramid) const {
    return arnet_.forward(store, scnet_.forward(store, pyramid), pyramid);
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
