// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <vector>

#include "scarf/backbone.hpp"
#include "scarf/checkpoint.hpp"
#include "scarf/config.hpp"
#include "scarf/detector.hpp"
#include "scarf/fusion.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

/// Backbone, fusion and detection head built from a TrainConfig. Parameters are
/// initialised from cfg.seed.
class DetectorModel {
public:
    explicit DetectorModel(const TrainConfig& cfg);
    /// Rebuilds the architecture of ckpt.config and loads its tensors.
    static DetectorModel from_checkpoint(const Checkpoint& ckpt);

    struct Output {
        PyramidFeatures pyramid;  // X_l
        PyramidFeatures fused;    // X'_l
        std::vector<HeadOutput> heads;
    };
    /// `image` holds values in [0, 1]; it is shifted to [-0.5, 0.5] before the backbone.
    Output forward(const Tensor& image) const;
    std::vector<Detection> detect(const Tensor& image, const NmsParams& params = {}) const;

    const TrainConfig& config() const { return cfg_; }
    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }
    const Backbone& backbone() const { return backbone_; }
    const Fusion& fusion() const { return *fusion_; }
    const DetectionHead& head() const { return head_; }
    const std::vector<Anchor>& anchors() const { return anchors_; }

private:
    TrainConfig cfg_;
    ParamStore store_;
    Backbone backbone_;
    std::unique_ptr<Fusion> fusion_;
    DetectionHead head_;
    std::vector<Anchor> anchors_;
};

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
