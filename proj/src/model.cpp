// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/model.hpp"

#include "scarf/ops.hpp"
#include "scarf/scene.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

namespace {

const TrainConfig& validated(const TrainConfig& cfg) {
    cfg.validate();
    return cfg;
}

}  // namespace

DetectorModel::DetectorModel(const TrainConfig& cfg)
    : cfg_(validated(cfg)),
      store_(cfg.seed),
      backbone_(store_, cfg.pyramid()),
      fusion_(make_fusion(store_, cfg.pyramid(), cfg.fusion_config())),
      head_(store_, fusion_->output_channels(), cfg.anchor_config().per_cell(), kNumClasses),
      anchors_(generate_anchors(cfg.pyramid(), cfg.anchor_config())) {}

DetectorModel DetectorModel::from_checkpoint(const Checkpoint& ckpt) {
    DetectorModel m(ckpt.config);
    ckpt.load_into(m.store_);
    return m;
}

DetectorModel::Output DetectorModel::forward(const Tensor& image) const {
    Output out;
    out.pyramid = backbone_.forward(store_, add(image, Tensor::full({3}, Real(-0.5))));
    out.fused = fusion_->forward(store_, out.pyramid);
    for (int l = 0; l < out.fused.k(); ++l) out.heads.push_back(head_.forward(store_, out.fused.levels[static_cast<std::size_t>(l)], l));
    return out;
}

std::vector<Detection> DetectorModel::detect(const Tensor& image, const NmsParams& params) const {
    const Output out = forward(image.detached());
    return decode_nms(out.heads, anchors_, head_.anchors_per_cell(), static_cast<double>(image.dim(2)),
                      static_cast<double>(image.dim(1)), params);
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
