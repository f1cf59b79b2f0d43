// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single-stage anchor-based detection head with SSD-style matching, losses,
// decoding and VOC-style evaluation.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "scarf/backbone.hpp"
#include "scarf/nn.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

/// Axis-aligned box in continuous pixel coordinates.
struct Box {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
    bool valid() const { return x1 < x2 && y1 < y2; }
    bool operator==(const Box&) const = default;
};

/// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b);

struct GroundTruth {
    int label = 0;  // class index in [0, num_classes)
    Box box;
    bool operator==(const GroundTruth&) const = default;
};

struct Anchor {
    int level = 0;
    double cx = 0, cy = 0, w = 0, h = 0;
    Box box() const { return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2}; }
};

struct AnchorConfig {
    /// Anchor side (before aspect) is scale * stride.
    double scale = 1.5;
    /// Width / height ratios; one anchor per ratio and cell.
    std::vector<double> aspects{1.0, 2.0, 0.5};

    int per_cell() const { return static_cast<int>(aspects.size()); }
};

/// Anchors of every pyramid level, ordered by (level, y, x, aspect).
std::vector<Anchor> generate_anchors(const PyramidSpec& spec, const AnchorConfig& cfg);

/// SSD centre/size offsets with variances (0.1, 0.2).
std::array<double, 4> encode_box(const Anchor& anchor, const Box& box);
Box decode_box(const Anchor& anchor, std::span<const Real> offsets);

struct MatchResult {
    static constexpr int kIgnore = -1;
    static constexpr int kBackground = 0;

    /// Per anchor: kIgnore, kBackground, or 1 + class index.
    std::vector<int> labels;
    /// Per anchor: matched ground-truth index or -1.
    std::vector<int> gt_index;
    /// Per anchor regression target (meaningful for positives only).
    std::vector<std::array<double, 4>> targets;

    std::int64_t num_positive() const;
};

/// Positive when IoU >= pos_thr with some box (assigned to the highest-IoU box,
/// lowest index on ties), background below neg_thr, ignored in between. Every
/// box then claims its single best anchor (lowest anchor index on ties); when
/// two boxes claim the same anchor the lower box index keeps it.
MatchResult match_anchors(std::span<const Anchor> anchors, std::span<const GroundTruth> gts, double pos_thr = 0.5,
                          double neg_thr = 0.4);

struct HeadOutput {
    Tensor cls;  // [A * (num_classes + 1), H, W]
    Tensor reg;  // [A * 4, H, W]
};

/// One 3x3 convolution per branch and level.
class DetectionHead {
public:
    DetectionHead(ParamStore& store, const std::vector<std::int64_t>& in_channels, int anchors_per_cell, int num_classes,
                  const std::string& prefix = "head");

    HeadOutput forward(const ParamStore& store, const Tensor& x, int level) const;

    int num_classes() const { return num_classes_; }
    int anchors_per_cell() const { return anchors_per_cell_; }
    const Conv2dLayer& cls_conv(int level) const { return cls_.at(static_cast<std::size_t>(level)); }
    const Conv2dLayer& reg_conv(int level) const { return reg_.at(static_cast<std::size_t>(level)); }

private:
    int anchors_per_cell_, num_classes_;
    std::vector<Conv2dLayer> cls_, reg_;
};

/// All anchors' class logits [N, num_classes + 1] and offsets [N, 4], in anchor order.
struct HeadRows {
    Tensor logits, offsets;
};
HeadRows flatten_heads(std::span<const HeadOutput> heads, int anchors_per_cell);

struct LossTerms {
    Tensor cls_sum;  // summed CE over positives and mined negatives
    Tensor reg_sum;  // summed smooth-L1 over positive coordinates (zero scalar when none)
    std::int64_t num_positive = 0;
    std::int64_t num_negative = 0;
};

/// Unnormalised SSD loss of one image: softmax CE over positives plus the
/// hardest background anchors (3 per positive, at least 1), smooth-L1 over
/// positive offsets.
LossTerms detection_loss_terms(std::span<const HeadOutput> heads, int anchors_per_cell, const MatchResult& match,
                               int neg_pos_ratio = 3);

/// (cls_sum + reg_sum) / max(1, positives).
Tensor detection_loss(std::span<const HeadOutput> heads, int anchors_per_cell, const MatchResult& match);

struct Detection {
    int label = 0;
    double score = 0;
    Box box;
};

struct NmsParams {
    double conf_thr = 0.05;
    double iou_thr = 0.45;
    std::size_t top_k = 100;
};

struct ScoredBox {
    Box box;
    double score = 0;
    std::int64_t index = 0;  // tie-break key
};

/// Greedy NMS over boxes ordered by (score desc, index asc); a box is dropped
/// when its IoU with a kept box exceeds `iou_thr`. Returns kept boxes in that order.
std::vector<ScoredBox> nms(std::vector<ScoredBox> boxes, double iou_thr);

/// Per-class decoding, thresholding and NMS, then the overall top-k.
/// Boxes are clipped to the image; degenerate boxes are dropped.
std::vector<Detection> decode_nms(std::span<const HeadOutput> heads, std::span<const Anchor> anchors, int anchors_per_cell,
                                  double image_w, double image_h, const NmsParams& params = {});

struct MapReport {
    /// Per class AP; empty for classes without ground truth.
    std::vector<std::optional<double>> ap;
    std::vector<std::int64_t> gt_count;
    double map = 0;
};

/// All-point interpolated AP from a ranked TP/FP sequence.
double average_precision(const std::vector<bool>& is_tp, std::int64_t num_gt);

/// VOC-style mAP. Detections of a class are ranked by score (ties: image index,
/// then list position); each is matched to the highest-IoU box of its class in
/// its image and is a true positive when IoU >= iou_thr and that box is unclaimed.
MapReport eval_map(std::span<const std::vector<Detection>> detections, std::span<const std::vector<GroundTruth>> gts,
                   int num_classes, double iou_thr = 0.5);

/// One JSON object per line: {"image_id", "class", "score", "box": [x1, y1, x2, y2]}.
void write_detections_jsonl(std::ostream& os, std::int64_t image_id, std::span<const Detection> dets);

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
