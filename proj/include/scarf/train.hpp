// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "scarf/checkpoint.hpp"
#include "scarf/config.hpp"
#include "scarf/model.hpp"
#include "scarf/scene.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

/// One line of the metrics log.
struct LogRecord {
    std::int64_t iter = 0;  // 0-based
    double lr = 0;
    double loss_cls = 0;
    double loss_reg = 0;
    std::optional<double> map;  // set at evaluation points only
};

/// {"iter", "lr", "loss_cls", "loss_reg", "map"} on a single line.
std::string to_json_line(const LogRecord& r);

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::int64_t iteration, double lr, double loss_cls, double loss_reg);
    std::int64_t iteration() const { return iteration_; }
    double lr() const { return lr_; }
    double loss_cls() const { return loss_cls_; }
    double loss_reg() const { return loss_reg_; }

private:
    std::int64_t iteration_;
    double lr_, loss_cls_, loss_reg_;
};

struct Datasets {
    std::vector<SceneSample> train, eval;
};
/// Loads the configured directories, or generates scenes from data_seed
/// (split 0 for training, split 1 for evaluation).
Datasets load_datasets(const TrainConfig& cfg);

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<LogRecord> log;
    double final_map = 0;
};

/// Mini-batch SGD on `train_set`; mAP on `eval_set` every eval_interval
/// iterations and after the last one. Each log line is also written to `log`.
TrainResult train(const TrainConfig& cfg, const std::vector<SceneSample>& train_set, const std::vector<SceneSample>& eval_set,
                  std::ostream* log = nullptr);
TrainResult train(const TrainConfig& cfg, std::ostream* log = nullptr);

/// Mean loss of one batch, with the per-component split.
struct BatchLoss {
    Tensor total;  // (cls + reg) / max(1, positives)
    double loss_cls = 0, loss_reg = 0;
    std::int64_t num_positive = 0;
};
BatchLoss batch_loss(const DetectorModel& model, const std::vector<const SceneSample*>& batch);

struct EvalResult {
    MapReport report;
    std::vector<std::vector<Detection>> detections;  // per scene
};
EvalResult evaluate(const DetectorModel& model, const std::vector<SceneSample>& scenes, const NmsParams& params = {});
EvalResult evaluate(const Checkpoint& ckpt, const std::vector<SceneSample>& scenes, const NmsParams& params = {});

nlohmann::ordered_json report_json(const MapReport& report);

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
