// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/train.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "scarf/ops.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

std::string to_json_line(const LogRecord& r) {
    nlohmann::ordered_json j;
    j["iter"] = r.iter;
    j["lr"] = r.lr;
    j["loss_cls"] = r.loss_cls;
    j["loss_reg"] = r.loss_reg;
    j["map"] = r.map ? nlohmann::ordered_json(*r.map) : nlohmann::ordered_json(nullptr);
    return j.dump();
}

namespace {

std::string diverged_message(std::int64_t iteration, double lr, double loss_cls, double loss_reg) {
    std::ostringstream os;
    os << "training diverged at iteration " << iteration << " (lr " << lr << ", loss_cls " << loss_cls << ", loss_reg "
       << loss_reg << ")";
    return os.str();
}

}  // namespace

TrainingDiverged::TrainingDiverged(std::int64_t iteration, double lr, double loss_cls, double loss_reg)
    : std::runtime_error(diverged_message(iteration, lr, loss_cls, loss_reg)),
      iteration_(iteration),
      lr_(lr),
      loss_cls_(loss_cls),
      loss_reg_(loss_reg) {}

Datasets load_datasets(const TrainConfig& cfg) {
    Datasets d;
    d.train = cfg.train_data.empty() ? gen_dataset(cfg.data_seed, 0, cfg.train_count, cfg.difficulty, cfg.input_size)
                                     : load_dataset(cfg.train_data);
    d.eval = cfg.eval_data.empty() ? gen_dataset(cfg.data_seed, 1, cfg.eval_count, cfg.difficulty, cfg.input_size)
                                   : load_dataset(cfg.eval_data);
    return d;
}

BatchLoss batch_loss(const DetectorModel& model, const std::vector<const SceneSample*>& batch) {
    if (batch.empty()) throw ArgumentError("batch_loss: empty batch");
    std::vector<Tensor> cls, reg;
    std::int64_t positives = 0;
    for (const SceneSample* s : batch) {
        const auto out = model.forward(s->image);
        const MatchResult match = match_anchors(model.anchors(), s->gts);
        LossTerms terms = detection_loss_terms(out.heads, model.head().anchors_per_cell(), match);
        positives += terms.num_positive;
        cls.push_back(std::move(terms.cls_sum));
        reg.push_back(std::move(terms.reg_sum));
    }
    // Fixed left-to-right accumulation over the batch.
    Tensor cls_total = cls[0], reg_total = reg[0];
    for (std::size_t i = 1; i < batch.size(); ++i) {
        cls_total = add(cls_total, cls[i]);
        reg_total = add(reg_total, reg[i]);
    }
    const Real norm = static_cast<Real>(1.0 / static_cast<double>(std::max<std::int64_t>(positives, 1)));
    BatchLoss b;
    b.total = scale(add(cls_total, reg_total), norm);
    b.loss_cls = static_cast<double>(cls_total.item()) * norm;
    b.loss_reg = static_cast<double>(reg_total.item()) * norm;
    b.num_positive = positives;
    return b;
}

namespace {

// Deterministic epoch-wise permutation of the training set.
class BatchSampler {
public:
    BatchSampler(std::size_t n, std::uint64_t seed) : n_(n), rng_(derive_seed(seed, "batch-sampler")) {}

    std::vector<std::size_t> next(int batch_size) {
        std::vector<std::size_t> out;
        while (static_cast<int>(out.size()) < batch_size) {
            if (pos_ == order_.size()) reshuffle();
            out.push_back(order_[pos_++]);
        }
        return out;
    }

private:
    void reshuffle() {
        order_.resize(n_);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        for (std::size_t i = n_; i > 1; --i) std::swap(order_[i - 1], order_[rng_() % i]);
        pos_ = 0;
    }

    std::size_t n_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
};

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<SceneSample>& train_set, const std::vector<SceneSample>& eval_set,
                  std::ostream* log) {
    cfg.validate();
    if (train_set.empty()) throw ArgumentError("train: empty training set");
    DetectorModel model(cfg);
    const SgdConfig sgd = cfg.sgd();
    SgdState state;
    BatchSampler sampler(train_set.size(), cfg.seed);
    TrainResult result;

    for (std::int64_t it = 0; it < cfg.iterations; ++it) {
        std::vector<const SceneSample*> batch;
        for (auto i : sampler.next(sgd.batch_size)) batch.push_back(&train_set[i]);

        LogRecord rec;
        rec.iter = it;
        rec.lr = sgd.lr_at(it);
        GradientMap grads;
        {
            Tape tape;
            model.store().watch(tape);
            const BatchLoss loss = batch_loss(model, batch);
            rec.loss_cls = loss.loss_cls;
            rec.loss_reg = loss.loss_reg;
            if (!std::isfinite(rec.loss_cls) || !std::isfinite(rec.loss_reg)) {
                model.store().detach();
                throw TrainingDiverged(it, rec.lr, rec.loss_cls, rec.loss_reg);
            }
            tape.backward(loss.total);
            grads = model.store().gradients(tape);
            model.store().detach();
        }
        sgd_step(model.store(), grads, sgd, it, state);

        const bool last = it + 1 == cfg.iterations;
        const bool periodic = cfg.eval_interval > 0 && (it + 1) % cfg.eval_interval == 0;
        if ((last || periodic) && !eval_set.empty()) rec.map = evaluate(model, eval_set).report.map;
        if (log != nullptr) *log << to_json_line(rec) << '\n' << std::flush;
        result.log.push_back(rec);
    }
    result.final_map = result.log.back().map.value_or(0.0);
    result.checkpoint = Checkpoint::from_store(model.store(), cfg, cfg.iterations);
    return result;
}

TrainResult train(const TrainConfig& cfg, std::ostream* log) {
    cfg.validate();
    const Datasets data = load_datasets(cfg);
    return train(cfg, data.train, data.eval, log);
}

EvalResult evaluate(const DetectorModel& model, const std::vector<SceneSample>& scenes, const NmsParams& params) {
    if (scenes.empty()) throw ArgumentError("evaluate: empty dataset");
    EvalResult r;
    std::vector<std::vector<GroundTruth>> gts;
    for (const auto& s : scenes) {
        r.detections.push_back(model.detect(s.image, params));
        gts.push_back(s.gts);
    }
    r.report = eval_map(r.detections, gts, kNumClasses);
    return r;
}

EvalResult evaluate(const Checkpoint& ckpt, const std::vector<SceneSample>& scenes, const NmsParams& params) {
    if (scenes.empty()) throw ArgumentError("evaluate: empty dataset");
    return evaluate(DetectorModel::from_checkpoint(ckpt), scenes, params);
}

nlohmann::ordered_json report_json(const MapReport& report) {
    nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < report.ap.size(); ++c) {
        nlohmann::ordered_json entry;
        entry["ap"] = report.ap[c] ? nlohmann::ordered_json(*report.ap[c]) : nlohmann::ordered_json(nullptr);
        entry["gt_count"] = report.gt_count[c];
        per_class[c < kClassNames.size() ? std::string(kClassNames[c]) : std::to_string(c)] = entry;
    }
    nlohmann::ordered_json j;
    j["map"] = report.map;
    j["iou_threshold"] = 0.5;
    j["classes"] = per_class;
    return j;
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
