// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// scarf: dataset generation, training, evaluation, ablation and heatmaps.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "scarf/ablate.hpp"
#include "scarf/checkpoint.hpp"
#include "scarf/config.hpp"
#include "scarf/heatmap.hpp"
#include "scarf/train.hpp"

namespace {

using namespace scarf;

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiscale feature fusion detector on synthetic scenes"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Render a synthetic dataset");
    std::string gen_out, gen_difficulty = "hard";
    std::int64_t gen_count = 0;
    std::uint64_t gen_seed = 0;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--count", gen_count, "Number of scenes")->required()->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "Dataset seed")->required();
    gen->add_option("--difficulty", gen_difficulty, "easy or hard")->check(CLI::IsMember({"easy", "hard"}));

    // train
    auto* tr = app.add_subcommand("train", "Train a detector; writes the metrics log to stdout");
    std::string tr_config, tr_out = "model.ckpt", tr_log;
    std::optional<std::string> tr_fusion, tr_combine, tr_attention;
    std::optional<std::int64_t> tr_channels, tr_iterations;
    std::optional<std::uint64_t> tr_seed;
    tr->add_option("--config", tr_config, "Config JSON (defaults when omitted)");
    tr->add_option("--fusion", tr_fusion, "plain, conv, topdown, unilstm, scarf-noatt or scarf");
    tr->add_option("--channels", tr_channels, "Fusion channel dimension d");
    tr->add_option("--combine", tr_combine, "concat or add");
    tr->add_option("--attention", tr_attention, "on or off")->check(CLI::IsMember({"on", "off"}));
    tr->add_option("--iterations", tr_iterations, "Training iterations");
    tr->add_option("--seed", tr_seed, "Training seed");
    tr->add_option("--out", tr_out, "Checkpoint path");
    tr->add_option("--log", tr_log, "Also write the metrics log to this file");

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset directory");
    std::string ev_ckpt, ev_data, ev_out, ev_dets;
    ev->add_option("--ckpt", ev_ckpt, "Checkpoint")->required();
    ev->add_option("--data", ev_data, "Dataset directory")->required();
    ev->add_option("--out", ev_out, "Report JSON")->required();
    ev->add_option("--detections", ev_dets, "Optional JSON-lines detection dump");

    // ablate
    auto* ab = app.add_subcommand("ablate", "Compare fusion strategies over several seeds");
    std::string ab_config, ab_out;
    int ab_seeds = 1;
    bool ab_grid = false;
    ab->add_option("--config", ab_config, "Base config JSON");
    ab->add_option("--seeds", ab_seeds, "Seeds per row")->check(CLI::PositiveNumber);
    ab->add_option("--out", ab_out, "Table JSON")->required();
    ab->add_flag("--grid", ab_grid, "Add the channel dimension x combine mode grid");

    // viz
    auto* vz = app.add_subcommand("viz", "Write the activation heatmap of one level");
    std::string vz_ckpt, vz_image, vz_stage = "scarf", vz_out;
    int vz_level = 0;
    vz->add_option("--ckpt", vz_ckpt, "Checkpoint")->required();
    vz->add_option("--image", vz_image, "PPM/PGM image")->required();
    vz->add_option("--level", vz_level, "Pyramid level (0 = largest map)")->required();
    vz->add_option("--stage", vz_stage, "pyramid or scarf")->check(CLI::IsMember({"pyramid", "scarf"}));
    vz->add_option("--out", vz_out, "Output PGM")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            write_dataset(gen_out, gen_count, gen_seed, parse_difficulty(gen_difficulty));
            std::cerr << "wrote " << gen_count << " scenes to " << gen_out << '\n';
        } else if (tr->parsed()) {
            TrainConfig cfg = tr_config.empty() ? TrainConfig{} : load_config(tr_config);
            if (tr_fusion) cfg.fusion = parse_fusion_kind(*tr_fusion);
            if (tr_channels) cfg.d = *tr_channels;
            if (tr_combine) cfg.combine = parse_combine_mode(*tr_combine);
            if (tr_attention) cfg.attention = *tr_attention == "on";
            if (tr_iterations) cfg.iterations = *tr_iterations;
            if (tr_seed) cfg.seed = *tr_seed;
            std::ofstream log_file;
            if (!tr_log.empty()) log_file.open(tr_log);
            struct Tee : std::streambuf {
                std::streambuf *a, *b;
                int overflow(int c) override {
                    if (c == EOF) return 0;
                    a->sputc(static_cast<char>(c));
                    if (b) b->sputc(static_cast<char>(c));
                    return c;
                }
                int sync() override { return a->pubsync() | (b ? b->pubsync() : 0); }
            } tee;
            tee.a = std::cout.rdbuf();
            tee.b = log_file.is_open() ? log_file.rdbuf() : nullptr;
            std::ostream log(&tee);
            const TrainResult r = train(cfg, &log);
            save_checkpoint(r.checkpoint, tr_out);
            std::cerr << "final mAP " << r.final_map << ", checkpoint " << tr_out << '\n';
        } else if (ev->parsed()) {
            const Checkpoint ckpt = load_checkpoint(ev_ckpt);
            const EvalResult r = evaluate(ckpt, load_dataset(ev_data));
            auto j = report_json(r.report);
            j["num_images"] = r.detections.size();
            write_json(ev_out, j);
            if (!ev_dets.empty()) {
                std::ofstream d(ev_dets);
                for (std::size_t i = 0; i < r.detections.size(); ++i) {
                    write_detections_jsonl(d, static_cast<std::int64_t>(i), r.detections[i]);
                }
            }
            std::cout << "mAP@0.5 " << r.report.map << '\n';
        } else if (ab->parsed()) {
            const TrainConfig cfg = ab_config.empty() ? TrainConfig{} : load_config(ab_config);
            AblationOptions opts;
            opts.grid = ab_grid;
            const AblationTable table = ablate(cfg, ab_seeds, opts, &std::cerr);
            write_json(ab_out, to_json(table));
            std::cout << format_table(table);
        } else if (vz->parsed()) {
            const DetectorModel model = DetectorModel::from_checkpoint(load_checkpoint(vz_ckpt));
            const Tensor image = read_pnm(vz_image);
            const auto stage = parse_heatmap_stage(vz_stage);
            const Tensor fmap = heatmap_features(model, image, vz_level, stage);
            const auto channel = select_channel(fmap);
            write_pgm(vz_out, channel_heatmap(fmap, channel));
            std::cout << "level " << vz_level << " stage " << vz_stage << " channel " << channel << " size " << fmap.dim(2)
                      << "x" << fmap.dim(1) << '\n';
        }
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
