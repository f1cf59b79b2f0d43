// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <set>

#include "criteria.hpp"

namespace acc = scarf::acceptance;

int main(int argc, char** argv) {
    CLI::App app("scarf acceptance suite");
    std::string workdir = "acceptance_work", cli;
    std::vector<int> only;
    app.add_option("--workdir", workdir, "Scratch directory for checkpoints, logs and tables");
    app.add_option("--cli", cli, "Path of the scarf executable; enables the CLI round trips");
    app.add_option("--only", only, "Run only these criteria (1-8)");
    CLI11_PARSE(app, argc, argv);

    acc::Context ctx{workdir, cli};
    std::filesystem::create_directories(ctx.workdir);

    struct Criterion {
        int id;
        const char* name;
        std::function<acc::Verdict(const acc::Context&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "gradient correctness", acc::gradient_correctness},
        {2, "lstm and arnet fixtures", acc::lstm_and_arnet_fixtures},
        {3, "parameter sharing", acc::parameter_sharing},
        {4, "detection metrology", acc::detection_metrology},
        {5, "ablation trend (hard data, 5 seeds, 2000 iterations)", acc::ablation_trend},
        {6, "channel width x combine grid", acc::width_and_combine_grid},
        {7, "heatmap channel selection", acc::heatmap_channel_selection},
        {8, "determinism and checkpoint i/o", acc::determinism_and_io},
    };
    const std::set<int> selected(only.begin(), only.end());
    int failed = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && selected.count(c.id) == 0) continue;
        const auto start = std::chrono::steady_clock::now();
        acc::Verdict v;
        try {
            v = c.run(ctx);
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %d %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), seconds);
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}
