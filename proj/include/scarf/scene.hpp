// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural detection scenes: squares, circles and triangles on a noisy
// background, rendered with 4x4 supersampling.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scarf/detector.hpp"
#include "scarf/tensor.hpp"

namespace scarf {
inline namespace SCARF_PRECISION_NS {

inline constexpr int kNumClasses = 3;
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {"square", "circle", "triangle"};

int class_index(std::string_view name);

enum class Difficulty { Easy, Hard };
std::string_view to_string(Difficulty d);
Difficulty parse_difficulty(std::string_view s);

/// Object count and size ranges per difficulty (sizes are box sides in pixels
/// on a 64x64 canvas).
struct SceneRanges {
    int min_objects, max_objects;
    double small_min, small_max;  // used by hard scenes only
    double large_min, large_max;
};
SceneRanges scene_ranges(Difficulty d);

struct SceneSample {
    Tensor image;  // [3, H, W], values in [0, 1], quantised to 8 bits
    std::vector<GroundTruth> gts;
    std::uint64_t seed = 0;
    Difficulty difficulty = Difficulty::Easy;
};

/// Deterministic in (seed, difficulty, size). Easy scenes hold 1-2 large
/// objects; hard scenes hold 2-4 objects, at least one of them small.
SceneSample gen_scene(std::uint64_t seed, Difficulty difficulty, std::int64_t size = 64);

/// Seed of scene `index` in split `split` of a dataset seeded with `data_seed`.
std::uint64_t scene_seed(std::uint64_t data_seed, int split, std::int64_t index);

std::vector<SceneSample> gen_dataset(std::uint64_t data_seed, int split, std::int64_t count, Difficulty difficulty,
                                     std::int64_t size = 64);

// Image files.

struct GrayImage {
    std::int64_t width = 0, height = 0;
    std::vector<std::uint8_t> pixels;  // row-major
};

void write_ppm(const std::filesystem::path& path, const Tensor& image);
/// Reads a binary P6 (colour) or P5 (grey, replicated to 3 channels) file into [3, H, W] in [0, 1].
Tensor read_pnm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
GrayImage read_pgm(const std::filesystem::path& path);

// Dataset directories: scene_NNNNN.ppm plus a scene_NNNNN.json sidecar.

void save_scene(const SceneSample& scene, const std::filesystem::path& dir, std::int64_t index);
SceneSample load_scene(const std::filesystem::path& json_path);
void write_dataset(const std::filesystem::path& dir, std::int64_t count, std::uint64_t seed, Difficulty difficulty);
/// Scenes of a directory ordered by file name; throws when none are present.
std::vector<SceneSample> load_dataset(const std::filesystem::path& dir);

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
