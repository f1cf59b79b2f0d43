// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

namespace scarf {
inline namespace SCARF_PRECISION_NS {

namespace fs = std::filesystem;
using nlohmann::json;

int class_index(std::string_view name) {
    for (int c = 0; c < kNumClasses; ++c) {
        if (kClassNames[static_cast<std::size_t>(c)] == name) return c;
    }
    throw ArgumentError("unknown object class '" + std::string(name) + "'");
}

std::string_view to_string(Difficulty d) { return d == Difficulty::Easy ? "easy" : "hard"; }

Difficulty parse_difficulty(std::string_view s) {
    if (s == "easy") return Difficulty::Easy;
    if (s == "hard") return Difficulty::Hard;
    throw ConfigError("unknown difficulty '" + std::string(s) + "' (expected easy or hard)");
}

SceneRanges scene_ranges(Difficulty d) {
    if (d == Difficulty::Easy) return {1, 2, 0, 0, 16, 32};
    return {2, 4, 6, 12, 16, 32};
}

namespace {

constexpr double kNoiseSigma = 0.05;
constexpr int kSupersample = 4;

// Portable draws on top of mt19937_64 (whose output sequence is fixed by the standard).
class SceneRng {
public:
    explicit SceneRng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2 * std::numbers::pi * u2);
        has_spare_ = true;
        return r * std::cos(2 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0;
};

bool inside(int label, const Box& b, double x, double y) {
    if (x < b.x1 || x > b.x2 || y < b.y1 || y > b.y2) return false;
    switch (label) {
        case 0:
            return true;
        case 1: {
            const double cx = (b.x1 + b.x2) / 2, cy = (b.y1 + b.y2) / 2, r = b.width() / 2;
            return (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
        }
        default: {
            // Apex at top centre, base along the bottom edge.
            const double half = b.width() / 2, cx = b.x1 + half;
            const double t = (y - b.y1) / b.height();
            return std::abs(x - cx) <= half * t;
        }
    }
}

double quantise(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

SceneSample gen_scene(std::uint64_t seed, Difficulty difficulty, std::int64_t size) {
    if (size < 16) throw ArgumentError("gen_scene: canvas must be at least 16 pixels");
    SceneRng rng(seed);
    const SceneRanges r = scene_ranges(difficulty);
    const double canvas = static_cast<double>(size);
    const double unit = canvas / 64.0;

    SceneSample s;
    s.seed = seed;
    s.difficulty = difficulty;

    const int count = rng.integer(r.min_objects, r.max_objects);
    std::vector<std::array<double, 3>> colors;
    for (int i = 0; i < count; ++i) {
        const bool small = difficulty == Difficulty::Hard && (i == 0 || rng.uniform() < 0.5);
        const double side = small ? rng.uniform(r.small_min, r.small_max) * unit : rng.uniform(r.large_min, r.large_max) * unit;
        const int label = rng.integer(0, kNumClasses - 1);
        std::array<double, 3> color{};
        for (auto& c : color) c = rng.uniform(0.45, 1.0);
        bool placed = false;
        Box box;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            const double x = rng.uniform(0, canvas - side), y = rng.uniform(0, canvas - side);
            box = {x, y, x + side, y + side};
            placed = std::none_of(s.gts.begin(), s.gts.end(), [&](const GroundTruth& g) {
                const Box& o = g.box;
                return box.x1 < o.x2 + 1 && o.x1 < box.x2 + 1 && box.y1 < o.y2 + 1 && o.y1 < box.y2 + 1;
            });
        }
        if (!placed) continue;
        s.gts.push_back({label, box});
        colors.push_back(color);
    }

    std::array<double, 3> background{};
    for (auto& c : background) c = rng.uniform(0.0, 0.3);
    Tensor image({3, size, size});
    auto px = image.mutable_data();
    const auto plane = size * size;
    for (std::int64_t y = 0; y < size; ++y) {
        for (std::int64_t x = 0; x < size; ++x) {
            std::array<double, 3> acc{};
            for (int sy = 0; sy < kSupersample; ++sy) {
                for (int sx = 0; sx < kSupersample; ++sx) {
                    const double fx = static_cast<double>(x) + (sx + 0.5) / kSupersample;
                    const double fy = static_cast<double>(y) + (sy + 0.5) / kSupersample;
                    const std::array<double, 3>* c = &background;
                    for (std::size_t o = 0; o < s.gts.size(); ++o) {
                        if (inside(s.gts[o].label, s.gts[o].box, fx, fy)) c = &colors[o];
                    }
                    for (int ch = 0; ch < 3; ++ch) acc[static_cast<std::size_t>(ch)] += (*c)[static_cast<std::size_t>(ch)];
                }
            }
            for (int ch = 0; ch < 3; ++ch) {
                const double v = acc[static_cast<std::size_t>(ch)] / (kSupersample * kSupersample) + kNoiseSigma * rng.normal();
                px[static_cast<std::size_t>(ch * plane + y * size + x)] = static_cast<Real>(quantise(v));
            }
        }
    }
    s.image = image;
    return s;
}

std::uint64_t scene_seed(std::uint64_t data_seed, int split, std::int64_t index) {
    std::uint64_t x = data_seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(split) * 0xD1B54A32D192ED03ull +
                      static_cast<std::uint64_t>(index);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::vector<SceneSample> gen_dataset(std::uint64_t data_seed, int split, std::int64_t count, Difficulty difficulty,
                                     std::int64_t size) {
    std::vector<SceneSample> out;
    out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
    for (std::int64_t i = 0; i < count; ++i) out.push_back(gen_scene(scene_seed(data_seed, split, i), difficulty, size));
    return out;
}

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct PnmHeader {
    std::string magic;
    std::int64_t width = 0, height = 0, maxval = 0;
    std::size_t offset = 0;
};

PnmHeader parse_pnm_header(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    PnmHeader h;
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(static_cast<char>(bytes[pos++]));
        return t;
    };
    try {
        h.magic = token();
        h.width = std::stoll(token());
        h.height = std::stoll(token());
        h.maxval = std::stoll(token());
    } catch (const std::logic_error&) {
        throw std::runtime_error("malformed image header in " + path.string());
    }
    ++pos;  // single whitespace before the raster
    h.offset = pos;
    if ((h.magic != "P5" && h.magic != "P6") || h.width < 1 || h.height < 1 || h.maxval != 255) {
        throw std::runtime_error("unsupported image format in " + path.string() + " (need binary 8-bit P5/P6)");
    }
    return h;
}

}  // namespace

void write_ppm(const fs::path& path, const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3) throw ShapeError("write_ppm expects [3, H, W], got " + shape_str(image.dims()));
    const auto H = image.dim(1), W = image.dim(2);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P6\n" << W << ' ' << H << "\n255\n";
    auto v = image.data();
    for (std::int64_t y = 0; y < H; ++y) {
        for (std::int64_t x = 0; x < W; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double p = std::clamp(static_cast<double>(v[static_cast<std::size_t>((c * H + y) * W + x)]), 0.0, 1.0);
                out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(p * 255.0))));
            }
        }
    }
}

Tensor read_pnm(const fs::path& path) {
    const auto bytes = read_file(path);
    const PnmHeader h = parse_pnm_header(bytes, path);
    const int channels = h.magic == "P6" ? 3 : 1;
    const auto n = static_cast<std::size_t>(h.width * h.height * channels);
    if (bytes.size() < h.offset + n) throw std::runtime_error("truncated image " + path.string());
    Tensor image({3, h.height, h.width});
    auto px = image.mutable_data();
    for (std::int64_t y = 0; y < h.height; ++y) {
        for (std::int64_t x = 0; x < h.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                const int src = channels == 3 ? c : 0;
                const auto byte = bytes[h.offset + static_cast<std::size_t>((y * h.width + x) * channels + src)];
                px[static_cast<std::size_t>((c * h.height + y) * h.width + x)] = static_cast<Real>(byte / 255.0);
            }
        }
    }
    return image;
}

void write_pgm(const fs::path& path, const GrayImage& image) {
    if (static_cast<std::int64_t>(image.pixels.size()) != image.width * image.height) {
        throw ShapeError("grey image pixel count does not match its size");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
}

GrayImage read_pgm(const fs::path& path) {
    const auto bytes = read_file(path);
    const PnmHeader h = parse_pnm_header(bytes, path);
    if (h.magic != "P5") throw std::runtime_error(path.string() + " is not a binary PGM");
    const auto n = static_cast<std::size_t>(h.width * h.height);
    if (bytes.size() < h.offset + n) throw std::runtime_error("truncated image " + path.string());
    GrayImage g{h.width, h.height, {}};
    g.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.offset), bytes.begin() + static_cast<std::ptrdiff_t>(h.offset + n));
    return g;
}

namespace {

std::string scene_stem(std::int64_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%05lld", static_cast<long long>(index));
    return buf;
}

}  // namespace

void save_scene(const SceneSample& scene, const fs::path& dir, std::int64_t index) {
    fs::create_directories(dir);
    const std::string stem = scene_stem(index);
    write_ppm(dir / (stem + ".ppm"), scene.image);
    json objects = json::array();
    for (const auto& g : scene.gts) {
        objects.push_back({{"class", kClassNames[static_cast<std::size_t>(g.label)]},
                           {"box", {g.box.x1, g.box.y1, g.box.x2, g.box.y2}}});
    }
    const json j = {{"image", stem + ".ppm"},
                    {"seed", scene.seed},
                    {"difficulty", to_string(scene.difficulty)},
                    {"width", scene.image.dim(2)},
                    {"height", scene.image.dim(1)},
                    {"objects", objects}};
    std::ofstream out(dir / (stem + ".json"));
    if (!out) throw std::runtime_error("cannot write scene sidecar in " + dir.string());
    out << j.dump(2) << '\n';
}

SceneSample load_scene(const fs::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("cannot open " + json_path.string());
    SceneSample s;
    try {
        const json j = json::parse(in);
        s.seed = j.value("seed", std::uint64_t{0});
        s.difficulty = parse_difficulty(j.value("difficulty", std::string("easy")));
        for (const auto& o : j.at("objects")) {
            const auto& b = o.at("box");
            s.gts.push_back({class_index(o.at("class").get<std::string>()),
                             {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(), b.at(3).get<double>()}});
        }
        s.image = read_pnm(json_path.parent_path() / j.at("image").get<std::string>());
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed scene sidecar " + json_path.string() + ": " + e.what());
    }
    return s;
}

void write_dataset(const fs::path& dir, std::int64_t count, std::uint64_t seed, Difficulty difficulty) {
    if (count < 1) throw ArgumentError("dataset count must be positive");
    for (std::int64_t i = 0; i < count; ++i) save_scene(gen_scene(scene_seed(seed, 0, i), difficulty), dir, i);
}

std::vector<SceneSample> load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("dataset directory " + dir.string() + " does not exist");
    std::vector<fs::path> sidecars;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".json") sidecars.push_back(e.path());
    }
    std::sort(sidecars.begin(), sidecars.end());
    if (sidecars.empty()) throw std::runtime_error("dataset directory " + dir.string() + " holds no scenes");
    std::vector<SceneSample> out;
    for (const auto& p : sidecars) out.push_back(load_scene(p));
    return out;
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
