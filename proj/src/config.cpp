// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include "scarf/config.hpp"

#include <fstream>
#include <set>

namespace scarf {
inline namespace SCARF_PRECISION_NS {

using nlohmann::json;
using nlohmann::ordered_json;

PyramidSpec TrainConfig::pyramid() const {
    PyramidSpec s;
    s.k = k;
    s.stage_channels = stage_channels;
    s.input_h = s.input_w = input_size;
    return s;
}

FusionConfig TrainConfig::fusion_config() const {
    FusionConfig f;
    f.kind = fusion;
    f.d = d;
    f.mode = combine;
    f.attention = attention;
    f.reduction = reduction;
    f.d_out = d_out;
    return f;
}

AnchorConfig TrainConfig::anchor_config() const {
    AnchorConfig a;
    a.scale = anchor_scale;
    return a;
}

SgdConfig TrainConfig::sgd() const {
    SgdConfig s;
    s.lr_schedule = lr_schedule.empty() ? SgdConfig::default_schedule(iterations) : lr_schedule;
    s.momentum = momentum;
    s.weight_decay = weight_decay;
    s.batch_size = batch_size;
    return s;
}

void TrainConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError("invalid config: " + what);
    };
    require(iterations >= 1, "iterations must be >= 1");
    require(eval_interval >= 0, "eval_interval must be >= 0");
    require(d >= 1, "d must be >= 1");
    require(d_out >= 0, "d_out must be 'same' or a positive integer");
    require(reduction >= 1, "reduction must be >= 1");
    require(anchor_scale > 0, "anchor_scale must be positive");
    require(train_count >= 1 || !train_data.empty(), "train_count must be >= 1");
    require(eval_count >= 1 || !eval_data.empty(), "eval_count must be >= 1");
    if (combine == CombineMode::ElementAdd && d_out > 0 && fusion != FusionKind::Plain) {
        for (auto c : pyramid().level_channels()) {
            require(c == d_out, "combine 'add' needs d_out equal to every level's channels (or 'same')");
        }
    }
    try {
        pyramid().validate();
        sgd().validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
}

bool TrainConfig::operator==(const TrainConfig& other) const { return to_json(*this) == to_json(other); }

ordered_json to_json(const TrainConfig& c) {
    ordered_json sched = ordered_json::array();
    for (const auto& p : c.lr_schedule) sched.push_back({p.until, p.lr});
    ordered_json j;
    j["fusion"] = std::string(to_string(c.fusion));
    j["k"] = c.k;
    j["d"] = c.d;
    if (c.d_out == 0) {
        j["d_out"] = "same";
    } else {
        j["d_out"] = c.d_out;
    }
    j["combine"] = std::string(to_string(c.combine));
    j["attention"] = c.attention;
    j["reduction"] = c.reduction;
    j["stage_channels"] = c.stage_channels;
    j["input_size"] = c.input_size;
    j["anchor_scale"] = c.anchor_scale;
    j["lr_schedule"] = sched;
    j["momentum"] = c.momentum;
    j["weight_decay"] = c.weight_decay;
    j["batch_size"] = c.batch_size;
    j["iterations"] = c.iterations;
    j["seed"] = c.seed;
    j["data_seed"] = c.data_seed;
    j["eval_interval"] = c.eval_interval;
    j["difficulty"] = std::string(to_string(c.difficulty));
    j["train_count"] = c.train_count;
    j["eval_count"] = c.eval_count;
    j["train_data"] = c.train_data;
    j["eval_data"] = c.eval_data;
    return j;
}

namespace {

template <typename T>
T get_field(const json& j, const std::string& key) {
    const json& v = j.at(key);
    bool ok = false;
    if constexpr (std::is_same_v<T, bool>) {
        ok = v.is_boolean();
    } else if constexpr (std::is_integral_v<T>) {
        ok = v.is_number_integer() && (std::is_signed_v<T> || v.is_number_unsigned() || v.get<std::int64_t>() >= 0);
    } else if constexpr (std::is_floating_point_v<T>) {
        ok = v.is_number();
    } else {
        ok = v.is_string();
    }
    if (!ok) throw ConfigError("config field '" + key + "' has the wrong type: " + v.dump());
    return v.get<T>();
}

}  // namespace

TrainConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    TrainConfig c;
    const std::set<std::string> known = [] {
        std::set<std::string> keys;
        const ordered_json defaults = to_json(TrainConfig{});
        for (const auto& [key, value] : defaults.items()) keys.insert(key);
        return keys;
    }();
    for (const auto& [key, value] : j.items()) {
        if (known.count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
    }
    auto has = [&](const char* key) { return j.contains(key); };
    if (has("fusion")) c.fusion = parse_fusion_kind(get_field<std::string>(j, "fusion"));
    if (has("k")) c.k = get_field<int>(j, "k");
    if (has("d")) c.d = get_field<std::int64_t>(j, "d");
    if (has("d_out")) {
        const json& v = j.at("d_out");
        if (v.is_string() && v.get<std::string>() == "same") {
            c.d_out = 0;
        } else if (v.is_number_integer() && v.get<std::int64_t>() > 0) {
            c.d_out = v.get<std::int64_t>();
        } else {
            throw ConfigError("config field 'd_out' must be \"same\" or a positive integer");
        }
    }
    if (has("combine")) c.combine = parse_combine_mode(get_field<std::string>(j, "combine"));
    if (has("attention")) c.attention = get_field<bool>(j, "attention");
    if (has("reduction")) c.reduction = get_field<std::int64_t>(j, "reduction");
    if (has("stage_channels")) {
        const json& v = j.at("stage_channels");
        if (!v.is_array()) throw ConfigError("config field 'stage_channels' must be an array");
        c.stage_channels.clear();
        for (const auto& e : v) {
            if (!e.is_number_integer()) throw ConfigError("config field 'stage_channels' must hold integers");
            c.stage_channels.push_back(e.get<std::int64_t>());
        }
    }
    if (has("input_size")) c.input_size = get_field<std::int64_t>(j, "input_size");
    if (has("anchor_scale")) c.anchor_scale = get_field<double>(j, "anchor_scale");
    if (has("lr_schedule")) {
        const json& v = j.at("lr_schedule");
        if (!v.is_array()) throw ConfigError("config field 'lr_schedule' must be an array of [until, lr] pairs");
        for (const auto& e : v) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number()) {
                throw ConfigError("config field 'lr_schedule' must be an array of [until, lr] pairs");
            }
            c.lr_schedule.push_back({e[0].get<std::int64_t>(), e[1].get<double>()});
        }
    }
    if (has("momentum")) c.momentum = get_field<double>(j, "momentum");
    if (has("weight_decay")) c.weight_decay = get_field<double>(j, "weight_decay");
    if (has("batch_size")) c.batch_size = get_field<int>(j, "batch_size");
    if (has("iterations")) c.iterations = get_field<std::int64_t>(j, "iterations");
    if (has("seed")) c.seed = get_field<std::uint64_t>(j, "seed");
    if (has("data_seed")) c.data_seed = get_field<std::uint64_t>(j, "data_seed");
    if (has("eval_interval")) c.eval_interval = get_field<std::int64_t>(j, "eval_interval");
    if (has("difficulty")) c.difficulty = parse_difficulty(get_field<std::string>(j, "difficulty"));
    if (has("train_count")) c.train_count = get_field<std::int64_t>(j, "train_count");
    if (has("eval_count")) c.eval_count = get_field<std::int64_t>(j, "eval_count");
    if (has("train_data")) c.train_data = get_field<std::string>(j, "train_data");
    if (has("eval_data")) c.eval_data = get_field<std::string>(j, "eval_data");
    return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const TrainConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config " + path.string());
    out << to_json(cfg).dump(2) << '\n';
}

}  // namespace SCARF_PRECISION_NS
}  // namespace scarf
