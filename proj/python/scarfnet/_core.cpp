// Copyright 2026 The Scarf Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "scarf/checkpoint.hpp"
#include "scarf/heatmap.hpp"
#include "scarf/model.hpp"
#include "scarf/ops.hpp"
#include "scarf/train.hpp"

namespace py = pybind11;
using namespace scarf;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    Shape dims(a.shape(), a.shape() + a.ndim());
    return Tensor(dims, std::vector<Real>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    Array a(std::vector<py::ssize_t>(t.dims().begin(), t.dims().end()));
    std::copy(t.data().begin(), t.data().end(), a.mutable_data());
    return a;
}

py::tuple box_tuple(const Box& b) { return py::make_tuple(b.x1, b.y1, b.x2, b.y2); }

Box to_box(const std::array<double, 4>& b) { return {b[0], b[1], b[2], b[3]}; }

TrainConfig config_from(const py::object& obj) {
    if (obj.is_none()) return {};
    const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
    return config_from_json(nlohmann::json::parse(text));
}

py::object config_to(const TrainConfig& cfg) { return py::module_::import("json").attr("loads")(to_json(cfg).dump()); }

py::list detections_list(const std::vector<Detection>& dets) {
    py::list out;
    for (const auto& d : dets) {
        py::dict e;
        e["class"] = d.label;
        e["name"] = std::string(kClassNames[static_cast<std::size_t>(d.label)]);
        e["score"] = d.score;
        e["box"] = box_tuple(d.box);
        out.append(e);
    }
    return out;
}

py::bytes checkpoint_bytes(const Checkpoint& c) {
    std::ostringstream os(std::ios::binary);
    write_checkpoint(os, c);
    return py::bytes(os.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multiscale feature-fusion detector: training, evaluation and visualisation";

    py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);

    m.attr("CLASS_NAMES") = py::cast(std::vector<std::string>(kClassNames.begin(), kClassNames.end()));

    m.def("default_config", [] { return config_to(TrainConfig{}); }, "Default training configuration as a dict.");
    m.def("validate_config", [](const py::object& cfg) { return config_to(config_from(cfg)); }, py::arg("config"),
          "Parses, validates and returns the normalised configuration.");

    m.def(
        "gen_scene",
        [](std::uint64_t seed, const std::string& difficulty, std::int64_t size) {
            const SceneSample s = gen_scene(seed, parse_difficulty(difficulty), size);
            py::list boxes;
            for (const auto& g : s.gts) boxes.append(py::make_tuple(g.label, box_tuple(g.box)));
            return py::make_tuple(to_array(s.image), boxes);
        },
        py::arg("seed"), py::arg("difficulty") = "hard", py::arg("size") = 64,
        "Renders a scene: (image [3, H, W] float32, [(class, (x1, y1, x2, y2)), ...]).");

    m.def("iou", [](const std::array<double, 4>& a, const std::array<double, 4>& b) { return iou(to_box(a), to_box(b)); });
    m.def(
        "nms",
        [](const std::vector<std::array<double, 4>>& boxes, const std::vector<double>& scores, double iou_thr) {
            if (boxes.size() != scores.size()) throw ArgumentError("nms: boxes and scores differ in length");
            std::vector<ScoredBox> in;
            for (std::size_t i = 0; i < boxes.size(); ++i) in.push_back({to_box(boxes[i]), scores[i], static_cast<std::int64_t>(i)});
            std::vector<std::int64_t> kept;
            for (const auto& k : nms(in, iou_thr)) kept.push_back(k.index);
            return kept;
        },
        py::arg("boxes"), py::arg("scores"), py::arg("iou_thr") = 0.45, "Indices kept by greedy NMS, best first.");
    m.def("average_precision", &average_precision, py::arg("is_tp"), py::arg("num_gt"));

    m.def("bilinear_resize", [](const Array& x, std::int64_t h, std::int64_t w) { return to_array(bilinear_resize(to_tensor(x), h, w)); });
    m.def("conv2d", [](const Array& x, const Array& w, const Array& b, int stride, int pad) {
        return to_array(conv2d(to_tensor(x), to_tensor(w), to_tensor(b), stride, pad));
    });
    m.def("select_channel", [](const Array& f) { return select_channel(to_tensor(f)); });
    m.def("heatmap", [](const Array& f) {
        const GrayImage g = heatmap(to_tensor(f));
        py::array_t<std::uint8_t> out({g.height, g.width});
        std::copy(g.pixels.begin(), g.pixels.end(), out.mutable_data());
        return out;
    });

    py::class_<DetectorModel>(m, "Detector")
        .def(py::init([](const py::object& cfg) { return DetectorModel(config_from(cfg)); }), py::arg("config") = py::none())
        .def_static("load", [](const std::filesystem::path& p) { return DetectorModel::from_checkpoint(load_checkpoint(p)); })
        .def_property_readonly("config", [](const DetectorModel& d) { return config_to(d.config()); })
        .def_property_readonly("num_parameters", [](const DetectorModel& d) { return param_count(d.store()); })
        .def("parameter_names", [](const DetectorModel& d) { return d.store().names(); })
        .def("features",
             [](const DetectorModel& d, const Array& image) {
                 const auto out = d.forward(to_tensor(image));
                 py::list pyramid, fused;
                 for (const auto& t : out.pyramid.levels) pyramid.append(to_array(t));
                 for (const auto& t : out.fused.levels) fused.append(to_array(t));
                 return py::make_tuple(pyramid, fused);
             })
        .def(
            "detect",
            [](const DetectorModel& d, const Array& image, double conf_thr, double iou_thr, std::size_t top_k) {
                return detections_list(d.detect(to_tensor(image), NmsParams{conf_thr, iou_thr, top_k}));
            },
            py::arg("image"), py::arg("conf_thr") = 0.05, py::arg("iou_thr") = 0.45, py::arg("top_k") = 100)
        .def(
            "heatmap",
            [](const DetectorModel& d, const Array& image, int level, const std::string& stage) {
                const GrayImage g = visualize_heatmap(d, to_tensor(image), level, parse_heatmap_stage(stage));
                py::array_t<std::uint8_t> out({g.height, g.width});
                std::copy(g.pixels.begin(), g.pixels.end(), out.mutable_data());
                return out;
            },
            py::arg("image"), py::arg("level"), py::arg("stage") = "scarf")
        .def("save", [](const DetectorModel& d, const std::filesystem::path& p, std::int64_t iteration) {
            save_checkpoint(Checkpoint::from_store(d.store(), d.config(), iteration), p);
        }, py::arg("path"), py::arg("iteration") = 0)
        .def("checkpoint_bytes", [](const DetectorModel& d) { return checkpoint_bytes(Checkpoint::from_store(d.store(), d.config(), 0)); })
        .def("evaluate", [](const DetectorModel& d, const std::string& data_dir) {
            return py::module_::import("json").attr("loads")(report_json(evaluate(d, load_dataset(data_dir)).report).dump());
        });

    m.def(
        "train",
        [](const py::object& cfg, const py::object& checkpoint) {
            const TrainConfig c = config_from(cfg);
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(c);
            }
            if (!checkpoint.is_none()) save_checkpoint(r.checkpoint, checkpoint.cast<std::filesystem::path>());
            py::list log;
            for (const auto& rec : r.log) log.append(py::module_::import("json").attr("loads")(to_json_line(rec)));
            return py::make_tuple(DetectorModel::from_checkpoint(r.checkpoint), log);
        },
        py::arg("config") = py::none(), py::arg("checkpoint") = py::none(),
        "Trains a detector; returns (Detector, log records).");
}
