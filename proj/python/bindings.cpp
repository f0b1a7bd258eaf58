#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sanet/checkpoint.hpp"
#include "sanet/dataset.hpp"
#include "sanet/events.hpp"
#include "sanet/lanes.hpp"
#include "sanet/metrics.hpp"
#include "sanet/training.hpp"

namespace py = pybind11;
using namespace sanet;

namespace {

Tensor tensor_from_array(const py::array_t<double>& array) {
  const py::buffer_info info = array.request();
  std::vector<int> shape;
  for (auto extent : info.shape) shape.push_back(static_cast<int>(extent));
  auto contiguous = py::array_t<double, py::array::c_style | py::array::forcecast>(array);
  const double* data = contiguous.data();
  return Tensor::from_data(
      shape, std::vector<double>(data, data + contiguous.size()));
}

py::array_t<double> array_from_tensor(const Tensor& tensor) {
  std::vector<py::ssize_t> shape(tensor.shape().begin(), tensor.shape().end());
  py::array_t<double> array(shape);
  std::copy(tensor.data(), tensor.data() + tensor.numel(),
            array.mutable_data());
  return array;
}

ClassMask mask_from_array(const py::array_t<uint8_t>& array) {
  if (array.ndim() != 2) throw DimensionError("mask must be 2-D");
  auto contiguous =
      py::array_t<uint8_t, py::array::c_style | py::array::forcecast>(array);
  ClassMask mask(static_cast<int>(array.shape(0)),
                 static_cast<int>(array.shape(1)));
  std::copy(contiguous.data(), contiguous.data() + contiguous.size(),
            mask.values.begin());
  return mask;
}

py::array_t<uint8_t> array_from_mask(const ClassMask& mask) {
  py::array_t<uint8_t> array({mask.height, mask.width});
  std::copy(mask.values.begin(), mask.values.end(), array.mutable_data());
  return array;
}

SliceKernel kernel_from_array(const std::string& token,
                              const py::array_t<double>& weights) {
  const Direction dir = parse_direction(token);
  return make_slice_kernel(family_of(dir), tensor_from_array(weights));
}

py::dict counts_to_dict(const ConfusionCounts& counts) {
  py::dict out;
  out["n_classes"] = counts.n_classes;
  out["tp"] = counts.tp;
  out["fp"] = counts.fp;
  out["fn"] = counts.fn;
  const auto f1 = f1_per_class(counts);
  const auto iou = iou_per_class(counts);
  out["f1"] = f1;
  out["iou"] = iou;
  const auto [mean_f1, mean_iou] = mean_metrics(counts);
  out["mean_f1"] = mean_f1;
  out["mean_iou"] = mean_iou;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Lane marker extraction for event-camera frames: slice "
            "convolutions, a small trainable network, event accumulation "
            "and synthetic scenes.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.attr("DIRECTIONS") = std::vector<std::string>{
      "vd", "vu", "hr", "hl", "mdd", "mdu", "cdd", "cdu"};

  m.def(
      "slice_conv",
      [](const py::array_t<double>& x, const py::array_t<double>& weights,
         const std::string& direction) {
        return array_from_tensor(directional_slice_conv(
            tensor_from_array(x), kernel_from_array(direction, weights),
            parse_direction(direction)));
      },
      py::arg("x"), py::arg("weights"), py::arg("direction"),
      "One directional slice-convolution pass over a CxHxW array.");

  m.def(
      "slice_conv_reference",
      [](const py::array_t<double>& x, const py::array_t<double>& weights,
         const std::string& direction) {
        return array_from_tensor(slice_conv_reference(
            tensor_from_array(x), kernel_from_array(direction, weights),
            parse_direction(direction)));
      },
      py::arg("x"), py::arg("weights"), py::arg("direction"),
      "Naive oracle implementation of slice_conv.");

  m.def(
      "msc_forward",
      [](const py::array_t<double>& x,
         const std::vector<std::pair<std::string, py::array_t<double>>>&
             kernels) {
        MscParams params;
        for (const auto& [token, weights] : kernels)
          params.stages.emplace_back(parse_direction(token),
                                     kernel_from_array(token, weights));
        return array_from_tensor(msc_forward(tensor_from_array(x), params));
      },
      py::arg("x"), py::arg("kernels"),
      "Applies (direction, weights) stages in series.");

  m.def(
      "shift_message",
      [](const py::array_t<double>& message, const std::string& direction) {
        return array_from_tensor(
            shift_message(tensor_from_array(message), parse_direction(direction)));
      },
      py::arg("message"), py::arg("direction"));

  m.def("poly_lr", &poly_lr, py::arg("initial_lr"), py::arg("current_iter"),
        py::arg("max_iter"), py::arg("power"));

  m.def(
      "confusion",
      [](const py::array_t<uint8_t>& pred, const py::array_t<uint8_t>& gt,
         int n_classes) {
        return counts_to_dict(
            confusion_counts(mask_from_array(pred), mask_from_array(gt), n_classes));
      },
      py::arg("pred"), py::arg("gt"), py::arg("n_classes") = 5,
      "One-vs-rest pixel counts plus per-class and mean F1/IoU.");

  m.def(
      "accumulate",
      [](const py::array_t<int64_t>& events, int width, int height,
         uint64_t dt_us) {
        if (events.ndim() != 2 || events.shape(1) != 4)
          throw DimensionError("events must be an (N, 4) array of t,x,y,p");
        EventStream stream;
        stream.width = static_cast<uint16_t>(width);
        stream.height = static_cast<uint16_t>(height);
        auto view = events.unchecked<2>();
        for (py::ssize_t i = 0; i < events.shape(0); ++i) {
          EventRecord rec;
          rec.t_us = static_cast<uint64_t>(view(i, 0));
          rec.x = static_cast<uint16_t>(view(i, 1));
          rec.y = static_cast<uint16_t>(view(i, 2));
          rec.p = static_cast<int8_t>(view(i, 3));
          if (rec.x >= stream.width || rec.y >= stream.height)
            throw DataError("event coordinate out of bounds");
          stream.events.push_back(rec);
        }
        std::vector<py::array_t<uint32_t>> frames;
        for (const auto& frame : sanet::accumulate(stream, dt_us)) {
          py::array_t<uint32_t> array({frame.height, frame.width});
          std::copy(frame.counts.begin(), frame.counts.end(),
                    array.mutable_data());
          frames.push_back(std::move(array));
        }
        return frames;
      },
      py::arg("events"), py::arg("width"), py::arg("height"),
      py::arg("dt_us") = 30000,
      "Counts events into half-open windows of dt_us microseconds.");

  m.def(
      "gen_scene",
      [](int size, int lanes, uint64_t seed, int occluders, double noise,
         double lane_width_px) {
        SceneConfig config;
        config.size = size;
        config.lanes = lanes;
        config.seed = seed;
        config.occluders = occluders;
        config.noise_density = noise;
        config.lane_width_px = lane_width_px;
        const Scene scene = gen_scene(config);
        py::array_t<uint8_t> image({scene.image.height, scene.image.width});
        std::copy(scene.image.pixels.begin(), scene.image.pixels.end(),
                  image.mutable_data());
        return py::make_tuple(image, array_from_mask(scene.mask));
      },
      py::arg("size") = 128, py::arg("lanes") = 4, py::arg("seed") = 0,
      py::arg("occluders") = 2, py::arg("noise") = 0.012,
      py::arg("lane_width_px") = 6.0,
      "Synthetic scene: (image, class mask), deterministic per seed.");

  m.def(
      "rasterize",
      [](const std::vector<std::pair<int, std::vector<std::array<double, 2>>>>&
             lanes,
         double width_px, int width, int height) {
        std::vector<LanePolyline> polylines;
        for (const auto& [cls, points] : lanes) {
          LanePolyline lane;
          lane.cls = cls;
          lane.points = points;
          polylines.push_back(std::move(lane));
        }
        return array_from_mask(
            sanet::rasterize(polylines, width_px, width, height).mask);
      },
      py::arg("lanes"), py::arg("width_px"), py::arg("width"),
      py::arg("height"),
      "Rasterizes [(class, [[x, y], ...]), ...] into a class mask.");

  py::class_<SanetParams>(m, "Model")
      .def_static(
          "create",
          [](uint64_t seed, int kernel_size,
             const std::vector<std::string>& directions) {
            SanetConfig config;
            config.msc_kernel_size = kernel_size;
            config.msc_directions.clear();
            for (const auto& token : directions)
              config.msc_directions.push_back(parse_direction(token));
            return init_sanet(config, seed);
          },
          py::arg("seed") = 0, py::arg("kernel_size") = 9,
          py::arg("directions") =
              std::vector<std::string>{"vd", "vu", "hr", "hl", "mdd", "mdu",
                                       "cdd", "cdu"})
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save",
           [](const SanetParams& params, const std::string& path) {
             save_checkpoint(path, params);
           })
      .def("forward",
           [](const SanetParams& params, const py::array_t<double>& image) {
             return array_from_tensor(
                 sanet_forward(tensor_from_array(image), params));
           },
           py::arg("image"), "Logits (n_classes x H x W) for a 1xHxW image.")
      .def("predict",
           [](const SanetParams& params, const py::array_t<double>& image) {
             return array_from_mask(
                 predict_mask(sanet_forward(tensor_from_array(image), params)));
           },
           py::arg("image"), "Class mask for a 1xHxW image in [0, 1].")
      .def_property_readonly("n_parameters", [](const SanetParams& params) {
        long long total = 0;
        for (const auto& p : params.parameters()) total += p.value.numel();
        return total;
      });

  m.attr("__version__") = "0.1.0";
}
