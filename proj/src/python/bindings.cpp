#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "cascnn/checkpoint.hpp"
#include "cascnn/metrics.hpp"
#include "cascnn/ops.hpp"
#include "cascnn/pipeline.hpp"
#include "cascnn/synth.hpp"
#include "cascnn/train.hpp"

namespace py = pybind11;
using namespace cascnn;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const DoubleArray& array) {
  Shape shape(array.ndim());
  for (py::ssize_t axis = 0; axis < array.ndim(); ++axis) {
    shape[static_cast<std::size_t>(axis)] = static_cast<std::size_t>(array.shape(axis));
  }
  std::vector<double> values(array.data(), array.data() + array.size());
  return Tensor::from_values(std::move(shape), std::move(values));
}

py::array_t<double> array_from_values(const Shape& shape, const std::vector<double>& values) {
  std::vector<py::ssize_t> dims(shape.begin(), shape.end());
  py::array_t<double> array(dims);
  std::copy(values.begin(), values.end(), array.mutable_data());
  return array;
}

py::array_t<double> tensor_to_array(const Tensor& tensor) {
  return array_from_values(tensor.shape(), tensor.values());
}

py::dict report_to_dict(const MetricReport& report) {
  py::dict doc;
  doc["scope"] = report.scope;
  doc["cells"] = report.cells;
  doc["positive_cells"] = report.positive_cells;
  doc["mse"] = report.mse;
  doc["rmse"] = report.rmse;
  doc["mae"] = report.mae;
  doc["mape"] = report.mape;
  if (report.wmape_defined) {
    doc["wmape"] = report.wmape;
  } else {
    doc["wmape"] = py::none();
  }
  return doc;
}

// Owning handle passed through the python surface.
struct PyModel {
  std::unique_ptr<Model> model;

  Model& get() {
    if (!model) throw UsageError("model handle is empty");
    return *model;
  }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Short-term metro OD demand prediction: tensor ops, model, and pipeline";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Tensor>(m, "Tensor")
      .def(py::init([](const DoubleArray& array) { return tensor_from_array(array); }),
           py::arg("values"))
      .def_property_readonly("shape", [](const Tensor& t) { return t.shape(); })
      .def("numpy", &tensor_to_array)
      .def("grad",
           [](const Tensor& t) -> py::object {
             if (t.grad().empty()) return py::none();
             return array_from_values(t.shape(), t.grad());
           })
      .def("zero_grad", &Tensor::zero_grad)
      .def("backward", &Tensor::backward)
      .def("item", &Tensor::item);

  m.def("conv2d_same", &conv2d_same, py::arg("input"), py::arg("weight"), py::arg("bias"));
  m.def("conv1x1", &conv1x1, py::arg("input"), py::arg("weight"), py::arg("bias"));
  m.def("dense", &dense, py::arg("input"), py::arg("weight"), py::arg("bias"));
  m.def("global_avg_pool", &global_avg_pool, py::arg("input"));
  m.def("relu", &relu);
  m.def("sigmoid", &sigmoid);
  m.def("add", &add);
  m.def("sub", &sub);
  m.def("mul", &mul);
  m.def("scale", &scale, py::arg("input"), py::arg("factor"));
  m.def("sum", &sum);
  m.def("scale_channels", &scale_channels, py::arg("input"), py::arg("scales"));
  m.def("broadcast_rows", &broadcast_rows, py::arg("matrix"), py::arg("rows"));
  m.def("masked_mse", &masked_mse, py::arg("pred"), py::arg("target"), py::arg("mask"));
  m.def(
      "xavier_normal",
      [](const std::vector<std::size_t>& shape, std::size_t fan_in, std::size_t fan_out,
         std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return xavier_normal(shape, fan_in, fan_out, rng);
      },
      py::arg("shape"), py::arg("fan_in"), py::arg("fan_out"), py::arg("seed") = 0);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("n", &ModelConfig::n)
      .def_readwrite("history_days", &ModelConfig::history_days)
      .def_readwrite("flow_steps", &ModelConfig::flow_steps)
      .def_readwrite("kernels", &ModelConfig::kernels)
      .def_readwrite("filters_layer1", &ModelConfig::filters_layer1)
      .def_readwrite("filters_layer2", &ModelConfig::filters_layer2)
      .def_readwrite("reduction", &ModelConfig::reduction)
      .def_readwrite("no_split", &ModelConfig::no_split)
      .def_readwrite("no_channel_attention", &ModelConfig::no_channel_attention)
      .def_readwrite("no_inflow", &ModelConfig::no_inflow)
      .def_readwrite("no_outflow", &ModelConfig::no_outflow)
      .def_readwrite("ca_after_layer2", &ModelConfig::ca_after_layer2);

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("kind", [](PyModel& self) { return self.get().kind(); })
      .def("forward",
           [](PyModel& self, const DoubleArray& history, const DoubleArray& inflow,
              const DoubleArray& outflow) {
             return tensor_to_array(self.get().forward(
                 tensor_from_array(history), tensor_from_array(inflow),
                 tensor_from_array(outflow)));
           },
           py::arg("history"), py::arg("inflow_win"), py::arg("outflow_win"))
      .def("parameters", [](PyModel& self) {
        py::dict params;
        for (Parameter* param : self.get().parameters()) {
          params[py::str(param->name)] = tensor_to_array(param->value);
        }
        return params;
      });

  m.def(
      "build_model",
      [](const std::string& kind, const ModelConfig& config, std::uint64_t seed) {
        return PyModel{build_model(kind, config, seed)};
      },
      py::arg("kind"), py::arg("config"), py::arg("seed") = 0);
  m.def(
      "save_checkpoint",
      [](PyModel& model, const std::string& manifest_path, const std::string& data_path) {
        save_checkpoint(model.get(), manifest_path, data_path);
      },
      py::arg("model"), py::arg("manifest_path"), py::arg("data_path"));
  m.def(
      "load_checkpoint",
      [](const std::string& manifest_path) { return PyModel{load_checkpoint(manifest_path)}; },
      py::arg("manifest_path"));

  m.def(
      "generate",
      [](const std::string& out_dir, std::size_t n, std::size_t days, std::uint64_t seed,
         double day_jitter) {
        SynthConfig config;
        config.network.n = n;
        config.n_days = days;
        config.seed = seed;
        config.profile.day_jitter = day_jitter;
        generate(config, out_dir);
      },
      py::arg("out_dir"), py::arg("n") = 20, py::arg("days") = 15, py::arg("seed") = 42,
      py::arg("day_jitter") = 0.22,
      "Write a synthetic AFC dataset (afc.csv + manifest.json)");

  py::class_<PreparedData, std::shared_ptr<PreparedData>>(m, "PreparedData")
      .def_property_readonly("n", [](const PreparedData& d) { return d.n; })
      .def_property_readonly("days", [](const PreparedData& d) { return d.grid.days(); })
      .def_property_readonly("intervals_per_day",
                             [](const PreparedData& d) { return d.grid.intervals_per_day(); })
      .def_property_readonly("train_size",
                             [](const PreparedData& d) { return d.split.train.size(); })
      .def_property_readonly("val_size", [](const PreparedData& d) { return d.split.val.size(); })
      .def_property_readonly("test_size",
                             [](const PreparedData& d) { return d.split.test.size(); })
      .def_property_readonly("first_test_day",
                             [](const PreparedData& d) { return d.first_test_day; })
      .def("mask", [](const PreparedData& d, std::size_t interval) {
        return tensor_to_array(d.masks.interval_mask(interval));
      });

  m.def(
      "prepare",
      [](const std::string& data_dir, std::size_t x, std::size_t y, double threshold,
         double val_rate, std::uint64_t seed) {
        PipelineConfig config;
        config.history_days = x;
        config.flow_steps = y;
        config.mask_threshold = threshold;
        config.val_rate = val_rate;
        config.split_seed = seed;
        return std::make_shared<PreparedData>(prepare_dataset(data_dir, config));
      },
      py::arg("data_dir"), py::arg("x") = 5, py::arg("y") = 5, py::arg("threshold") = 2.0,
      py::arg("val_rate") = 0.1, py::arg("seed") = 42,
      "Parse, extract, fit scalers and masks, and split into samples");

  m.def(
      "model_config_for",
      [](const PreparedData& data) {
        ModelConfig config;
        config.n = data.n;
        return config;
      },
      py::arg("prepared"), "Default model configuration sized for a prepared dataset");

  m.def(
      "fit",
      [](PyModel& model, const PreparedData& data, double lr, std::size_t batch,
         std::size_t max_epochs, std::size_t patience, std::uint64_t seed, bool masked) {
        TrainConfig config;
        config.lr = lr;
        config.batch_size = batch;
        config.max_epochs = max_epochs;
        config.patience = patience;
        config.seed = seed;
        config.masked_loss = masked;
        const TrainState state = fit(model.get(), data.split.train, data.split.val, config);
        py::dict result;
        result["epochs_run"] = state.history.size();
        result["best_epoch"] = state.best_epoch;
        result["best_val_loss"] = state.best_val_loss;
        result["stop_reason"] = state.stop_reason;
        result["skipped_train_samples"] = state.skipped_train_samples;
        py::list train_losses, val_losses;
        for (const EpochStats& stats : state.history) {
          train_losses.append(stats.train_loss);
          val_losses.append(stats.val_loss);
        }
        result["train_loss"] = train_losses;
        result["val_loss"] = val_losses;
        return result;
      },
      py::arg("model"), py::arg("prepared"), py::arg("lr") = 1e-3, py::arg("batch") = 16,
      py::arg("max_epochs") = 200, py::arg("patience") = 10, py::arg("seed") = 0,
      py::arg("masked") = true);

  m.def(
      "evaluate",
      [](PyModel& model, const PreparedData& data) {
        const EvalResult result = evaluate(model.get(), data, EvalOptions{});
        py::dict doc;
        doc["metrics"] = report_to_dict(result.model_overall);
        doc["historical_average"] = report_to_dict(result.ha_overall);
        doc["clipped_negative"] = result.clipped_negative;
        doc["skipped_samples"] = result.skipped_samples;
        return doc;
      },
      py::arg("model"), py::arg("prepared"),
      "Raw-scale masked metrics on the test days, with the historical-average yardstick");
}
