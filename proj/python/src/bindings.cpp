#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "motionseq/baselines.hpp"
#include "motionseq/errors.hpp"
#include "motionseq/evalharness.hpp"
#include "motionseq/rotmath.hpp"
#include "motionseq/seq2seq.hpp"
#include "motionseq/synthetic.hpp"

namespace py = pybind11;
using namespace motionseq;

namespace {

std::tuple<double, double, double> to_tuple(const rotmath::EulerAngles& e) {
  return {e.yaw, e.pitch, e.roll};
}

PoseSequence sequence_from_frames(const Tensor2& frames, const std::string& action, double interval) {
  PoseSequence s;
  s.frames = frames;
  s.action = action;
  s.frame_interval = interval;
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Residual seq2seq GRU motion prediction core";
  m.attr("__version__") = "0.1.0";

  auto base = py::register_exception<Error>(m, "MotionSeqError", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  m.attr("ACTIONS") = std::vector<std::string>(kActions.begin(), kActions.end());

  // Rotations.
  m.def("expmap_to_rotmat", &rotmath::expmap_to_rotmat, py::arg("r"));
  m.def("rotmat_to_expmap", &rotmath::rotmat_to_expmap, py::arg("m"));
  m.def("rotmat_to_euler", [](const rotmath::RotMat& r) { return to_tuple(rotmath::rotmat_to_euler(r)); },
        py::arg("m"), "Intrinsic z-y-x angles as (yaw, pitch, roll).");
  m.def("euler_to_rotmat",
        [](double yaw, double pitch, double roll) { return rotmath::euler_to_rotmat({yaw, pitch, roll}); },
        py::arg("yaw"), py::arg("pitch"), py::arg("roll"));

  // Baselines.
  m.def("zero_velocity", &baselines::zero_velocity, py::arg("seed"), py::arg("steps"));
  m.def("running_average",
        [](const Tensor2& seed, int k, int steps, const std::string& mode) {
          baselines::AverageMode am;
          if (mode == "constant") {
            am = baselines::AverageMode::kConstant;
          } else if (mode == "autoregressive") {
            am = baselines::AverageMode::kAutoregressive;
          } else {
            throw InvalidInput("mode must be 'constant' or 'autoregressive'");
          }
          return baselines::running_average(seed, k, steps, am);
        },
        py::arg("seed"), py::arg("k"), py::arg("steps"), py::arg("mode") = "constant");

  // Metric.
  m.def("horizon_frame", &horizon_frame, py::arg("horizon_ms"), py::arg("frame_interval") = 0.04);
  m.def("mean_angle_error",
        [](const Tensor2& pred, const Tensor2& gt, const std::vector<int>& frames, const std::string& space) {
          return mean_angle_error(pred, gt, frames, parse_metric_space(space));
        },
        py::arg("pred"), py::arg("gt"), py::arg("horizon_frames"), py::arg("space") = "euler");

  // Data.
  py::class_<PoseSequence>(m, "PoseSequence")
      .def(py::init(&sequence_from_frames), py::arg("frames"), py::arg("action") = "",
           py::arg("frame_interval") = kRawFrameInterval)
      .def_readwrite("frames", &PoseSequence::frames)
      .def_readwrite("frame_interval", &PoseSequence::frame_interval)
      .def_readwrite("action", &PoseSequence::action)
      .def_readwrite("subject", &PoseSequence::subject)
      .def_readwrite("trial", &PoseSequence::trial)
      .def("__len__", &PoseSequence::length);
  m.def("load_sequence",
        [](const std::filesystem::path& path, const std::string& action, int subject, int trial) {
          return load_sequence_file(path, {action, subject, trial});
        },
        py::arg("path"), py::arg("action") = "", py::arg("subject") = 0, py::arg("trial") = 0);
  m.def("write_sequence", &write_sequence_file, py::arg("path"), py::arg("frames"));
  m.def("downsample", &downsample, py::arg("seq"), py::arg("factor") = kDefaultDownsample);

  py::class_<NormalizationStats>(m, "NormalizationStats")
      .def_readonly("mean", &NormalizationStats::mean)
      .def_readonly("std", &NormalizationStats::std)
      .def_readonly("used", &NormalizationStats::used)
      .def_readonly("constant_values", &NormalizationStats::constant_values)
      .def("used_count", &NormalizationStats::used_count)
      .def("used_indices", &NormalizationStats::used_indices);
  m.def("compute_normalization",
        [](const std::vector<PoseSequence>& train, double eps) { return compute_normalization(train, eps); },
        py::arg("train"), py::arg("eps") = kConstantDimEpsilon);
  m.def("normalize", &normalize, py::arg("frames"), py::arg("stats"));
  m.def("denormalize", &denormalize, py::arg("frames"), py::arg("stats"));

  py::class_<DatasetSplit>(m, "DatasetSplit")
      .def(py::init<>())
      .def_readwrite("train", &DatasetSplit::train)
      .def_readwrite("test", &DatasetSplit::test)
      .def_readwrite("test_subject", &DatasetSplit::test_subject);
  m.def("load_split",
        [](const std::filesystem::path& root, const std::vector<std::string>& actions, int test_subject,
           int downsample_factor) {
          SplitOptions o;
          o.test_subject = test_subject;
          o.downsample_factor = downsample_factor;
          return load_split(root, actions, o);
        },
        py::arg("root"), py::arg("actions"), py::arg("test_subject") = 5,
        py::arg("downsample") = kDefaultDownsample);
  m.def("make_sinusoid_split",
        [](const std::vector<std::string>& actions, int frames, int trials, double frame_interval,
           std::uint64_t seed) {
          synthetic::SinusoidOptions o;
          o.actions = actions;
          o.frames = frames;
          o.trials = trials;
          o.frame_interval = frame_interval;
          o.seed = seed;
          return synthetic::make_sinusoid_split(o);
        },
        py::arg("actions") = std::vector<std::string>{"walking"}, py::arg("frames") = 400,
        py::arg("trials") = 2, py::arg("frame_interval") = 0.04, py::arg("seed") = 1);
  m.def("write_dataset", &synthetic::write_dataset, py::arg("root"), py::arg("split"));

  py::class_<PredictionTask>(m, "PredictionTask")
      .def_readonly("seed", &PredictionTask::seed)
      .def_readonly("target", &PredictionTask::target)
      .def_readonly("action", &PredictionTask::action)
      .def_readonly("offset", &PredictionTask::offset)
      .def("__repr__", [](const PredictionTask& t) { return "<PredictionTask " + t.describe() + ">"; });
  m.def("make_task", &make_task, py::arg("seq"), py::arg("offset"), py::arg("stats"),
        py::arg("seq_in") = 50, py::arg("seq_out") = 10, py::arg("one_hot") = false);

  // Model.
  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("hidden", &ModelConfig::hidden)
      .def_readwrite("joint_width", &ModelConfig::joint_width)
      .def_readwrite("num_actions", &ModelConfig::num_actions)
      .def_readwrite("residual", &ModelConfig::residual)
      .def_readwrite("tied", &ModelConfig::tied)
      .def_readwrite("sample_feedback", &ModelConfig::sample_feedback)
      .def_readwrite("truncate_feedback_gradient", &ModelConfig::truncate_feedback_gradient)
      .def_readwrite("seq_in", &ModelConfig::seq_in)
      .def_readwrite("seq_out", &ModelConfig::seq_out)
      .def_readwrite("lr", &ModelConfig::lr)
      .def_readwrite("batch", &ModelConfig::batch)
      .def_readwrite("max_grad_norm", &ModelConfig::max_grad_norm)
      .def_readwrite("iterations", &ModelConfig::iterations)
      .def_readwrite("seed", &ModelConfig::seed)
      .def("input_width", &ModelConfig::input_width)
      .def("validate", &ModelConfig::validate)
      .def("to_json", &ModelConfig::to_json)
      .def_static("from_json", &ModelConfig::from_json);

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_readonly("config", &TrainedModel::config)
      .def_readonly("stats", &TrainedModel::stats)
      .def_readonly("loss_curve", &TrainedModel::loss_curve)
      .def("zero_output_layer", [](TrainedModel& model) {
        model.params.decoder().w_out.setZero();
        model.params.decoder().b_out.setZero();
      });

  m.def("train",
        [](const ModelConfig& config, const DatasetSplit& split, const NormalizationStats& stats) {
          py::gil_scoped_release release;
          return train(config, split, stats);
        },
        py::arg("config"), py::arg("split"), py::arg("stats"));
  m.def("predict", py::overload_cast<const TrainedModel&, const PredictionTask&, int>(&predict),
        py::arg("model"), py::arg("task"), py::arg("steps"));
  m.def("save_model", &save_model, py::arg("path"), py::arg("model"));
  m.def("load_model", &load_model, py::arg("path"));
}
