#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "calibench/calibrators.hpp"
#include "calibench/datasets.hpp"
#include "calibench/error.hpp"
#include "calibench/harness.hpp"
#include "calibench/metrics.hpp"
#include "calibench/serialization.hpp"
#include "calibench/stats.hpp"

namespace py = pybind11;
namespace cb = calibench;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;

cb::Dataset to_dataset(const Matrix& x, const std::vector<int>& y) {
  if (x.ndim() != 2) throw cb::Error(cb::ErrorCode::DimensionMismatch, "features must be a 2-d array");
  const auto rows = static_cast<Eigen::Index>(x.shape(0));
  const auto cols = static_cast<Eigen::Index>(x.shape(1));
  Eigen::MatrixXd m(rows, cols);
  const auto view = x.unchecked<2>();
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = view(i, j);
  return cb::Dataset(std::move(m), y, {}, cb::SeedProvenance{});
}

py::array_t<double> to_array(const Eigen::MatrixXd& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  auto view = out.mutable_unchecked<2>();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) view(i, j) = m(i, j);
  return out;
}

cb::ModelSpec model_spec(const std::string& name) {
  if (name == "logreg") return cb::LogisticSpec{};
  if (name == "forest") return cb::ForestSpec{};
  throw cb::Error(cb::ErrorCode::InvalidArgument, "unknown model '" + name + "' (valid models: logreg, forest)");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of the calibench package";

  // module-lifetime handle; never destroyed, as the interpreter owns the type
  static auto* error = new py::exception<cb::Error>(m, "CalibenchError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const cb::Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error->ptr())(e.what());
      exc.attr("code") = std::string(cb::to_string(e.code()));
      PyErr_SetObject(error->ptr(), exc.ptr());
    }
  });

  m.def(
      "generate_synthetic",
      [](std::size_t n, std::size_t d, std::uint64_t seed) {
        const auto data = cb::generate_synthetic(cb::SyntheticConfig(n, d, seed));
        return py::make_tuple(to_array(data.features()), data.labels());
      },
      py::arg("n") = 1000, py::arg("d") = 10, py::arg("seed") = 42);

  py::class_<cb::PlattMap>(m, "PlattMap")
      .def(py::init<>())
      .def_readwrite("A", &cb::PlattMap::A)
      .def_readwrite("B", &cb::PlattMap::B)
      .def_readonly("iterations_used", &cb::PlattMap::iterations_used)
      .def_readonly("degenerate_labels", &cb::PlattMap::degenerate_labels)
      .def("__call__", [](const cb::PlattMap& map, const std::vector<double>& s) {
        return cb::apply_map(cb::CalibrationMap{map}, s);
      });

  py::class_<cb::IsotonicMap>(m, "IsotonicMap")
      .def_readonly("knots", &cb::IsotonicMap::knots)
      .def_readonly("values", &cb::IsotonicMap::values)
      .def_readonly("interpolate", &cb::IsotonicMap::interpolate)
      .def("__call__", [](const cb::IsotonicMap& map, const std::vector<double>& s) {
        return cb::apply_map(cb::CalibrationMap{map}, s);
      });

  m.def(
      "fit_platt",
      [](std::vector<double> scores, std::vector<int> labels, double ridge, bool target_smoothing) {
        cb::PlattOptions o;
        o.ridge = ridge;
        o.target_smoothing = target_smoothing;
        return cb::fit_platt(cb::ScoreSet(std::move(scores), std::move(labels)), o);
      },
      py::arg("scores"), py::arg("labels"), py::arg("ridge") = 1e-6, py::arg("target_smoothing") = false);

  m.def(
      "fit_isotonic",
      [](std::vector<double> scores, std::vector<int> labels, bool interpolate) {
        return cb::fit_isotonic(cb::ScoreSet(std::move(scores), std::move(labels)), cb::IsotonicOptions{interpolate});
      },
      py::arg("scores"), py::arg("labels"), py::arg("interpolate") = false);

  m.def("ece", [](const std::vector<double>& p, const std::vector<int>& y, std::size_t bins) { return cb::ece(p, y, bins); },
        py::arg("probs"), py::arg("labels"), py::arg("bins") = 10);
  m.def("mce", [](const std::vector<double>& p, const std::vector<int>& y, std::size_t bins) { return cb::mce(p, y, bins); },
        py::arg("probs"), py::arg("labels"), py::arg("bins") = 10);
  m.def("brier", [](const std::vector<double>& p, const std::vector<int>& y) { return cb::brier(p, y); });
  m.def("log_loss", [](const std::vector<double>& p, const std::vector<int>& y) { return cb::log_loss(p, y); });
  m.def("auc", [](const std::vector<double>& s, const std::vector<int>& y) { return cb::auc(s, y); });
  m.def(
      "evaluate_json",
      [](const std::vector<double>& p, const std::vector<int>& y, std::size_t bins, std::size_t groups) {
        return cb::to_json(cb::evaluate(p, y, bins, groups)).dump();
      },
      py::arg("probs"), py::arg("labels"), py::arg("bins") = 10, py::arg("hl_groups") = 10);

  m.def("paired_t_test_json", [](const std::vector<double>& a, const std::vector<double>& b) {
    return cb::to_json(cb::paired_t_test(a, b)).dump();
  });
  m.def("shapiro_wilk", [](const std::vector<double>& x) {
    const auto r = cb::shapiro_wilk(x);
    return py::make_tuple(r.w_statistic, r.p_value);
  });
  m.def("bonferroni_threshold", [](std::size_t m_tests, double alpha) {
    return cb::bonferroni(std::vector<double>(m_tests, 1.0), alpha).threshold;
  });

  m.def(
      "convergence_json",
      [](const std::string& truth, std::vector<std::size_t> sizes, std::size_t trials, std::uint64_t seed,
         std::size_t eval_size) {
        cb::ConvergenceConfig c{truth, std::move(sizes), trials, seed, eval_size};
        py::gil_scoped_release release;
        return cb::to_json(cb::run_convergence_study(c)).dump();
      },
      py::arg("ground_truth") = "identity", py::arg("sizes") = std::vector<std::size_t>{100, 1000, 10000, 100000},
      py::arg("trials") = 20, py::arg("seed") = 0, py::arg("eval_size") = 10000);

  m.def(
      "pipeline_json",
      [](const Matrix& x, const std::vector<int>& y, const std::string& model, std::uint64_t seed) {
        const auto data = to_dataset(x, y);
        const auto spec = model_spec(model);
        py::gil_scoped_release release;
        return cb::to_json(cb::run_enhanced_calibration(data, spec, seed)).dump();
      },
      py::arg("features"), py::arg("labels"), py::arg("model") = "logreg", py::arg("seed") = 42);

  m.def("benchmark_json", [](const std::string& config_json) {
    const auto config = cb::experiment_config_from_json(cb::json::parse(config_json));
    py::gil_scoped_release release;
    return cb::to_json(cb::run_repeated_cv(config)).dump();
  });
}
