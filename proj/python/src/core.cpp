// Python bindings for the mcmklr core library.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <optional>
#include <string>
#include <variant>

#include "mcmklr/data_io.hpp"
#include "mcmklr/dense_oracle.hpp"
#include "mcmklr/errors.hpp"
#include "mcmklr/kernel.hpp"
#include "mcmklr/klr_fast.hpp"
#include "mcmklr/mcm.hpp"
#include "mcmklr/metrics.hpp"
#include "mcmklr/model_io.hpp"
#include "mcmklr/multiclass.hpp"
#include "mcmklr/tensor_fft.hpp"

namespace py = pybind11;
using namespace mcmklr;

namespace {

using DoubleIn = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IntIn = py::array_t<int, py::array::c_style | py::array::forcecast>;
using CplxIn = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

// Runs f without the GIL; the numpy result is built after it is retaken.
template <class F, class... A>
auto released(F f, const A&... args) {
  std::invoke_result_t<F, const A&...> out;
  {
    py::gil_scoped_release release;
    out = f(args...);
  }
  return to_array(out);
}

std::vector<double> to_vec(const DoubleIn& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

std::vector<int> to_ivec(const IntIn& a) {
  if (a.ndim() != 1) throw DimensionError("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

Solver parse_solver(const std::string& s) {
  if (s == "mcm") return Solver::Mcm;
  if (s == "exact") return Solver::Exact;
  throw ValidationError("solver must be 'mcm' or 'exact', got '" + s + "'");
}

const char* solver_name(Solver s) { return s == Solver::Mcm ? "mcm" : "exact"; }

// Labels of arbitrary numeric value, mapped to 0..C-1 in ascending order.
Dataset make_dataset(FeatureMatrix x, const DoubleIn& labels) {
  const auto raw = to_vec(labels);
  if (raw.size() != static_cast<std::size_t>(x.rows()))
    throw DimensionError("x has " + std::to_string(x.rows()) + " rows but y has " + std::to_string(raw.size()));
  Dataset d;
  d.x = std::move(x);
  d.meta.source = "<python>";
  d.meta.label_values = raw;
  std::sort(d.meta.label_values.begin(), d.meta.label_values.end());
  d.meta.label_values.erase(std::unique(d.meta.label_values.begin(), d.meta.label_values.end()),
                            d.meta.label_values.end());
  d.y.reserve(raw.size());
  for (double v : raw) {
    const auto it = std::lower_bound(d.meta.label_values.begin(), d.meta.label_values.end(), v);
    d.y.push_back(static_cast<int>(it - d.meta.label_values.begin()));
  }
  d.validate();
  return d;
}

py::dict diagnostics_dict(const SolverDiagnostics& s) {
  py::dict d;
  d["iterations"] = s.iterations;
  d["converged"] = s.converged;
  d["final_grad_norm"] = s.final_grad_norm;
  d["objective_trace"] = s.objective_trace;
  d["grad_norm_trace"] = s.grad_norm_trace;
  d["step_trace"] = s.step_trace;
  d["backtrack_trace"] = s.backtrack_trace;
  d["clamp_count"] = s.clamp_count;
  d["line_search_stalls"] = s.line_search_stalls;
  d["column_imag_residue"] = s.column_imag_residue;
  d["loop_seconds"] = s.loop_seconds;
  d["train_seconds"] = s.train_seconds;
  return d;
}

std::size_t class_count(const std::vector<int>& a, const std::vector<int>& b) {
  int top = 0;
  for (int v : a) top = std::max(top, v);
  for (int v : b) top = std::max(top, v);
  return static_cast<std::size_t>(top) + 1;
}

ConfusionMatrix confusion(const IntIn& y_true, const IntIn& y_pred, std::optional<std::size_t> classes) {
  const auto t = to_ivec(y_true), p = to_ivec(y_pred);
  return ConfusionMatrix::from_labels(t, p, classes.value_or(class_count(t, p)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multilevel circulant kernel logistic regression";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", error);
  py::register_exception<ValidationError>(m, "ValidationError", error);
  py::register_exception<CapExceededError>(m, "CapExceededError", error);
  py::register_exception<NumericalError>(m, "NumericalError", error);
  py::register_exception<ParseError>(m, "ParseError", error);
  py::register_exception<FormatError>(m, "FormatError", error);

  // tensor_fft
  py::class_<LevelOrder>(m, "LevelOrder")
      .def(py::init<std::vector<std::size_t>>(), py::arg("dims"))
      .def_static("for_size", &LevelOrder::for_size, py::arg("m"), py::arg("q"))
      .def_static("smooth_for_size", &LevelOrder::smooth_for_size, py::arg("m"), py::arg("q"))
      .def_property_readonly("dims", &LevelOrder::dims)
      .def_property_readonly("n", &LevelOrder::n)
      .def_property_readonly("q", &LevelOrder::q)
      .def("__eq__", [](const LevelOrder& a, const LevelOrder& b) { return a == b; })
      .def("__repr__", [](const LevelOrder& o) { return "LevelOrder(" + o.to_string() + ")"; });

  m.def(
      "mfft",
      [](const CplxIn& x, const LevelOrder& order) {
        if (x.ndim() != 1) throw DimensionError("expected a 1-d array");
        return to_array(mfft(std::span<const cplx>(x.data(), static_cast<std::size_t>(x.size())), order).values);
      },
      py::arg("x"), py::arg("order"), "phi x, unnormalized.");
  m.def(
      "mfft_adjoint",
      [](const CplxIn& s, const LevelOrder& order) {
        if (s.ndim() != 1) throw DimensionError("expected a 1-d array");
        SpectralVector sv{{s.data(), s.data() + s.size()}, order};
        return to_array(mfft_adjoint(sv));
      },
      py::arg("s"), py::arg("order"), "phi^* s, unnormalized.");

  // mcm
  py::class_<ShiftedSolve>(m, "ShiftedSolve")
      .def_property_readonly("x", [](const ShiftedSolve& s) { return to_array(s.x); })
      .def_readonly("clamped", &ShiftedSolve::clamped);

  py::class_<MultilevelCirculant>(m, "MultilevelCirculant")
      .def_static(
          "from_first_column",
          [](const DoubleIn& column, const LevelOrder& order) {
            return MultilevelCirculant::from_first_column(to_vec(column), order);
          },
          py::arg("column"), py::arg("order"))
      .def_static("identity", &MultilevelCirculant::identity, py::arg("order"))
      .def_static("zero", &MultilevelCirculant::zero, py::arg("order"))
      .def_property_readonly("order", &MultilevelCirculant::order)
      .def_property_readonly("n", &MultilevelCirculant::n)
      .def_property_readonly("column", [](const MultilevelCirculant& k) { return to_array(k.column()); })
      .def_property_readonly("eigenvalues", [](const MultilevelCirculant& k) { return to_array(k.eigenvalues()); })
      .def_property_readonly("imag_residue", &MultilevelCirculant::imag_residue)
      .def_property_readonly("asymmetric", &MultilevelCirculant::asymmetric)
      .def(
          "matvec",
          [](const MultilevelCirculant& k, const DoubleIn& x) { return to_array(matvec(k, to_vec(x))); },
          py::arg("x"))
      .def(
          "solve_shifted",
          [](const MultilevelCirculant& k, double shift, const DoubleIn& b) {
            return solve_shifted(k, shift, to_vec(b));
          },
          py::arg("shift"), py::arg("b"))
      .def(
          "to_dense", [](const MultilevelCirculant& k, std::size_t cap) { return to_dense(k, cap); },
          py::arg("cap") = kDefaultDenseCap)
      .def("__add__", [](const MultilevelCirculant& a, const MultilevelCirculant& b) { return add(a, b); })
      .def("__mul__", [](const MultilevelCirculant& a, double c) { return scale(a, c); })
      .def("__rmul__", [](const MultilevelCirculant& a, double c) { return scale(a, c); });

  // kernel
  m.def(
      "construct_column",
      [](double sigma, const LevelOrder& order, std::optional<std::vector<double>> h) {
        GridSpec grid = h ? GridSpec{*h, order} : GridSpec::unit(order);
        return to_array(construct_column(RadialKernel{KernelFamily::Gaussian, sigma}, grid));
      },
      py::arg("sigma"), py::arg("order"), py::arg("h") = py::none(),
      "First column of the Gaussian multilevel circulant on a lattice with steps h.");
  m.def(
      "exact_gram",
      [](const FeatureMatrix& x, double sigma, std::size_t cap) {
        return exact_gram(RadialKernel{KernelFamily::Gaussian, sigma}, x, cap);
      },
      py::arg("x"), py::arg("sigma"), py::arg("cap") = kDefaultDenseCap);

  // data
  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("x"), py::arg("y"),
           "Features plus raw labels; labels are mapped to classes in ascending order.")
      .def_readonly("x", &Dataset::x)
      .def_property_readonly("y", [](const Dataset& d) { return to_array(d.y); })
      .def_property_readonly("label_values", [](const Dataset& d) { return d.meta.label_values; })
      .def_property_readonly("n", &Dataset::n)
      .def_property_readonly("d", &Dataset::d)
      .def_property_readonly("num_classes", &Dataset::num_classes)
      .def("__len__", &Dataset::n);

  m.def("load_sparse_text", &load_sparse_text, py::arg("path"));
  m.def("generate_checkerboard", &generate_checkerboard, py::arg("n"), py::arg("seed"));
  m.def("generate_fig1_synthetic", &generate_fig1_synthetic, py::arg("n_train") = 3375, py::arg("n_test") = 625,
        py::arg("seed") = 1);
  m.def("generate_blobs", &generate_blobs, py::arg("n"), py::arg("classes"), py::arg("seed"));

  py::class_<MinMaxScaler>(m, "MinMaxScaler")
      .def_static("fit", &MinMaxScaler::fit, py::arg("x"))
      .def_readonly("lo", &MinMaxScaler::lo)
      .def_readonly("hi", &MinMaxScaler::hi)
      .def(
          "transform",
          [](const MinMaxScaler& s, FeatureMatrix x) {
            s.apply(x);
            return x;
          },
          py::arg("x"));

  // training
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](double lam, double sigma, std::optional<std::vector<std::size_t>> levels,
                       std::size_t auto_levels, bool smooth_levels, std::size_t t_max, double eps) {
             TrainConfig c;
             c.lambda = lam;
             c.kernel.sigma = sigma;
             c.levels = std::move(levels);
             c.auto_levels = auto_levels;
             c.smooth_levels = smooth_levels;
             c.t_max = t_max;
             c.eps = eps;
             c.validate();
             return c;
           }),
           py::kw_only(), py::arg("lam") = 1e-3, py::arg("sigma") = 1.0, py::arg("levels") = py::none(),
           py::arg("auto_levels") = 3, py::arg("smooth_levels") = false, py::arg("t_max") = 30,
           py::arg("eps") = 1e-5)
      .def_readwrite("lam", &TrainConfig::lambda)
      .def_property(
          "sigma", [](const TrainConfig& c) { return c.kernel.sigma; },
          [](TrainConfig& c, double s) { c.kernel.sigma = s; })
      .def_readwrite("levels", &TrainConfig::levels)
      .def_readwrite("auto_levels", &TrainConfig::auto_levels)
      .def_readwrite("smooth_levels", &TrainConfig::smooth_levels)
      .def_readwrite("h", &TrainConfig::h)
      .def_readwrite("t_max", &TrainConfig::t_max)
      .def_readwrite("eps", &TrainConfig::eps)
      .def_readwrite("armijo_delta", &TrainConfig::armijo_delta)
      .def_readwrite("armijo_beta", &TrainConfig::armijo_beta)
      .def_readwrite("max_backtracks", &TrainConfig::max_backtracks)
      .def("resolve_order", [](const TrainConfig& c, std::size_t m) { return c.resolve_grid(m).order; },
           py::arg("m"));

  py::class_<BinaryModel>(m, "BinaryModel")
      .def_property_readonly("solver", [](const BinaryModel& b) { return solver_name(b.solver); })
      .def_property_readonly("alpha", [](const BinaryModel& b) { return to_array(b.alpha); })
      .def_readonly("order", &BinaryModel::order)
      .def_readonly("config", &BinaryModel::config)
      .def_readonly("class_labels", &BinaryModel::class_labels)
      .def_property_readonly("n_train", &BinaryModel::n_train)
      .def_property_readonly("diagnostics", [](const BinaryModel& b) { return diagnostics_dict(b.diagnostics); })
      .def(
          "decision_values",
          [](const BinaryModel& b, const FeatureMatrix& x) { return released(decision_values, b, x); },
          py::arg("x"))
      .def(
          "predict_proba", [](const BinaryModel& b, const FeatureMatrix& x) { return released(predict, b, x); },
          py::arg("x"))
      .def(
          "predict", [](const BinaryModel& b, const FeatureMatrix& x) { return released(predict_labels, b, x); },
          py::arg("x"));

  py::class_<MulticlassModel>(m, "MulticlassModel")
      .def_property_readonly("solver", [](const MulticlassModel& mc) { return solver_name(mc.solver); })
      .def_readonly("class_labels", &MulticlassModel::class_labels)
      .def_readonly("models", &MulticlassModel::models)
      .def_readonly("config", &MulticlassModel::config)
      .def("decision_values", &ova_decision_values, py::arg("x"), py::call_guard<py::gil_scoped_release>())
      .def("scores", &ova_scores, py::arg("x"), py::call_guard<py::gil_scoped_release>())
      .def(
          "predict", [](const MulticlassModel& mc, const FeatureMatrix& x) { return released(predict_ova, mc, x); },
          py::arg("x"));

  m.def(
      "train",
      [](const Dataset& data, const TrainConfig& config, const std::string& solver, std::size_t dense_cap) {
        const Solver s = parse_solver(solver);
        py::gil_scoped_release release;
        return s == Solver::Mcm ? train(data, config) : train_exact(data, config, dense_cap);
      },
      py::arg("data"), py::arg("config") = TrainConfig{}, py::arg("solver") = "mcm",
      py::arg("dense_cap") = kDefaultDenseCap, "Binary training; labels must be two classes.");
  m.def(
      "train_ova",
      [](const Dataset& data, const TrainConfig& config, const std::string& solver, std::size_t jobs) {
        const Solver s = parse_solver(solver);
        py::gil_scoped_release release;
        return train_ova(data, config, s, jobs);
      },
      py::arg("data"), py::arg("config") = TrainConfig{}, py::arg("solver") = "mcm", py::arg("jobs") = 1);

  // model files
  m.def(
      "save_model",
      [](const std::variant<BinaryModel, MulticlassModel>& model, const std::string& path,
         std::optional<MinMaxScaler> scaler) { save_model({model, scaler.value_or(MinMaxScaler{})}, path); },
      py::arg("model"), py::arg("path"), py::arg("scaler") = py::none());
  m.def(
      "load_model",
      [](const std::string& path) {
        auto file = load_model(path);
        std::optional<MinMaxScaler> scaler;
        if (!file.scaler.empty()) scaler = file.scaler;
        return py::make_tuple(file.model, scaler);
      },
      py::arg("path"), "Returns (model, scaler or None).");

  // metrics
  m.def(
      "accuracy", [](const IntIn& t, const IntIn& p) { return accuracy(to_ivec(t), to_ivec(p)); },
      py::arg("y_true"), py::arg("y_pred"));
  m.def(
      "roc_auc", [](const IntIn& t, const DoubleIn& s) { return roc_auc(to_ivec(t), to_vec(s)); },
      py::arg("y_true"), py::arg("scores"));
  m.def(
      "confusion_matrix",
      [](const IntIn& t, const IntIn& p, std::optional<std::size_t> classes) {
        const auto cm = confusion(t, p, classes);
        Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(cm.classes(), cm.classes());
        for (std::size_t i = 0; i < cm.classes(); ++i)
          for (std::size_t j = 0; j < cm.classes(); ++j) out(i, j) = static_cast<long>(cm.at(i, j));
        return out;
      },
      py::arg("y_true"), py::arg("y_pred"), py::arg("classes") = py::none());
  m.def(
      "macro_f1",
      [](const IntIn& t, const IntIn& p, std::optional<std::size_t> c) { return macro_f1(confusion(t, p, c)); },
      py::arg("y_true"), py::arg("y_pred"), py::arg("classes") = py::none());
  m.def(
      "mcc", [](const IntIn& t, const IntIn& p, std::optional<std::size_t> c) { return mcc(confusion(t, p, c)); },
      py::arg("y_true"), py::arg("y_pred"), py::arg("classes") = py::none());
}
