// Python bindings for the main operations: configuration, scenario runs,
// lambda sweeps, the watermark codec, and checkpoint I/O.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "w4mu/checkpoint.hpp"
#include "w4mu/scenario.hpp"

namespace py = pybind11;
using namespace w4mu;

namespace {

Tensor tensor_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    Tensor t;
    for (py::ssize_t i = 0; i < a.ndim(); ++i)
        t.shape.push_back(static_cast<std::size_t>(a.shape(i)));
    t.data.assign(a.data(), a.data() + a.size());
    return t;
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<double> a(shape);
    std::copy(t.data.begin(), t.data.end(), a.mutable_data());
    return a;
}

}  // namespace

PYBIND11_MODULE(_w4mu, m) {
    m.doc() = "Watermark-aware machine unlearning lab (C++ core)";

    py::class_<eval::MetricsReport>(m, "MetricsReport")
        .def_readonly("run_id", &eval::MetricsReport::run_id)
        .def_readonly("scenario", &eval::MetricsReport::scenario)
        .def_readonly("method", &eval::MetricsReport::method)
        .def_readonly("seed", &eval::MetricsReport::seed)
        .def_readonly("ua", &eval::MetricsReport::ua)
        .def_readonly("mia", &eval::MetricsReport::mia)
        .def_readonly("ra", &eval::MetricsReport::ra)
        .def_readonly("ta", &eval::MetricsReport::ta)
        .def_readonly("ber", &eval::MetricsReport::ber)
        .def_readonly("psnr_db", &eval::MetricsReport::psnr_db)
        .def_readonly("rte_sec", &eval::MetricsReport::rte_sec)
        .def("to_csv_row", [](const eval::MetricsReport& r) { return eval::to_csv_row(r); })
        .def("__repr__",
             [](const eval::MetricsReport& r) { return "<MetricsReport " + r.run_id + ">"; });

    py::class_<harness::ScenarioSpec>(m, "ScenarioSpec")
        .def(py::init<>())
        .def_property(
            "scenario",
            [](const harness::ScenarioSpec& s) { return harness::to_string(s.scenario); },
            [](harness::ScenarioSpec& s, const std::string& v) {
                s.scenario = harness::scenario_from_string(v);
            })
        .def_property(
            "method", [](const harness::ScenarioSpec& s) { return harness::to_string(s.method); },
            [](harness::ScenarioSpec& s, const std::string& v) {
                s.method = harness::method_from_string(v);
            })
        .def_property(
            "forget_mode",
            [](const harness::ScenarioSpec& s) { return harness::to_string(s.forget_mode); },
            [](harness::ScenarioSpec& s, const std::string& v) {
                s.forget_mode = harness::forget_mode_from_string(v);
            })
        .def_readwrite("use_water4mu", &harness::ScenarioSpec::use_water4mu)
        .def_readwrite("use_message_selection", &harness::ScenarioSpec::use_message_selection)
        .def_readwrite("timing", &harness::ScenarioSpec::timing)
        .def_property(
            "seed", [](const harness::ScenarioSpec& s) { return s.seed; },
            [](harness::ScenarioSpec& s, std::uint64_t v) {
                s.seed = v;
                s.wm_cfg.seed = v;
                s.blo_cfg.seed = v;
            })
        .def_property(
            "n_train", [](const harness::ScenarioSpec& s) { return s.data_cfg.n_train; },
            [](harness::ScenarioSpec& s, std::size_t v) { s.data_cfg.n_train = v; })
        .def_property(
            "n_test", [](const harness::ScenarioSpec& s) { return s.data_cfg.n_test; },
            [](harness::ScenarioSpec& s, std::size_t v) { s.data_cfg.n_test = v; })
        .def_property(
            "dim", [](const harness::ScenarioSpec& s) { return s.data_cfg.dim; },
            [](harness::ScenarioSpec& s, std::size_t v) { s.data_cfg.dim = v; })
        .def_property(
            "n_classes", [](const harness::ScenarioSpec& s) { return s.data_cfg.n_classes; },
            [](harness::ScenarioSpec& s, std::size_t v) { s.data_cfg.n_classes = v; })
        .def_readwrite("forget_ratio", &harness::ScenarioSpec::forget_ratio)
        .def_readwrite("train_epochs", &harness::ScenarioSpec::train_epochs)
        .def_readwrite("train_lr", &harness::ScenarioSpec::train_lr)
        .def_readwrite("message_len", &harness::ScenarioSpec::message_len)
        .def_readwrite("strength", &harness::ScenarioSpec::strength)
        .def_property(
            "wm_epochs", [](const harness::ScenarioSpec& s) { return s.wm_cfg.epochs; },
            [](harness::ScenarioSpec& s, int v) { s.wm_cfg.epochs = v; })
        .def_property(
            "lambda_diag", [](const harness::ScenarioSpec& s) { return s.blo_cfg.lambda_diag; },
            [](harness::ScenarioSpec& s, double v) { s.blo_cfg.lambda_diag = v; })
        .def_property(
            "upper_epochs", [](const harness::ScenarioSpec& s) { return s.blo_cfg.upper_epochs; },
            [](harness::ScenarioSpec& s, int v) { s.blo_cfg.upper_epochs = v; })
        .def("validate", &harness::ScenarioSpec::validate)
        .def("resolved_ini", &harness::ScenarioSpec::resolved_ini)
        .def("config_hash", &harness::ScenarioSpec::config_hash);

    m.def("parse_config_text", &harness::parse_config_text, py::arg("text"),
          py::arg("origin") = "<string>");
    m.def("parse_config", &harness::parse_config, py::arg("path"));

    m.def(
        "run_scenario",
        [](const harness::ScenarioSpec& spec) {
            py::gil_scoped_release release;
            return harness::run_scenario(spec);
        },
        py::arg("spec"));
    m.def(
        "run_scenario_to",
        [](const harness::ScenarioSpec& spec, const std::string& out_dir) {
            py::gil_scoped_release release;
            return harness::run_scenario_to(spec, out_dir);
        },
        py::arg("spec"), py::arg("out_dir"));
    m.def(
        "sweep_lambda",
        [](const std::vector<double>& values, const harness::ScenarioSpec& base, bool parallel) {
            py::gil_scoped_release release;
            return harness::sweep_lambda(values, base, parallel);
        },
        py::arg("values"), py::arg("base"), py::arg("parallel") = true);
    m.def("reports_to_csv", &harness::reports_to_csv);
    m.def("csv_header", &eval::csv_header);

    // checkpoint I/O as dict[str, ndarray] per parameter set
    m.def("save_checkpoint",
          [](const py::dict& sets, const std::string& path) {
              std::vector<ParamSet> out;
              for (auto item : sets) {
                  ParamSet s;
                  s.name = py::cast<std::string>(item.first);
                  for (auto kv : py::cast<py::dict>(item.second))
                      s.entries.emplace_back(
                          py::cast<std::string>(kv.first),
                          tensor_from_array(py::cast<py::array_t<double>>(kv.second)));
                  out.push_back(std::move(s));
              }
              harness::save_checkpoint(out, path);
          },
          py::arg("sets"), py::arg("path"));
    m.def("load_checkpoint", [](const std::string& path) {
        py::dict out;
        for (const ParamSet& s : harness::load_checkpoint(path)) {
            py::dict entries;
            for (const auto& [name, t] : s.entries) entries[py::str(name)] = array_from_tensor(t);
            out[py::str(s.name)] = entries;
        }
        return out;
    });
}
