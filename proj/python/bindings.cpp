#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nfisac/bessel.hpp"
#include "nfisac/experiment.hpp"

namespace py = pybind11;
using namespace nfisac;

namespace {

ScenarioConfig with_overrides(const std::string& path, std::optional<std::uint64_t> seed,
                              std::optional<double> solver_tol, std::optional<int> max_iters) {
    ScenarioConfig c = load_config(path);
    if (seed) c.seed = *seed;
    if (solver_tol) c.solver_tol = *solver_tol;
    if (max_iters) c.max_iters = *max_iters;
    if (const auto issues = validate_config(c); !issues.empty()) throw ConfigError(issues);
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Near-field ISAC lifted super-resolution";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::enum_<Role>(m, "Role").value("comm", Role::Comm).value("radar", Role::Radar);

    py::class_<ArrayGeometry>(m, "ArrayGeometry")
        .def(py::init<int, double, double>(), py::arg("num_antennas"), py::arg("carrier_freq"),
             py::arg("spacing") = 0.0)
        .def_property_readonly("num_antennas", &ArrayGeometry::num_antennas)
        .def_property_readonly("carrier_freq", &ArrayGeometry::carrier_freq)
        .def_property_readonly("spacing", &ArrayGeometry::spacing)
        .def_property_readonly("wavelength", &ArrayGeometry::wavelength)
        .def_property_readonly("aperture", &ArrayGeometry::aperture)
        .def_property_readonly("rayleigh_distance",
                               [](const ArrayGeometry& g) { return rayleigh_distance(g); })
        .def("__repr__", [](const ArrayGeometry& g) {
            return "ArrayGeometry(num_antennas=" + std::to_string(g.num_antennas()) +
                   ", carrier_freq=" + std::to_string(g.carrier_freq()) +
                   ", spacing=" + std::to_string(g.spacing()) + ")";
        });

    m.def("bessel_j", &bessel_j, py::arg("n"), py::arg("x"));
    m.def("exact_steering", &exact_steering, py::arg("geometry"), py::arg("theta"), py::arg("r"));
    m.def("fresnel_steering", &fresnel_steering, py::arg("geometry"), py::arg("theta"), py::arg("r"));
    m.def("farfield_steering", &farfield_steering, py::arg("geometry"), py::arg("theta"));

    py::class_<TruncationOrders>(m, "TruncationOrders")
        .def_readonly("i1", &TruncationOrders::i1)
        .def_readonly("i2", &TruncationOrders::i2)
        .def_property_readonly("width", &TruncationOrders::width)
        .def("__repr__", [](const TruncationOrders& o) {
            return "TruncationOrders(i1=" + std::to_string(o.i1) + ", i2=" + std::to_string(o.i2) + ")";
        });
    m.def("truncation_orders", &truncation_orders, py::arg("geometry"), py::arg("r_min"));
    m.def("truncation_orders_for_tail", &truncation_orders_for_tail, py::arg("geometry"), py::arg("r_min"),
          py::arg("tail_tol"));

    py::class_<LiftedDictionary>(m, "LiftedDictionary")
        .def(py::init<ArrayGeometry, double, double>(), py::arg("geometry"), py::arg("r_min"), py::arg("r_max"))
        .def_property_readonly("orders", &LiftedDictionary::orders)
        .def_property_readonly("width", &LiftedDictionary::width)
        .def("distance_matrix", &LiftedDictionary::distance_matrix, py::arg("r"))
        .def("lifted_steering", &LiftedDictionary::lifted_steering, py::arg("theta"), py::arg("r"));

    m.def("load_config", [](const std::filesystem::path& path) { return serialize_config(load_config(path)); },
          py::arg("path"), "Validated configuration, re-serialized in canonical form.");

    m.def(
        "run",
        [](const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::string> out,
           std::optional<double> solver_tol, std::optional<int> max_iters) {
            const ScenarioConfig c = with_overrides(path, seed, solver_tol, max_iters);
            RunOutput result;
            {
                py::gil_scoped_release release;
                result = run_trial(c, c.seed);
                if (out) write_artifacts(result, *out);
            }
            py::dict d;
            d["report"] = report_json(result.report);
            d["curves"] = curves_tsv(result.pipeline);
            d["estimates"] = estimates_tsv(result.report);
            d["exit_status"] = exit_status(result.report);
            return d;
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none(),
        py::arg("solver_tol") = py::none(), py::arg("max_iters") = py::none());
}
