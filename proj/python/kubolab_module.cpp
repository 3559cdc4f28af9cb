#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kubolab/dynamics.hpp"
#include "kubolab/ensemble.hpp"
#include "kubolab/experiments.hpp"

#include <sstream>

namespace py = pybind11;
using namespace kubo;

namespace {

DisorderSpec disorder(double width, std::uint64_t seed) {
    return width > 0.0 ? DisorderSpec::uniform(width, seed) : DisorderSpec::none();
}

struct Sample {
    DisplacementTable table;
    Spectrum spectrum;
};

Sample sample(const LatticeGeometry& g, double width, std::uint64_t seed) {
    return {DisplacementTable(g), eigendecompose(build_hamiltonian(g, disorder(width, seed)).hamiltonian)};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Linear-response conductivities of the disordered Harper model on a torus.";
    m.attr("__version__") = KUBOLAB_VERSION;

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);

    py::class_<LatticeGeometry>(m, "Geometry")
        .def(py::init([](int lx, int ly, int flux_num, int flux_den) {
                 LatticeGeometry g;
                 g.lx = lx;
                 g.ly = ly;
                 g.flux_num = flux_num;
                 g.flux_den = flux_den;
                 g.validate();
                 return g;
             }),
             py::arg("lx"), py::arg("ly"), py::arg("flux_num") = 0, py::arg("flux_den") = 1)
        .def_readonly("lx", &LatticeGeometry::lx)
        .def_readonly("ly", &LatticeGeometry::ly)
        .def_readonly("flux_num", &LatticeGeometry::flux_num)
        .def_readonly("flux_den", &LatticeGeometry::flux_den)
        .def_property_readonly("sites", &LatticeGeometry::sites)
        .def("__repr__", [](const LatticeGeometry& g) {
            std::ostringstream os;
            os << "Geometry(" << g.lx << "x" << g.ly << ", flux " << g.flux_num << "/" << g.flux_den << ")";
            return os.str();
        });

    m.def(
        "hamiltonian",
        [](const LatticeGeometry& g, double width, std::uint64_t seed) {
            return build_hamiltonian(g, disorder(width, seed)).hamiltonian.matrix;
        },
        py::arg("geometry"), py::arg("width") = 0.0, py::arg("seed") = 0,
        "Dense Hamiltonian with Peierls phases and optional uniform on-site disorder.");

    m.def(
        "eigenvalues",
        [](const LatticeGeometry& g, double width, std::uint64_t seed) {
            return sample(g, width, seed).spectrum.eigenvalues;
        },
        py::arg("geometry"), py::arg("width") = 0.0, py::arg("seed") = 0);

    m.def(
        "streda",
        [](const LatticeGeometry& g, double fermi_energy, double width, std::uint64_t seed, const std::string& j,
           const std::string& k, bool spectral) {
            const Sample s = sample(g, width, seed);
            const DensityState p = fermi_state(s.spectrum, kInf, fermi_energy);
            return spectral ? streda_conductivity(s.spectrum, p, s.table, parse_axis(j), parse_axis(k)).value
                            : streda_conductivity(p, s.table, parse_axis(j), parse_axis(k)).value;
        },
        py::arg("geometry"), py::arg("fermi_energy"), py::arg("width") = 0.0, py::arg("seed") = 0,
        py::arg("j") = "x", py::arg("k") = "y", py::arg("spectral") = false,
        "Zero-temperature Hall conductivity iT{P[d_j P, d_k P]} (units e^2/h times 2 pi).");

    m.def(
        "kubo_eta",
        [](const LatticeGeometry& g, double fermi_energy, double eta, double nu, double beta, double width,
           std::uint64_t seed, const std::string& j, const std::string& k) {
            const Sample s = sample(g, width, seed);
            const DensityState z = fermi_state(s.spectrum, beta, fermi_energy);
            return kubo_conductivity_eta(s.spectrum, z, s.table, parse_axis(j), parse_axis(k), eta, nu).value;
        },
        py::arg("geometry"), py::arg("fermi_energy"), py::arg("eta"), py::arg("nu") = 0.0,
        py::arg("beta") = kInf, py::arg("width") = 0.0, py::arg("seed") = 0, py::arg("j") = "x",
        py::arg("k") = "y");

    m.def(
        "field_primitive",
        [](double eta, double ex, double ey, double t, double nu) {
            FieldProtocol f;
            f.eta = eta;
            f.E = {ex, ey};
            f.modulation = nu == 0.0 ? Modulation::constant() : Modulation::cosine(nu);
            f.validate();
            const Vec2 v = field_primitive(f, t);
            return py::make_tuple(v[0], v[1]);
        },
        py::arg("eta"), py::arg("ex"), py::arg("ey"), py::arg("t"), py::arg("nu") = 0.0);

    m.def("realization_seeds", &realization_seeds, py::arg("master_seed"), py::arg("n"));

    m.def(
        "run",
        [](const std::string& path, std::optional<std::uint64_t> seed, std::optional<std::string> format) {
            CliOverrides ov;
            ov.seed = seed;
            ov.format = std::move(format);
            std::ostringstream out, err;
            const int code = run(path, ov, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("format") = py::none(),
        "Run an experiment configuration; returns (exit_code, stdout_text, stderr_text).");
}
