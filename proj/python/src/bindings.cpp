#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "afdmisac/experiment.hpp"

namespace py = pybind11;
using namespace afdmisac;

namespace {

DDKernel as_kernel(const CMatrix& v, const DDGrid& g) {
    if (v.rows() != g.M || v.cols() != g.N) throw ValidationError("kernel", "shape does not match the grid");
    return DDKernel(g, v);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "AFDM-ISAC delay-Doppler simulation core.";

    // Translators run newest first, so the derived type registers last.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

    py::class_<DDGrid>(m, "DDGrid")
        .def(py::init([](int M, int N, double delta_tau, double delta_nu) {
                 DDGrid g{M, N, delta_tau, delta_nu};
                 g.validate();
                 return g;
             }),
             py::arg("M") = 16, py::arg("N") = 16, py::arg("delta_tau") = 10e-9, py::arg("delta_nu") = 1e3)
        .def_readwrite("M", &DDGrid::M)
        .def_readwrite("N", &DDGrid::N)
        .def_readwrite("delta_tau", &DDGrid::delta_tau)
        .def_readwrite("delta_nu", &DDGrid::delta_nu)
        .def("__repr__", [](const DDGrid& g) {
            std::ostringstream os;
            os << "DDGrid(M=" << g.M << ", N=" << g.N << ", delta_tau=" << g.delta_tau << ", delta_nu=" << g.delta_nu
               << ")";
            return os.str();
        });
    m.def("default_grid", &default_grid, py::arg("M") = 16, py::arg("N") = 16);

    py::class_<KernelPath>(m, "KernelPath")
        .def(py::init([](cd gain, double delay_s, double doppler_hz) { return KernelPath{gain, delay_s, doppler_hz}; }),
             py::arg("gain"), py::arg("delay_s"), py::arg("doppler_hz"))
        .def_readwrite("gain", &KernelPath::gain)
        .def_readwrite("delay_s", &KernelPath::delay_s)
        .def_readwrite("doppler_hz", &KernelPath::doppler_hz);

    m.def("dirichlet", &dirichlet, py::arg("x"), py::arg("M"));
    m.def(
        "synthesize_kernel",
        [](const std::vector<KernelPath>& paths, const DDGrid& g) { return synthesize_kernel(paths, g).values; },
        py::arg("paths"), py::arg("grid"), "M x N complex kernel (rows: delay, columns: centered Doppler)");

    m.def("dft2", &dft2, "Unnormalized 2D DFT");
    m.def("idft2", &idft2, "Inverse 2D DFT with 1/(MN)");
    m.def("circ_conv2", &circ_conv2, "2D circular convolution");

    m.def("preset_names", &preset_names);
    m.def(
        "generate_pass",
        [](const std::string& preset, std::uint64_t seed, int frames) {
            const Pass pass = generate_pass(preset_pass(preset, seed, frames));
            std::vector<std::vector<KernelPath>> out;
            out.reserve(pass.size());
            for (const auto& s : pass) out.push_back(snapshot_theta(s));
            return out;
        },
        py::arg("preset"), py::arg("seed"), py::arg("frames"),
        "Per frame, the (gain, delay, Doppler) of every path; inactive paths have zero gain.");

    m.def("mmse_filter", &mmse_filter, py::arg("H_f"), py::arg("gamma"));
    m.def(
        "isac_filter",
        [](const CMatrix& H_f, const RMatrix& S, double lambda, double gamma, double denom_floor) {
            PreeqConfig c;
            c.lambda_isac = lambda;
            c.gamma = gamma;
            c.denom_floor = denom_floor;
            return isac_filter(H_f, S, c);
        },
        py::arg("H_f"), py::arg("S"), py::arg("lambda_isac"), py::arg("gamma"), py::arg("denom_floor") = -1.0);
    m.def(
        "normalize_precoder",
        [](const CMatrix& G, double Es) {
            double alpha = 0.0;
            const DDKernel k = normalize_precoder(DDKernel(default_grid(static_cast<int>(G.rows()), static_cast<int>(G.cols())), G), Es, &alpha);
            return py::make_tuple(k.values, alpha);
        },
        py::arg("G"), py::arg("Es") = 1.0, "Returns (scaled G, alpha).");

    m.def(
        "sensing_cost",
        [](const std::vector<KernelPath>& paths, const CMatrix& G_f, const CMatrix& X_f, double sigma_w2,
           const DDGrid& g, int k_prime) {
            return sensing_cost(EtaVector::from_paths(paths, k_prime), G_f, X_f, sigma_w2, g);
        },
        py::arg("paths"), py::arg("G_f"), py::arg("X_f"), py::arg("sigma_w2"), py::arg("grid"), py::arg("k_prime") = 3,
        "tr(C) of the Slepian-Bangs CRLB.");
    m.def(
        "fim",
        [](const std::vector<KernelPath>& paths, const CMatrix& G_f, const CMatrix& X_f, double sigma_w2,
           const DDGrid& g, int k_prime) {
            const EtaVector eta = EtaVector::from_paths(paths, k_prime);
            const FimResult r = fim(jacobian_fd(eta, G_f, X_f, g), sigma_w2);
            py::dict d;
            d["fim"] = r.fim;
            d["crlb"] = r.crlb;
            d["trace"] = r.trace;
            d["jittered"] = r.jittered;
            return d;
        },
        py::arg("paths"), py::arg("G_f"), py::arg("X_f"), py::arg("sigma_w2"), py::arg("grid"), py::arg("k_prime") = 3);
    m.def(
        "sensitivity_map",
        [](const std::vector<KernelPath>& paths, const CMatrix& G_f_mmse, const CMatrix& X_f, double sigma_w2,
           const DDGrid& g, bool oracle, int k_prime) {
            const EtaVector eta = EtaVector::from_paths(paths, k_prime);
            return oracle ? sensitivity_oracle(eta, G_f_mmse, X_f, sigma_w2, g).values
                          : sensitivity_fast(eta, G_f_mmse, X_f, sigma_w2, g).values;
        },
        py::arg("paths"), py::arg("G_f_mmse"), py::arg("X_f"), py::arg("sigma_w2"), py::arg("grid"),
        py::arg("oracle") = false, py::arg("k_prime") = 3, "Normalized per-bin sensitivity in [0, 1].");

    m.def(
        "cnmse",
        [](const CMatrix& H, const CMatrix& H_hat) {
            const DDGrid g = default_grid(static_cast<int>(H.rows()), static_cast<int>(H.cols()));
            return cnmse(as_kernel(H, g), as_kernel(H_hat, g));
        },
        py::arg("H"), py::arg("H_hat"), "Complex NMSE in percent.");
    m.def(
        "constellation",
        [](const std::string& kind, double Es) {
            if (kind != "qpsk" && kind != "qam16") throw ValidationError("kind", "expected 'qpsk' or 'qam16'");
            return Constellation::make(kind == "qpsk" ? Modulation::qpsk : Modulation::qam16, Es).points;
        },
        py::arg("kind") = "qpsk", py::arg("Es") = 1.0);

    m.def(
        "default_config",
        [] {
            std::ostringstream os;
            write_config(os, ExperimentConfig{});
            return os.str();
        },
        "The default experiment configuration as INI text.");
    m.def(
        "check_config",
        [](const std::string& text) {
            std::istringstream is(text);
            std::ostringstream os;
            write_config(os, parse_config(is));
            return os.str();
        },
        py::arg("text"), "Parses and validates INI text; returns the fully populated configuration.");
}
