#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "selmut/experiment.hpp"

namespace py = pybind11;
using namespace selmut;

namespace {

py::dict ensemble_dict(const ParticleEnsemble& e) {
    py::dict d;
    d["time"] = e.time;
    d["dim"] = e.dim;
    d["h"] = e.h;
    d["labels"] = e.labels;
    d["positions"] = e.positions;
    d["volumes"] = e.volumes;
    d["intensities"] = e.intensities;
    d["mass"] = e.total_mass();
    return d;
}

py::dict fit_dict(const OrderFit& f) {
    py::dict d;
    d["slope"] = f.slope;
    d["intercept"] = f.intercept;
    d["residual"] = f.residual;
    d["slope_stderr"] = f.slope_stderr;
    d["points"] = f.points;
    return d;
}

ExperimentConfig from_text(const std::string& text) { return resolve_experiment(Config::parse(text, "<python>")); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Particle method for advection-selection-mutation equations";

    py::register_exception<Error>(m, "SelmutError", PyExc_RuntimeError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);

    m.def("preset_names", &preset_names);

    m.def(
        "simulate",
        [](const std::string& config_text) {
            const ExperimentConfig cfg = from_text(config_text);
            const ModelSpec model = build_model(cfg);
            const InitialDensity v0 = build_initial_density(cfg, model);
            if (!(cfg.h > 0.0)) throw UsageError("simulate: set discretization.h or discretization.N");
            py::gil_scoped_release release;
            const Trajectory traj = integrate(model, partition_support(v0, model, cfg.h, cfg.run.T_final), cfg.run);
            py::gil_scoped_acquire acquire;
            py::dict d;
            d["times"] = traj.times;
            d["mass"] = traj.mass;
            d["dt"] = traj.dt;
            d["final"] = ensemble_dict(traj.final_state());
            d["max_mass_excess"] = traj.monitors.max_mass_excess;
            d["max_support_excess"] = traj.monitors.max_support_excess;
            return d;
        },
        py::arg("config_text"), "Runs one trajectory from config text and returns the final ensemble and mass history.");

    m.def(
        "run",
        [](const std::string& mode, const std::string& config_text, const std::filesystem::path& out) {
            const ExperimentConfig cfg = from_text(config_text);
            py::gil_scoped_release release;
            if (mode == "simulate") run_simulate(cfg, out);
            else if (mode == "converge") run_converge(cfg, out);
            else if (mode == "asymptote") run_asymptote(cfg, out);
            else throw UsageError("unknown mode '" + mode + "'");
        },
        py::arg("mode"), py::arg("config_text"), py::arg("out"), "Runs an experiment mode and writes its artifacts.");

    m.def(
        "predict_limit_mass",
        [](const std::string& preset, const std::map<std::string, std::string>& params, const Vec& x) {
            return predict_limit_mass(make_preset(preset, params), x);
        },
        py::arg("preset"), py::arg("params"), py::arg("x_hat"));

    m.def(
        "fit_convergence_order",
        [](const std::vector<std::pair<double, double>>& h_error) { return fit_dict(fit_convergence_order(h_error)); },
        py::arg("h_error"));

    m.def(
        "verify_moments",
        [](const std::string& cutoff, int r) {
            const MomentReport rep = verify_moments(make_cutoff(cutoff), r);
            py::dict d;
            d["ok"] = rep.ok;
            d["detected_order"] = rep.detected_order;
            std::vector<double> values;
            for (const auto& mo : rep.moments) values.push_back(mo.value);
            d["moments"] = values;
            return d;
        },
        py::arg("cutoff"), py::arg("r"));

    m.def(
        "reconstruct",
        [](const Vec& positions, const Vec& volumes, const Vec& intensities, const std::string& cutoff, double eps,
           const Vec& grid) {
            if (positions.size() != volumes.size() || positions.size() != intensities.size()) {
                throw UsageError("reconstruct: positions, volumes and intensities differ in length");
            }
            ParticleEnsemble ens;
            ens.dim = 1;
            for (std::size_t i = 0; i < positions.size(); ++i) {
                ens.push_back(static_cast<long long>(i), Vec{positions[i]}, volumes[i], intensities[i]);
            }
            return reconstruct(ens, make_cutoff(cutoff), eps, SampleGrid::scattered(1, grid));
        },
        py::arg("positions"), py::arg("volumes"), py::arg("intensities"), py::arg("cutoff"), py::arg("eps"),
        py::arg("grid"), "One-dimensional regularized particle density at the grid points.");

    m.def("format_number", &format_number);
}
