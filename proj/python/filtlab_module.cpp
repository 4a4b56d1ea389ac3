#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "filtlab/apps.hpp"
#include "filtlab/experiments.hpp"
#include "filtlab/initial_enlargement.hpp"
#include "filtlab/paths.hpp"
#include "filtlab/progressive.hpp"
#include "filtlab/verify.hpp"

namespace py = pybind11;
using namespace filtlab;

namespace {

py::array_t<double> bundle_values(const PathBundle& b) {
    py::array_t<double> out({b.n_paths, b.grid.size()});
    std::copy(b.values.begin(), b.values.end(), out.mutable_data());
    return out;
}

py::dict bundle_aux(const PathBundle& b) {
    py::dict d;
    for (const auto& [name, values] : b.aux) d[name.c_str()] = py::array(py::cast(values));
    return d;
}

py::dict report_dict(const TestReport& r) {
    py::dict d;
    d["name"] = r.name;
    d["statistic"] = r.statistic;
    d["stderr"] = r.stderr_;
    d["z"] = r.z;
    d["threshold"] = r.threshold;
    d["pass"] = r.pass;
    d["one_sided"] = r.one_sided;
    d["negative_control"] = r.negative_control;
    d["as_expected"] = r.as_expected();
    d["n_paths"] = r.n_paths;
    d["seed"] = r.seed;
    d["grid"] = r.grid_summary;
    return d;
}

Refinement parse_refinement(const std::string& name) {
    if (name == "uniform") return Refinement::Uniform;
    if (name == "geometric") return Refinement::GeometricTowardEnd;
    throw std::invalid_argument("refinement must be 'uniform' or 'geometric'");
}

}  // namespace

PYBIND11_MODULE(_filtlab, m) {
    m.doc() = "Simulation and statistical verification of Doob-Meyer "
              "decompositions under enlarged filtrations";

    py::class_<TimeGrid>(m, "TimeGrid")
        .def_property_readonly("horizon", &TimeGrid::horizon)
        .def_property_readonly("n_steps", &TimeGrid::n_steps)
        .def_property_readonly("points",
                               [](const TimeGrid& g) { return py::array(py::cast(g.points())); })
        .def("summary", &TimeGrid::summary)
        .def("__len__", &TimeGrid::size)
        .def("__getitem__",
             [](const TimeGrid& g, std::size_t i) {
                 if (i >= g.size()) throw py::index_error();
                 return g[i];
             });

    m.def(
        "make_grid",
        [](double horizon, std::size_t n_steps, const std::string& refinement,
           double ratio) {
            return make_grid(horizon, n_steps, parse_refinement(refinement), ratio);
        },
        py::arg("horizon"), py::arg("n_steps"), py::arg("refinement") = "uniform",
        py::arg("ratio") = 0.5);
    m.def("geometric_ratio_for", &geometric_ratio_for, py::arg("n_steps"),
          py::arg("shrink") = 1e-10);

    py::class_<PathBundle>(m, "PathBundle")
        .def_property_readonly("grid", [](const PathBundle& b) { return b.grid; })
        .def_property_readonly("n_paths", [](const PathBundle& b) { return b.n_paths; })
        .def_property_readonly("values", &bundle_values)
        .def_property_readonly("aux", &bundle_aux)
        .def_property_readonly("jump_times",
                               [](const PathBundle& b) { return b.jump_times; })
        .def_property_readonly("drift_clamp_events",
                               [](const PathBundle& b) { return b.drift_clamp_events; });

    m.def("simulate_brownian", &simulate_brownian, py::arg("grid"), py::arg("n_paths"),
          py::arg("seed"), py::arg("workers") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("simulate_poisson", &simulate_poisson, py::arg("rate"), py::arg("grid"),
          py::arg("n_paths"), py::arg("seed"), py::arg("workers") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("simulate_poisson_until_nth_jump", &simulate_poisson_until_nth_jump,
          py::arg("rate"), py::arg("grid"), py::arg("jump_index"), py::arg("n_paths"),
          py::arg("seed"), py::arg("workers") = 0,
          py::call_guard<py::gil_scoped_release>());
    m.def("sample_hitting_time_unit",
          [](std::size_t n, std::uint64_t seed, unsigned workers) {
              py::gil_scoped_release release;
              return sample_hitting_time_unit(n, seed, workers);
          },
          py::arg("n"), py::arg("seed"), py::arg("workers") = 0);
    m.def("enlarged_brownian_given_tau", &enlarged_brownian_given_tau, py::arg("tau"),
          py::arg("grid"), py::arg("n_paths"), py::arg("seed"), py::arg("workers") = 0,
          py::arg("drift_clip") = 1e4, py::call_guard<py::gil_scoped_release>());

    m.def("bb_density_q", &bb_density_q, py::arg("t"), py::arg("b"), py::arg("x"),
          py::arg("horizon"));
    m.def("bb_drift", &bb_drift, py::arg("t"), py::arg("b"), py::arg("x"),
          py::arg("horizon"));
    m.def("poisson_density_q", &poisson_density_q, py::arg("t"), py::arg("k"),
          py::arg("n_t"), py::arg("rate"));
    m.def("poisson_bridge_intensity", &poisson_bridge_intensity, py::arg("t_minus"),
          py::arg("k"), py::arg("n_t_minus"));
    m.def("nth_jump_tail", &nth_jump_tail, py::arg("t"), py::arg("x"), py::arg("n_t"),
          py::arg("n"), py::arg("rate"), py::arg("nth_jump_seen_by_x") = false);
    m.def("nth_jump_rate", &nth_jump_rate, py::arg("u"), py::arg("n_u"), py::arg("n"),
          py::arg("t_n"), py::arg("rate"));
    m.def("hitting_cdf", &hitting_cdf, py::arg("t"), py::arg("b"), py::arg("s"),
          py::arg("alive"));
    m.def("hitting_alpha", &hitting_alpha, py::arg("t"), py::arg("b"), py::arg("tau"));
    m.def("noisy_drift", &noisy_drift, py::arg("t"), py::arg("v_signal"), py::arg("b"),
          py::arg("horizon"), py::arg("tail_var"));

    py::class_<VarianceSchedule>(m, "VarianceSchedule")
        .def(py::init<std::vector<double>, std::vector<double>, double>(),
             py::arg("breakpoints"), py::arg("levels"), py::arg("v0"))
        .def_static("constant", &VarianceSchedule::constant, py::arg("sigma"),
                    py::arg("horizon"), py::arg("v0"))
        .def_static("bridge_to", &VarianceSchedule::bridge_to, py::arg("horizon"),
                    py::arg("breakpoints"), py::arg("levels"))
        .def_property_readonly("horizon", &VarianceSchedule::horizon)
        .def_property_readonly("v0", &VarianceSchedule::v0)
        .def("sigma", &VarianceSchedule::sigma)
        .def("v", &VarianceSchedule::v)
        .def("tail", &VarianceSchedule::tail);

    m.def("peof_cross_covariance", &peof_cross_covariance, py::arg("schedule"),
          py::arg("s"));
    m.def(
        "simulate_peof",
        [](const VarianceSchedule& schedule, const TimeGrid& grid, std::size_t n,
           std::uint64_t seed, unsigned workers) {
            py::gil_scoped_release release;
            PeofResult r = simulate_peof(schedule, grid, n, seed, workers);
            return py::make_tuple(std::move(r.b), std::move(r.v),
                                  std::move(r.innovation));
        },
        py::arg("schedule"), py::arg("grid"), py::arg("n_paths"), py::arg("seed"),
        py::arg("workers") = 0);
    m.def(
        "prog_bridge_simulate",
        [](const VarianceSchedule& schedule, const TimeGrid& grid, std::size_t n,
           std::uint64_t seed, unsigned workers) {
            py::gil_scoped_release release;
            ProgResult r = prog_bridge_simulate(schedule, grid, n, seed, workers);
            return py::make_tuple(std::move(r.b), std::move(r.v));
        },
        py::arg("schedule"), py::arg("grid"), py::arg("n_paths"), py::arg("seed"),
        py::arg("workers") = 0);

    m.def(
        "ks_test",
        [](std::vector<double> samples, const std::function<double(double)>& cdf,
           double level) { return report_dict(ks_test(std::move(samples), cdf, level)); },
        py::arg("samples"), py::arg("target_cdf"), py::arg("level") = 0.01);

    m.def(
        "structural_default_simulate",
        [](double mu, double vol, double barrier, double firm_value,
           const TimeGrid& grid, std::size_t n, std::uint64_t seed, unsigned workers) {
            StructuralModel model;
            model.drift_mu = mu;
            model.vol_sigma = vol;
            model.barrier = barrier;
            model.initial_value = firm_value;
            py::gil_scoped_release release;
            StructuralResult r = structural_default_simulate(model, grid, n, seed, workers);
            py::gil_scoped_acquire acquire;
            py::dict d;
            d["default_times"] = py::array(py::cast(r.default_times));
            py::list curve;
            for (const auto& pt : r.survival)
                curve.append(py::make_tuple(pt.t, pt.estimate, pt.band));
            d["survival"] = curve;
            return d;
        },
        py::arg("mu"), py::arg("vol"), py::arg("barrier"), py::arg("firm_value"),
        py::arg("grid"), py::arg("n_paths"), py::arg("seed"), py::arg("workers") = 0);

    m.def(
        "kyle_back_simulate",
        [](std::size_t n_steps, std::size_t bridge_steps, std::size_t n,
           std::uint64_t seed, const std::string& variant, unsigned workers) {
            KyleBackConfig cfg;
            cfg.output_grid = TimeGrid::uniform(1.0, n_steps);
            cfg.bridge_steps = bridge_steps;
            cfg.n_paths = n;
            cfg.seed = seed;
            cfg.variant = parse_kyle_back_variant(variant);
            cfg.workers = workers;
            py::gil_scoped_release release;
            return kyle_back_simulate(cfg).orders;
        },
        py::arg("n_steps"), py::arg("bridge_steps"), py::arg("n_paths"),
        py::arg("seed"), py::arg("variant") = "g4-consistent", py::arg("workers") = 0);

    m.def(
        "run_experiment",
        [](const py::dict& config) {
            const std::string dumped =
                py::module_::import("json").attr("dumps")(config).cast<std::string>();
            const ExperimentConfig cfg =
                ExperimentConfig::from_json(nlohmann::json::parse(dumped));
            ExperimentResult result;
            {
                py::gil_scoped_release release;
                result = run_experiment(cfg);
            }
            py::list reports;
            for (const auto& r : result.reports) reports.append(report_dict(r));
            return reports;
        },
        py::arg("config"));

    m.attr("__version__") = kVersion;
}
