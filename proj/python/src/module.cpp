#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "strnpga/bench.hpp"
#include "strnpga/error.hpp"
#include "strnpga/metrics.hpp"
#include "strnpga/oracle.hpp"

namespace py = pybind11;
using namespace strnpga;

namespace {

// Configs cross the boundary as JSON text; the Python package dumps dicts.
json parse_or_empty(const std::string& text) {
  if (text.empty()) return json::object();
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
}

ModelSpec model_spec(const std::string& kind, const std::string& sketch) {
  ModelSpec m;
  m.kind = model_kind_from_string(kind);
  m.sketch = sketch_kind_from_string(sketch);
  return m;
}

FactorModel build_model(const Eigen::MatrixXd& returns, const std::string& kind,
                        const std::string& sketch, Eigen::Index s, std::uint64_t seed,
                        std::optional<Eigen::Index> ell, double tau, double rho,
                        double kappa_target, std::optional<double> gamma) {
  const CovarianceFactor factor = center_and_factor(returns);
  const ModelSpec spec = model_spec(kind, sketch);
  if (spec.kind == ModelKind::baseline) return build_baseline(factor);
  const SketchConfig sc{spec.sketch, s, seed};
  if (spec.kind == ModelKind::sketch) return build_sketch(factor, sc);
  const RidgePolicy ridge = gamma ? RidgePolicy::fixed(*gamma) : RidgePolicy::target(kappa_target);
  if (ell) return build_str_at_level(factor, sc, *ell, ridge);
  return build_str(factor, sc, TruncationRule{tau, rho}, ridge);
}

std::string run_bench(const std::string& experiment, const std::string& config_text) {
  const ExperimentConfig cfg = ExperimentConfig::from_json(parse_or_empty(config_text));
  BenchReport rep;
  if (experiment == "approx") {
    rep = run_approximation_sweep(cfg);
  } else if (experiment == "rate") {
    rep = run_rate_experiment(cfg);
  } else if (experiment == "solver") {
    rep = run_solver_benchmark(cfg);
  } else if (experiment == "real") {
    rep = run_real_panel(cfg);
  } else {
    throw Error(ErrorKind::Argument, "unknown experiment '" + experiment + "'");
  }
  return rep.to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_strnpga, m) {
  m.doc() = "Sketched, truncated and regularized mean-variance portfolios";

  static py::exception<Error> error_type(m, "StrnpgaError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object args = py::make_tuple(to_string(e.kind()), e.what());
      PyErr_SetObject(error_type.ptr(), args.ptr());
    }
  });

  // Panels.
  m.def("generate_synthetic",
        [](Eigen::Index n, Eigen::Index T, double decay, double leading_scale,
           double noise_floor, std::uint64_t seed) {
          SyntheticSpec spec{n, T, decay, leading_scale, noise_floor, seed};
          ReturnPanel p = generate_synthetic(spec);
          return py::make_tuple(p.asset_ids(), p.returns());
        },
        py::arg("n"), py::arg("T"), py::arg("decay") = 0.9, py::arg("leading_scale") = 1.0,
        py::arg("noise_floor") = 0.0, py::arg("seed") = 0,
        "Synthetic panel as (asset_ids, returns) with returns of shape (n, T).");
  m.def("load_panel",
        [](const std::string& path, char delimiter) {
          ReturnPanel p = load_panel(path, CsvFormat{delimiter});
          return py::make_tuple(p.asset_ids(), p.returns());
        },
        py::arg("path"), py::arg("delimiter") = ',');
  m.def("center_and_factor",
        [](const Eigen::MatrixXd& returns) {
          CovarianceFactor f = center_and_factor(returns);
          return py::make_tuple(f.L, f.mean);
        },
        py::arg("returns"), "Returns (L, mean) with Sigma = L L^T.");

  // Sketches and spectra.
  m.def("apply_sketch",
        [](const Eigen::MatrixXd& L, const std::string& kind, Eigen::Index s, std::uint64_t seed) {
          return apply_sketch(L, SketchConfig{sketch_kind_from_string(kind), s, seed}).Ltilde;
        },
        py::arg("L"), py::arg("kind"), py::arg("s"), py::arg("seed") = 0);
  m.def("recommended_sketch_size", &recommended_sketch_size, py::arg("r_effective"),
        py::arg("epsilon"), py::arg("delta"), py::arg("c") = kDefaultSketchConstant);
  m.def("spectrum",
        [](const Eigen::MatrixXd& A) { return to_json(spectrum_report(A)).dump(); },
        py::arg("A"));
  m.def("energy_rank", &energy_rank, py::arg("energy"), py::arg("eta"));
  m.def("select_truncation_level",
        [](const std::vector<double>& sv, double tau, double rho) {
          return select_truncation_level(sv, TruncationRule{tau, rho});
        },
        py::arg("singular_values"), py::arg("tau") = 1e-3, py::arg("rho") = 0.9);

  // Models.
  py::class_<FactorModel>(m, "FactorModel")
      .def_property_readonly("kind", [](const FactorModel& f) { return to_string(f.kind()); })
      .def_property_readonly("L_eff", &FactorModel::L_eff)
      .def_property_readonly("gamma", &FactorModel::gamma)
      .def_property_readonly("n", &FactorModel::n)
      .def_property_readonly("ell", [](const FactorModel& f) { return f.provenance().ell; })
      .def("objective", &FactorModel::objective, py::arg("x"))
      .def("gradient", &FactorModel::gradient, py::arg("x"))
      .def("dense_covariance", &FactorModel::dense_covariance);
  m.def("build_model", &build_model, py::arg("returns"), py::arg("kind") = "str",
        py::arg("sketch") = "gaussian_jl", py::arg("s") = 1, py::arg("seed") = 0,
        py::arg("ell") = std::nullopt, py::arg("tau") = 1e-3, py::arg("rho") = 0.9,
        py::arg("kappa_target") = 1e3, py::arg("gamma") = std::nullopt);

  // Feasible set and projections.
  py::class_<FeasibleSet>(m, "FeasibleSet")
      .def(py::init<Eigen::VectorXd, double>(), py::arg("mu"), py::arg("R_target"))
      .def_property_readonly("mu", &FeasibleSet::mu)
      .def_property_readonly("R_target", &FeasibleSet::R_target)
      .def("nonempty", &FeasibleSet::nonempty)
      .def("contains", &FeasibleSet::contains, py::arg("x"), py::arg("tol") = 1e-10);
  m.def("project_simplex", &project_simplex, py::arg("v"));
  m.def("project_feasible",
        [](const Eigen::VectorXd& v, const FeasibleSet& F, const std::string& cfg) {
          ProjectionDiagnostics d;
          Eigen::VectorXd x = project_feasible(v, F, projection_config_from_json(parse_or_empty(cfg)), &d);
          py::dict diag;
          diag["halfspace_active"] = d.halfspace_active;
          diag["nu"] = d.nu;
          diag["used_fallback"] = d.used_fallback;
          diag["return_residual"] = d.return_residual;
          return py::make_tuple(x, diag);
        },
        py::arg("v"), py::arg("F"), py::arg("config") = "");
  m.def("dykstra_project",
        [](const Eigen::VectorXd& v, const FeasibleSet& F, const std::string& cfg) {
          return dykstra_project(v, F, projection_config_from_json(parse_or_empty(cfg)));
        },
        py::arg("v"), py::arg("F"), py::arg("config") = "");
  m.def("project_exact", &project_exact, py::arg("v"), py::arg("F"));

  // Solvers.
  m.def("solve",
        [](const FactorModel& model, const FeasibleSet& F, std::optional<Eigen::VectorXd> x0,
           const std::string& solver_cfg, const std::string& proj_cfg) {
          const SolveResult r = solve(model, F, x0, solver_config_from_json(parse_or_empty(solver_cfg)),
                                      projection_config_from_json(parse_or_empty(proj_cfg)));
          return to_json(r).dump();
        },
        py::arg("model"), py::arg("F"), py::arg("x0") = std::nullopt, py::arg("solver") = "",
        py::arg("projection") = "");
  m.def("solve_exact",
        [](const Eigen::MatrixXd& Sigma, const FeasibleSet& F) {
          const ExactSolution s = solve_exact(mean_variance_qp(Sigma, F));
          return py::make_tuple(s.x, s.value);
        },
        py::arg("Sigma"), py::arg("F"));

  // Metrics.
  m.def("relative_spectral_error", &relative_spectral_error, py::arg("Sigma_hat"),
        py::arg("Sigma"));
  m.def("objective_gap", &objective_gap, py::arg("f_hat"), py::arg("f_ref"));
  m.def("condition_number",
        [](const FactorModel& model) { return conditioning_report(model).kappa; },
        py::arg("model"));
  m.def("annualize",
        [](const std::vector<double>& r, int per_year) {
          const PortfolioStats s = annualize(r, per_year);
          return py::make_tuple(s.annualized_return, s.annualized_vol);
        },
        py::arg("interval_returns"), py::arg("intervals_per_year") = kIntervalsPerYear);

  m.def("run_bench", &run_bench, py::arg("experiment"), py::arg("config") = "");
}
