#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "strnpga/panel.hpp"
#include "strnpga/projection.hpp"
#include "strnpga/solver.hpp"
#include "strnpga/spectrum.hpp"
#include "strnpga/str.hpp"

namespace strnpga {

using json = nlohmann::json;

/// One model of a sweep. For sketch and str kinds the sketch size is
/// `s` when positive, otherwise ceil(s_over_ell * ell); ell comes from an
/// explicit level, from energy_rank(eta) on the exact spectrum, or from the
/// (tau, rho) rule when use_rule is set.
struct ModelSpec {
  ModelKind kind = ModelKind::str;
  SketchKind sketch = SketchKind::gaussian_jl;
  Eigen::Index s = 0;
  double s_over_ell = 2.0;
  double eta = 0.98;
  Eigen::Index ell = 0;
  bool use_rule = false;
  TruncationRule rule;
  double kappa_target = 1e3;
  /// When set, gamma = gamma_scale * ||Sigma||_2 instead of the kappa target.
  std::optional<double> gamma_scale;
  std::string label;  // defaults to the kind (and sketch) name

  std::string name() const;
};

/// Grids crossed with every model; an empty grid keeps the model's value.
struct SweepGrid {
  std::vector<double> s_over_ell;
  std::vector<double> eta;
  std::vector<double> gamma_scale;
};

struct RateSettings {
  Eigen::Index n = 12;
  Eigen::Index T = 6;       // T < n makes the gamma = 0 case rank deficient
  int iterations = 500;
  double kappa_target = 100.0;  // ridge of the strongly convex case
};

struct ExperimentConfig {
  std::optional<SyntheticSpec> synthetic;
  std::string panel_path;
  std::vector<ModelSpec> models;
  SweepGrid sweep;
  SolverConfig solver;
  ProjectionConfig projection;
  int repetitions = 1;
  int warmup = 1;
  std::uint64_t seed = 0;
  /// Pins the synthetic instance; otherwise each repetition draws its own.
  std::optional<std::uint64_t> instance_seed;
  int threads = 1;
  double return_quantile = 0.6;
  double train_fraction = 2.0 / 3.0;
  /// Tolerance of the unreduced reference solve when n is too large for the
  /// exact oracle.
  double reference_tol = 1e-10;
  int reference_max_iters = 50000;
  RateSettings rate;
  std::vector<Eigen::Index> solver_sizes{10, 600};
  double solver_T_ratio = 4.0;  // T = ratio * n in the solver benchmark
  int gradient_samples = 100;
  /// Solver benchmark only: residual check every 5 iterations and projection
  /// tolerance 1e-8, as in the timing protocol.
  bool timing_mode = true;
  std::string output;

  void validate() const;
  static ExperimentConfig from_json(const json& j);
  json to_json() const;
};

struct BenchReport {
  std::string experiment;
  json metadata = json::object();
  json rows = json::array();
  json summary = json::array();
  json seed_ledger = json::array();
  std::map<std::string, std::string> csv_tables;

  json to_json() const;
};

/// Sketch-size / energy / ridge sweep on a synthetic instance or a panel:
/// spectral error, full-objective gap and conditioning per model.
BenchReport run_approximation_sweep(const ExperimentConfig& cfg);

/// Objective-gap traces for a gamma = 0 case (FISTA) and a gamma > 0 STR
/// case (constant momentum) against the exact oracle, with fitted rates.
BenchReport run_rate_experiment(const ExperimentConfig& cfg);

/// Repeated-median build, solve and gradient timings over problem sizes.
BenchReport run_solver_benchmark(const ExperimentConfig& cfg);

/// Train/test split of a return panel with annualized out-of-sample stats.
BenchReport run_real_panel(const ExperimentConfig& cfg);

/// Empirical quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

double median(std::vector<double> values);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Copy of a report with every key ending in "_time" removed, recursively.
json strip_timings(const json& j);

json to_json(const SolverConfig& cfg);
json to_json(const ProjectionConfig& cfg);
json to_json(const SolveResult& r);
json to_json(const SpectrumReport& r);
SolverConfig solver_config_from_json(const json& j, SolverConfig base = {});
ProjectionConfig projection_config_from_json(const json& j,
                                             ProjectionConfig base = {});

}  // namespace strnpga
