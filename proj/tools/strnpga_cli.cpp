// strnpga command-line interface.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "strnpga/bench.hpp"
#include "strnpga/error.hpp"
#include "strnpga/metrics.hpp"
#include "strnpga/oracle.hpp"
#include "strnpga/panel.hpp"
#include "strnpga/random.hpp"
#include "strnpga/sketch.hpp"

namespace fs = std::filesystem;
using namespace strnpga;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument:
      return kUsage;
    case ErrorKind::Format:
    case ErrorKind::Parse:
    case ErrorKind::Dimension:
    case ErrorKind::Infeasible:
      return kData;
    case ErrorKind::Numeric:
    case ErrorKind::Degenerate:
    case ErrorKind::ProjectionFailure:
      return kNumeric;
  }
  return kNumeric;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Format, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, "'" + path + "': " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Format, "cannot write '" + path + "'");
  out << text;
}

void emit(const json& j, const std::string& path) { write_text(path, j.dump(2) + "\n"); }

Eigen::VectorXd parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      require(item.find_first_not_of(" \t", used) == std::string::npos, ErrorKind::Parse,
              "trailing characters in '" + item + "'");
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Parse, "not a number: '" + item + "'");
    }
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<double> as_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int threads = 1;
  bool seed_set = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON configuration file");
  app->add_option("--out", c.out, "output path (default: stdout)");
  app->add_option("--seed", c.seed, "master seed")->each([&c](const std::string&) {
    c.seed_set = true;
  });
  app->add_option("--tol", c.tol, "solver tolerance override")->check(CLI::PositiveNumber);
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg =
      c.config.empty() ? ExperimentConfig{} : ExperimentConfig::from_json(read_json_file(c.config));
  if (c.seed_set) cfg.seed = c.seed;
  if (c.tol > 0.0) cfg.solver.tol = c.tol;
  cfg.threads = c.threads;
  cfg.validate();
  return cfg;
}

// ----------------------------------------------------------------- synth

struct SynthOpts {
  Common common;
  SyntheticSpec spec;
};

int run_synth(const SynthOpts& o) {
  SyntheticSpec spec = o.spec;
  if (!o.common.config.empty()) {
    const ExperimentConfig cfg = load_config(o.common);
    if (cfg.synthetic) spec = *cfg.synthetic;
  }
  spec.seed = o.common.seed;
  const ReturnPanel panel = generate_synthetic(spec);
  std::ostringstream os;
  os.precision(17);
  write_panel(panel, os);
  write_text(o.common.out, os.str());
  return kOk;
}

// -------------------------------------------------------------- spectrum

struct SpectrumOpts {
  Common common;
  std::string panel;
  std::string sketch;
  Eigen::Index s = 0;
  std::string dump_sketch;
  double eta = 0.98;
  TruncationRule rule;
};

int run_spectrum(const SpectrumOpts& o) {
  require(!o.panel.empty(), ErrorKind::Argument, "spectrum needs --panel");
  const CovarianceFactor f = center_and_factor(load_panel(o.panel));
  Eigen::MatrixXd A = f.L;
  json out{{"panel", o.panel}, {"n", f.n()}, {"T", f.T()}};
  if (!o.sketch.empty()) {
    const SketchConfig cfg{sketch_kind_from_string(o.sketch), o.s, o.common.seed};
    A = apply_sketch(f.L, cfg).Ltilde;
    out["sketch"] = {{"kind", to_string(cfg.kind)}, {"s", cfg.s}, {"seed", cfg.seed}};
    if (!o.dump_sketch.empty()) {
      std::ostringstream os;
      write_sketch_csv(materialize_sketch(f.T(), cfg), os);
      write_text(o.dump_sketch, os.str());
    }
  }
  const SpectrumReport rep = spectrum_report(A);
  out["spectrum"] = to_json(rep);
  out["truncation_level"] = select_truncation_level(rep.singular_values, o.rule);
  out["rule"] = {{"tau", o.rule.tau}, {"rho", o.rule.rho}};
  if (!rep.zero_energy) {
    out["eta"] = o.eta;
    out["energy_rank"] = energy_rank(rep.energy, o.eta);
  }
  emit(out, o.common.out);
  return kOk;
}

// --------------------------------------------------------------- project

struct ProjectOpts {
  Common common;
  std::string v, mu;
  double R = 0.0;
  bool exact = false;
};

int run_project(const ProjectOpts& o) {
  Eigen::VectorXd v, mu;
  double R = o.R;
  ProjectionConfig pcfg;
  if (!o.common.config.empty()) {
    const json j = read_json_file(o.common.config);
    try {
      v = Eigen::Map<const Eigen::VectorXd>(j.at("v").get<std::vector<double>>().data(),
                                            static_cast<Eigen::Index>(j.at("v").size()));
      mu = Eigen::Map<const Eigen::VectorXd>(j.at("mu").get<std::vector<double>>().data(),
                                             static_cast<Eigen::Index>(j.at("mu").size()));
      R = j.at("R_target").get<double>();
      if (j.contains("projection")) pcfg = projection_config_from_json(j.at("projection"));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Format, std::string("project config: ") + e.what());
    }
  } else {
    require(!o.v.empty() && !o.mu.empty(), ErrorKind::Argument,
            "project needs --v and --mu (or --config)");
    v = parse_list(o.v);
    mu = parse_list(o.mu);
  }
  if (o.common.tol > 0.0) pcfg.tol_scalar = o.common.tol;
  require(v.size() == mu.size(), ErrorKind::Dimension, "v and mu differ in length");
  const FeasibleSet F(mu, R);
  ProjectionDiagnostics d;
  const Eigen::VectorXd x = project_feasible(v, F, pcfg, &d);
  json out{{"x", as_std(x)},
           {"halfspace_active", d.halfspace_active},
           {"nu", d.nu},
           {"bracket_doublings", d.bracket_doublings},
           {"bisection_iters", d.bisection_iters},
           {"return_residual", d.return_residual},
           {"used_fallback", d.used_fallback},
           {"dykstra_iters", d.dykstra_iters}};
  if (o.exact) {
    const Eigen::VectorXd xe = project_exact(v, F);
    out["x_exact"] = as_std(xe);
    out["distance_to_exact"] = (x - xe).norm();
  }
  emit(out, o.common.out);
  return kOk;
}

// ----------------------------------------------------------------- solve

struct SolveOpts {
  Common common;
  std::string panel;
  std::string model = "baseline";
  std::string sketch = "gaussian_jl";
  double s_over_ell = 2.0;
  double eta = 0.98;
  double quantile = 0.6;
};

int run_solve(const SolveOpts& o) {
  ExperimentConfig cfg = load_config(o.common);
  if (!o.panel.empty()) cfg.panel_path = o.panel;
  require(!cfg.panel_path.empty() || cfg.synthetic, ErrorKind::Argument,
          "solve needs --panel or a config with a synthetic spec");
  ModelSpec m;
  if (!cfg.models.empty()) {
    m = cfg.models.front();
  } else {
    m.kind = model_kind_from_string(o.model);
    m.sketch = sketch_kind_from_string(o.sketch);
    m.s_over_ell = o.s_over_ell;
    m.eta = o.eta;
  }
  // A solve is the real-panel pipeline without the split: one model, no test.
  ReturnPanel panel = [&] {
    if (!cfg.panel_path.empty()) return load_panel(cfg.panel_path);
    SyntheticSpec spec = *cfg.synthetic;
    spec.seed = cfg.instance_seed.value_or(substream_seed(substream_seed(cfg.seed, 0), 1));
    return generate_synthetic(spec);
  }();
  const CovarianceFactor f = center_and_factor(panel);
  Eigen::VectorXd mu = f.mean;
  if (cfg.panel_path.empty()) {
    Rng rng(substream_seed(substream_seed(cfg.seed, 0), 2));
    mu = gaussian_vector(f.n(), rng);
  }
  const double q = o.common.config.empty() ? o.quantile : cfg.return_quantile;
  const FeasibleSet F(mu, quantile(as_std(mu), q));

  std::optional<FactorModel> model;
  const std::uint64_t sketch_seed = substream_seed(substream_seed(cfg.seed, 0), 3);
  Eigen::Index ell = 0, s = 0;
  if (m.kind == ModelKind::baseline) {
    model.emplace(build_baseline(f));
  } else {
    const SpectrumReport rep = spectrum_report(f.L);
    require(!rep.zero_energy, ErrorKind::Degenerate, "panel has a zero spectrum");
    ell = m.ell > 0 ? m.ell : energy_rank(rep.energy, m.eta);
    s = m.s > 0 ? m.s
                : static_cast<Eigen::Index>(std::ceil(m.s_over_ell * static_cast<double>(ell)));
    s = std::clamp<Eigen::Index>(s, 1, f.T());
    if (m.sketch == SketchKind::identity) s = f.T();
    const SketchConfig sk{m.sketch, s, sketch_seed};
    if (m.kind == ModelKind::sketch)
      model.emplace(build_sketch(f, sk));
    else
      model.emplace(build_str_at_level(f, sk, ell, RidgePolicy::target(m.kappa_target)));
  }
  const SolveResult r = solve(*model, F, {}, cfg.solver, cfg.projection);
  json out = to_json(r);
  out["model"] = {{"kind", to_string(model->kind())}, {"gamma", model->gamma()}};
  if (m.kind != ModelKind::baseline) {
    out["model"]["sketch"] = to_string(m.sketch);
    out["model"]["s"] = s;
    out["model"]["ell"] = model->provenance().ell.value_or(ell);
  }
  out["R_target"] = F.R_target();
  out["return_quantile"] = q;
  out["seed"] = cfg.seed;
  out["solver"] = to_json(cfg.solver);
  emit(out, o.common.out);
  return kOk;
}

// ----------------------------------------------------------------- bench

int run_bench(const std::string& which, const Common& c) {
  const ExperimentConfig cfg = load_config(c);
  BenchReport report;
  if (which == "approx") {
    report = run_approximation_sweep(cfg);
  } else if (which == "rate") {
    report = run_rate_experiment(cfg);
  } else if (which == "solver") {
    report = run_solver_benchmark(cfg);
  } else {
    report = run_real_panel(cfg);
  }
  const std::string out = !c.out.empty() ? c.out : cfg.output;
  emit(report.to_json(), out);
  if (!out.empty() && out != "-") {
    const fs::path base(out);
    for (const auto& [name, csv] : report.csv_tables) {
      fs::path p = base;
      p.replace_filename(base.stem().string() + "_" + name + ".csv");
      write_text(p.string(), csv);
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketch-truncate-ridge covariance models and accelerated projected gradient"};
  app.require_subcommand(1);

  SynthOpts synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic return panel as CSV");
  add_common(synth_cmd, synth.common);
  synth_cmd->add_option("--n", synth.spec.n, "assets");
  synth_cmd->add_option("--T", synth.spec.T, "periods");
  synth_cmd->add_option("--decay", synth.spec.singular_decay, "geometric singular decay");
  synth_cmd->add_option("--floor", synth.spec.noise_floor, "singular value floor");
  synth_cmd->add_option("--scale", synth.spec.leading_scale, "leading singular value");

  SpectrumOpts spec;
  auto* spec_cmd = app.add_subcommand("spectrum", "spectrum report of a panel (or its sketch)");
  add_common(spec_cmd, spec.common);
  spec_cmd->add_option("--panel", spec.panel, "panel CSV")->required();
  spec_cmd->add_option("--sketch", spec.sketch, "gaussian_jl | countsketch | identity");
  spec_cmd->add_option("--s", spec.s, "sketch size");
  spec_cmd->add_option("--dump-sketch", spec.dump_sketch, "write the dense sketch matrix as CSV");
  spec_cmd->add_option("--eta", spec.eta, "retained energy for energy_rank");
  spec_cmd->add_option("--tau", spec.rule.tau, "head threshold");
  spec_cmd->add_option("--rho", spec.rule.rho, "knee threshold");

  ProjectOpts proj;
  auto* proj_cmd = app.add_subcommand("project", "project a point onto the feasible set");
  add_common(proj_cmd, proj.common);
  proj_cmd->add_option("--v", proj.v, "comma-separated point");
  proj_cmd->add_option("--mu", proj.mu, "comma-separated expected returns");
  proj_cmd->add_option("--R", proj.R, "return target");
  proj_cmd->add_flag("--exact", proj.exact, "also run the enumeration oracle (n <= 14)");

  SolveOpts solve_opts;
  auto* solve_cmd = app.add_subcommand("solve", "solve one mean-variance problem");
  add_common(solve_cmd, solve_opts.common);
  solve_cmd->add_option("--panel", solve_opts.panel, "panel CSV");
  solve_cmd->add_option("--model", solve_opts.model, "baseline | sketch | str");
  solve_cmd->add_option("--sketch", solve_opts.sketch, "gaussian_jl | countsketch | identity");
  solve_cmd->add_option("--s-over-ell", solve_opts.s_over_ell, "sketch oversampling");
  solve_cmd->add_option("--eta", solve_opts.eta, "retained energy");
  solve_cmd->add_option("--quantile", solve_opts.quantile, "return target quantile of mu");

  Common bench;
  std::string which;
  auto* bench_cmd = app.add_subcommand("bench", "run an experiment and write a JSON report");
  add_common(bench_cmd, bench);
  bench_cmd->add_option("experiment", which, "approx | rate | solver | real")
      ->required()
      ->check(CLI::IsMember({"approx", "rate", "solver", "real"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*spec_cmd) return run_spectrum(spec);
    if (*proj_cmd) return run_project(proj);
    if (*solve_cmd) return run_solve(solve_opts);
    if (*bench_cmd) return run_bench(which, bench);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error (Format): " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error (Format): " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}
