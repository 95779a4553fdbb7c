#include "strnpga/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include "strnpga/error.hpp"
#include "strnpga/metrics.hpp"
#include "strnpga/oracle.hpp"
#include "strnpga/random.hpp"
#include "strnpga/sketch.hpp"

namespace strnpga {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Runs fn(0..count-1) on up to `threads` workers. Each task writes only its
// own slot, so results do not depend on scheduling.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json conditioning_json(const ConditioningReport& c) {
  return {{"lambda_min", c.lambda_min},
          {"lambda_max", c.lambda_max},
          {"kappa", number_or_null(c.kappa)},
          {"kappa_infinite", c.infinite},
          {"closed_form", c.closed_form}};
}

json error_json(const std::exception& e) {
  json j{{"message", e.what()}};
  if (const auto* err = dynamic_cast<const Error*>(&e)) j["kind"] = to_string(err->kind());
  return j;
}

// Instance shared by every model of one repetition.
struct Instance {
  CovarianceFactor factor;
  Eigen::MatrixXd Sigma;
  SpectrumReport spectrum;
  double sigma_norm = 0.0;
  std::optional<FeasibleSet> F;
  double f_ref = 0.0;
  std::string reference;  // "oracle" or "npga_dense"
};

// Panels carry their own expected returns; synthetic panels have zero row
// means by construction, so their mu is drawn from a seeded substream.
Eigen::VectorXd mu_for(bool panel_means, const CovarianceFactor& factor,
                       std::uint64_t mu_seed) {
  if (panel_means) return factor.mean;
  Rng rng(mu_seed);
  return gaussian_vector(factor.n(), rng);
}

void attach_reference(const ExperimentConfig& cfg, Instance& inst) {
  const FeasibleSet& F = *inst.F;
  if (inst.factor.n() <= kOracleMaxAssets) {
    inst.f_ref = solve_exact(mean_variance_qp(inst.Sigma, F)).value;
    inst.reference = "oracle";
    return;
  }
  SolverConfig ref = cfg.solver;
  ref.tol = cfg.reference_tol;
  ref.max_iters = cfg.reference_max_iters;
  ref.record_objective = false;
  inst.f_ref = solve_dense(inst.Sigma, F, {}, ref, cfg.projection).objective;
  inst.reference = "npga_dense";
}

Instance make_instance(const ExperimentConfig& cfg, CovarianceFactor factor,
                       bool panel_means, std::uint64_t mu_seed) {
  Instance inst;
  inst.factor = std::move(factor);
  inst.Sigma = inst.factor.L * inst.factor.L.transpose();
  inst.spectrum = spectrum_report(inst.factor.L);
  inst.sigma_norm = inst.spectrum.eigenvalues.empty() ? 0.0 : inst.spectrum.eigenvalues.front();
  const Eigen::VectorXd mu = mu_for(panel_means, inst.factor, mu_seed);
  std::vector<double> m(mu.data(), mu.data() + mu.size());
  inst.F.emplace(mu, quantile(m, cfg.return_quantile));
  attach_reference(cfg, inst);
  return inst;
}

ReturnPanel load_or_generate(const ExperimentConfig& cfg, std::uint64_t instance_seed) {
  if (!cfg.panel_path.empty()) return load_panel(cfg.panel_path);
  SyntheticSpec spec = cfg.synthetic.value_or(SyntheticSpec{});
  spec.seed = cfg.instance_seed.value_or(instance_seed);
  return generate_synthetic(spec);
}

struct BuiltModel {
  std::optional<FactorModel> model;
  Eigen::Index ell = 0;
  Eigen::Index s = 0;
  double build_time = 0.0;
};

Eigen::Index level_for(const ModelSpec& m, const Instance& inst) {
  if (m.ell > 0) return m.ell;
  if (m.use_rule) return select_truncation_level(inst.spectrum.singular_values, m.rule);
  require(!inst.spectrum.zero_energy, ErrorKind::Degenerate,
          "energy mapping needs a nonzero spectrum");
  return energy_rank(inst.spectrum.energy, m.eta);
}

BuiltModel build_model(const ModelSpec& m, const Instance& inst, std::uint64_t sketch_seed) {
  BuiltModel out;
  const CovarianceFactor& f = inst.factor;
  const auto start = Clock::now();
  if (m.kind == ModelKind::baseline) {
    out.model.emplace(build_baseline(f));
    out.build_time = seconds_since(start);
    return out;
  }
  out.ell = level_for(m, inst);
  if (m.sketch == SketchKind::identity) {
    out.s = f.T();
  } else if (m.s > 0) {
    out.s = m.s;
  } else {
    out.s = static_cast<Eigen::Index>(std::ceil(m.s_over_ell * static_cast<double>(out.ell)));
  }
  out.s = std::clamp<Eigen::Index>(out.s, 1, f.T());
  const SketchConfig sk{m.sketch, out.s, sketch_seed};
  const RidgePolicy ridge = m.gamma_scale
                                ? RidgePolicy::fixed(*m.gamma_scale * inst.sigma_norm)
                                : RidgePolicy::target(m.kappa_target);
  if (m.kind == ModelKind::sketch) {
    FactorModel base = build_sketch(f, sk);
    const double gamma = m.gamma_scale ? *m.gamma_scale * inst.sigma_norm : 0.0;
    out.model.emplace(ModelKind::sketch, base.L_eff(), gamma, base.provenance());
  } else if (m.use_rule && m.ell == 0) {
    out.model.emplace(build_str(f, sk, m.rule, ridge));
  } else {
    out.model.emplace(build_str_at_level(f, sk, out.ell, ridge));
  }
  out.build_time = seconds_since(start);
  if (out.model->provenance().ell) out.ell = *out.model->provenance().ell;
  return out;
}

json model_params(const ModelSpec& m, const BuiltModel& b) {
  json p{{"model", m.name()}, {"kind", to_string(m.kind)}};
  if (m.kind != ModelKind::baseline) {
    p["sketch"] = to_string(m.sketch);
    p["s"] = b.s;
    p["ell"] = b.ell;
    p["s_over_ell"] = m.s_over_ell;
    p["eta"] = m.eta;
    p["use_rule"] = m.use_rule;
    if (m.gamma_scale) p["gamma_scale"] = *m.gamma_scale;
    else p["kappa_target"] = m.kappa_target;
  }
  if (b.model) p["gamma"] = b.model->gamma();
  return p;
}

// Cartesian product of the sweep grids applied to one model.
std::vector<ModelSpec> expand(const ModelSpec& m, const SweepGrid& grid) {
  if (m.kind == ModelKind::baseline) return {m};
  std::vector<ModelSpec> out{m};
  auto cross = [&](const std::vector<double>& values, auto setter) {
    if (values.empty()) return;
    std::vector<ModelSpec> next;
    for (const ModelSpec& base : out)
      for (double v : values) {
        ModelSpec c = base;
        setter(c, v);
        next.push_back(c);
      }
    out = std::move(next);
  };
  cross(grid.s_over_ell, [](ModelSpec& c, double v) { c.s_over_ell = v; });
  cross(grid.eta, [](ModelSpec& c, double v) { c.eta = v; });
  cross(grid.gamma_scale, [](ModelSpec& c, double v) { c.gamma_scale = v; });
  return out;
}

std::vector<ModelSpec> models_or_default(const ExperimentConfig& cfg) {
  if (!cfg.models.empty()) return cfg.models;
  ModelSpec base;
  base.kind = ModelKind::baseline;
  return {base, ModelSpec{}};
}

json environment_metadata(const ExperimentConfig& cfg, const std::string& experiment) {
  json env{{"library", "strnpga"},
           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                         std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION)},
           {"threads", cfg.threads},
#if defined(__VERSION__)
           {"compiler", __VERSION__},
#endif
           {"experiment", experiment}};
  return {{"environment", env}, {"config", cfg.to_json()}};
}

std::uint64_t rep_seed(const ExperimentConfig& cfg, int rep) {
  return substream_seed(cfg.seed, static_cast<std::uint64_t>(rep));
}

json seed_entry(int rep, bool warmup, std::uint64_t seed) {
  return {{"rep", rep},
          {"warmup", warmup},
          {"rep_seed", seed},
          {"instance_seed", substream_seed(seed, 1)},
          {"mu_seed", substream_seed(seed, 2)},
          {"sketch_seed", substream_seed(seed, 3)}};
}

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) {
    std::ostringstream os;
    os.precision(17);
    os << v.get<double>();
    return os.str();
  }
  return v.dump();
}

std::string rows_to_csv(const json& rows, const std::vector<std::string>& columns) {
  std::ostringstream os;
  for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
  os << "\n";
  for (const json& row : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      os << (c ? "," : "");
      const std::string& key = columns[c];
      if (row.contains(key)) os << csv_cell(row[key]);
    }
    os << "\n";
  }
  return os.str();
}

// Medians of the listed numeric fields over non-warmup, error-free rows that
// share the same value of `group_key`.
json summarize(const json& rows, const std::string& group_key,
               const std::vector<std::string>& fields) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const json*>> groups;
  for (const json& row : rows) {
    if (row.value("warmup", false) || row.contains("error")) continue;
    const std::string key = row.value(group_key, std::string());
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&row);
  }
  json out = json::array();
  for (const std::string& key : order) {
    const auto& members = groups[key];
    json s{{group_key, key}, {"count", members.size()}};
    for (const std::string& field : fields) {
      std::vector<double> values;
      for (const json* r : members)
        if (r->contains(field) && (*r)[field].is_number()) values.push_back((*r)[field].get<double>());
      s["median_" + field] = values.empty() ? json(nullptr) : json(median(values));
    }
    out.push_back(s);
  }
  return out;
}

std::string point_key(const json& params) {
  std::ostringstream os;
  os << params["model"].get<std::string>();
  if (params.contains("s_over_ell")) os << " s/ell=" << params["s_over_ell"].get<double>();
  if (params.contains("eta")) os << " eta=" << params["eta"].get<double>();
  if (params.contains("gamma_scale")) os << " gamma/|S|=" << params["gamma_scale"].get<double>();
  return os.str();
}

}  // namespace

std::string ModelSpec::name() const {
  if (!label.empty()) return label;
  if (kind == ModelKind::baseline) return "baseline";
  return std::string(to_string(kind)) + "_" + to_string(sketch);
}

double quantile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::Argument, "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, ErrorKind::Argument, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::Argument,
          "slope fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, ErrorKind::Degenerate, "slope fit over a single abscissa");
  return sxy / sxx;
}

json strip_timings(const json& j) {
  if (j.is_object()) {
    json out = json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& key = it.key();
      if (key.size() >= 5 && key.compare(key.size() - 5, 5, "_time") == 0) continue;
      out[key] = strip_timings(it.value());
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (const json& e : j) out.push_back(strip_timings(e));
    return out;
  }
  return j;
}

// ---------------------------------------------------------------- config io

json to_json(const SolverConfig& c) {
  json j{{"step_mode", to_string(c.step_mode)},
         {"step", c.step},
         {"backtrack_shrink", c.backtrack_shrink},
         {"momentum_mode", to_string(c.momentum_mode)},
         {"tol", c.tol},
         {"max_iters", c.max_iters},
         {"residual_check_stride", c.residual_check_stride},
         {"power_iters", c.power_iters},
         {"seed", c.seed},
         {"record_objective", c.record_objective}};
  if (c.m_f) j["m_f"] = *c.m_f;
  return j;
}

json to_json(const ProjectionConfig& c) {
  return {{"tol_scalar", c.tol_scalar},
          {"max_bracket_doublings", c.max_bracket_doublings},
          {"max_bisection_iters", c.max_bisection_iters},
          {"dykstra_max_iters", c.dykstra_max_iters},
          {"dykstra_tol", c.dykstra_tol}};
}

json to_json(const SolveResult& r) {
  return {{"x", std::vector<double>(r.x.data(), r.x.data() + r.x.size())},
          {"objective", r.objective},
          {"iterations", r.iterations},
          {"termination", to_string(r.termination)},
          {"final_residual", r.residual_trace.empty() ? json(nullptr) : json(r.residual_trace.back())},
          {"residual_trace", r.residual_trace},
          {"residual_iterations", r.residual_iterations},
          {"step_used", r.step_used},
          {"L_f_estimate", r.L_f_estimate},
          {"m_f", r.m_f},
          {"projection_fallbacks", r.projection_fallbacks},
          {"solve_time", r.wall_time}};
}

json to_json(const SpectrumReport& r) {
  return {{"singular_values", r.singular_values},
          {"eigenvalues", r.eigenvalues},
          {"energy", r.energy},
          {"numerical_rank", r.numerical_rank},
          {"zero_energy", r.zero_energy}};
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::Format, where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    require(allowed.count(it.key()) > 0, ErrorKind::Format,
            "unknown key '" + it.key() + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, std::string("bad value for '") + key + "': " + e.what());
  }
}

ModelSpec model_from_json(const json& j) {
  check_keys(j, {"kind", "sketch", "s", "s_over_ell", "eta", "ell", "rule", "kappa_target",
                 "gamma_scale", "label"},
             "model");
  ModelSpec m;
  std::string kind = to_string(m.kind), sketch = to_string(m.sketch);
  read(j, "kind", kind);
  read(j, "sketch", sketch);
  m.kind = model_kind_from_string(kind);
  m.sketch = sketch_kind_from_string(sketch);
  read(j, "s", m.s);
  read(j, "s_over_ell", m.s_over_ell);
  read(j, "eta", m.eta);
  read(j, "ell", m.ell);
  read(j, "kappa_target", m.kappa_target);
  read(j, "label", m.label);
  if (j.contains("gamma_scale")) {
    double g = 0.0;
    read(j, "gamma_scale", g);
    m.gamma_scale = g;
  }
  if (j.contains("rule")) {
    const json& r = j.at("rule");
    check_keys(r, {"tau", "rho"}, "rule");
    read(r, "tau", m.rule.tau);
    read(r, "rho", m.rule.rho);
    m.use_rule = true;
  }
  return m;
}

json model_to_json(const ModelSpec& m) {
  json j{{"kind", to_string(m.kind)}};
  if (!m.label.empty()) j["label"] = m.label;
  if (m.kind == ModelKind::baseline) return j;
  j["sketch"] = to_string(m.sketch);
  if (m.s > 0) j["s"] = m.s;
  j["s_over_ell"] = m.s_over_ell;
  j["eta"] = m.eta;
  if (m.ell > 0) j["ell"] = m.ell;
  if (m.use_rule) j["rule"] = {{"tau", m.rule.tau}, {"rho", m.rule.rho}};
  j["kappa_target"] = m.kappa_target;
  if (m.gamma_scale) j["gamma_scale"] = *m.gamma_scale;
  return j;
}

}  // namespace

SolverConfig solver_config_from_json(const json& j, SolverConfig c) {
  check_keys(j, {"step_mode", "step", "backtrack_shrink", "momentum_mode", "tol", "max_iters",
                 "residual_check_stride", "power_iters", "seed", "m_f", "record_objective"},
             "solver");
  std::string step = to_string(c.step_mode), momentum = to_string(c.momentum_mode);
  read(j, "step_mode", step);
  read(j, "momentum_mode", momentum);
  c.step_mode = step_mode_from_string(step);
  c.momentum_mode = momentum_mode_from_string(momentum);
  read(j, "step", c.step);
  read(j, "backtrack_shrink", c.backtrack_shrink);
  read(j, "tol", c.tol);
  read(j, "max_iters", c.max_iters);
  read(j, "residual_check_stride", c.residual_check_stride);
  read(j, "power_iters", c.power_iters);
  read(j, "seed", c.seed);
  read(j, "record_objective", c.record_objective);
  if (j.contains("m_f")) {
    double m = 0.0;
    read(j, "m_f", m);
    c.m_f = m;
  }
  return c;
}

ProjectionConfig projection_config_from_json(const json& j, ProjectionConfig c) {
  check_keys(j, {"tol_scalar", "max_bracket_doublings", "max_bisection_iters",
                 "dykstra_max_iters", "dykstra_tol"},
             "projection");
  read(j, "tol_scalar", c.tol_scalar);
  read(j, "max_bracket_doublings", c.max_bracket_doublings);
  read(j, "max_bisection_iters", c.max_bisection_iters);
  read(j, "dykstra_max_iters", c.dykstra_max_iters);
  read(j, "dykstra_tol", c.dykstra_tol);
  return c;
}

void ExperimentConfig::validate() const {
  require(repetitions >= 1, ErrorKind::Argument, "repetitions must be >= 1");
  require(warmup >= 0, ErrorKind::Argument, "warmup must be >= 0");
  require(threads >= 1, ErrorKind::Argument, "threads must be >= 1");
  require(return_quantile >= 0.0 && return_quantile <= 1.0, ErrorKind::Argument,
          "return_quantile must lie in [0, 1]");
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorKind::Argument,
          "train_fraction must lie in (0, 1)");
  require(reference_tol > 0.0 && reference_max_iters > 0, ErrorKind::Argument,
          "reference solve settings must be positive");
  require(gradient_samples >= 1, ErrorKind::Argument, "gradient_samples must be >= 1");
  require(solver_T_ratio > 0.0, ErrorKind::Argument, "solver_T_ratio must be positive");
  for (Eigen::Index n : solver_sizes)
    require(n >= 2, ErrorKind::Argument, "solver sizes must be >= 2");
  for (const ModelSpec& m : models) {
    require(m.s >= 0 && m.ell >= 0, ErrorKind::Argument, "model s and ell must be >= 0");
    require(m.s_over_ell > 0.0, ErrorKind::Argument, "s_over_ell must be positive");
    require(m.eta > 0.0 && m.eta <= 1.0, ErrorKind::Argument, "eta must lie in (0, 1]");
    if (m.use_rule) m.rule.validate();
  }
  if (synthetic) synthetic->validate();
  solver.validate();
  projection.validate();
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, {"synthetic", "panel", "models", "sweep", "solver", "projection", "repetitions",
                 "warmup", "seed", "instance_seed", "threads", "return_quantile",
                 "train_fraction", "reference_tol", "reference_max_iters", "rate",
                 "solver_sizes", "solver_T_ratio", "gradient_samples", "timing_mode",
                 "output"},
             "config");
  ExperimentConfig c;
  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    check_keys(s, {"n", "T", "singular_decay", "leading_scale", "noise_floor"}, "synthetic");
    SyntheticSpec spec;
    read(s, "n", spec.n);
    read(s, "T", spec.T);
    read(s, "singular_decay", spec.singular_decay);
    read(s, "leading_scale", spec.leading_scale);
    read(s, "noise_floor", spec.noise_floor);
    c.synthetic = spec;
  }
  read(j, "panel", c.panel_path);
  if (j.contains("models")) {
    require(j.at("models").is_array(), ErrorKind::Format, "models must be an array");
    for (const json& m : j.at("models")) c.models.push_back(model_from_json(m));
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, {"s_over_ell", "eta", "gamma_scale"}, "sweep");
    read(s, "s_over_ell", c.sweep.s_over_ell);
    read(s, "eta", c.sweep.eta);
    read(s, "gamma_scale", c.sweep.gamma_scale);
  }
  if (j.contains("solver")) c.solver = solver_config_from_json(j.at("solver"));
  if (j.contains("projection")) c.projection = projection_config_from_json(j.at("projection"));
  read(j, "repetitions", c.repetitions);
  read(j, "warmup", c.warmup);
  read(j, "seed", c.seed);
  if (j.contains("instance_seed")) {
    std::uint64_t s = 0;
    read(j, "instance_seed", s);
    c.instance_seed = s;
  }
  read(j, "threads", c.threads);
  read(j, "return_quantile", c.return_quantile);
  read(j, "train_fraction", c.train_fraction);
  read(j, "reference_tol", c.reference_tol);
  read(j, "reference_max_iters", c.reference_max_iters);
  if (j.contains("rate")) {
    const json& r = j.at("rate");
    check_keys(r, {"n", "T", "iterations", "kappa_target"}, "rate");
    read(r, "n", c.rate.n);
    read(r, "T", c.rate.T);
    read(r, "iterations", c.rate.iterations);
    read(r, "kappa_target", c.rate.kappa_target);
  }
  read(j, "solver_sizes", c.solver_sizes);
  read(j, "solver_T_ratio", c.solver_T_ratio);
  read(j, "gradient_samples", c.gradient_samples);
  read(j, "timing_mode", c.timing_mode);
  read(j, "output", c.output);
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  if (synthetic)
    j["synthetic"] = {{"n", synthetic->n},
                      {"T", synthetic->T},
                      {"singular_decay", synthetic->singular_decay},
                      {"leading_scale", synthetic->leading_scale},
                      {"noise_floor", synthetic->noise_floor}};
  if (!panel_path.empty()) j["panel"] = panel_path;
  j["models"] = json::array();
  for (const ModelSpec& m : models) j["models"].push_back(model_to_json(m));
  j["sweep"] = {{"s_over_ell", sweep.s_over_ell},
                {"eta", sweep.eta},
                {"gamma_scale", sweep.gamma_scale}};
  j["solver"] = strnpga::to_json(solver);
  j["projection"] = strnpga::to_json(projection);
  j["repetitions"] = repetitions;
  j["warmup"] = warmup;
  j["seed"] = seed;
  if (instance_seed) j["instance_seed"] = *instance_seed;
  j["threads"] = threads;
  j["return_quantile"] = return_quantile;
  j["train_fraction"] = train_fraction;
  j["reference_tol"] = reference_tol;
  j["reference_max_iters"] = reference_max_iters;
  j["rate"] = {{"n", rate.n},
               {"T", rate.T},
               {"iterations", rate.iterations},
               {"kappa_target", rate.kappa_target}};
  j["solver_sizes"] = solver_sizes;
  j["solver_T_ratio"] = solver_T_ratio;
  j["gradient_samples"] = gradient_samples;
  j["timing_mode"] = timing_mode;
  return j;
}

json BenchReport::to_json() const {
  // CSV bodies carry timing columns; they are written beside the report.
  json tables = json::array();
  for (const auto& entry : csv_tables) tables.push_back(entry.first);
  return {{"experiment", experiment},
          {"metadata", metadata},
          {"seed_ledger", seed_ledger},
          {"rows", rows},
          {"summary", summary},
          {"csv_tables", tables}};
}

// ------------------------------------------------------------ experiments

BenchReport run_approximation_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.synthetic || !cfg.panel_path.empty(), ErrorKind::Argument,
          "approximation sweep needs a synthetic spec or a panel");
  BenchReport report;
  report.experiment = "approx";
  report.metadata = environment_metadata(cfg, report.experiment);

  std::vector<ModelSpec> points;
  for (const ModelSpec& m : models_or_default(cfg))
    for (const ModelSpec& p : expand(m, cfg.sweep)) points.push_back(p);

  const int total = cfg.warmup + cfg.repetitions;
  std::vector<json> slots(static_cast<std::size_t>(total), json::array());
  std::vector<json> instance_meta(static_cast<std::size_t>(total));

  parallel_for(total, cfg.threads, [&](int rep) {
    const bool warm = rep < cfg.warmup;
    const std::uint64_t seed = rep_seed(cfg, rep);
    json& rows = slots[static_cast<std::size_t>(rep)];
    Instance inst;
    try {
      inst = make_instance(cfg, center_and_factor(load_or_generate(cfg, substream_seed(seed, 1))),
                           !cfg.panel_path.empty(), substream_seed(seed, 2));
    } catch (const std::exception& e) {
      rows.push_back({{"rep", rep}, {"warmup", warm}, {"seed", seed}, {"error", error_json(e)}});
      return;
    }
    instance_meta[static_cast<std::size_t>(rep)] = {{"rep", rep},
                                                    {"n", inst.factor.n()},
                                                    {"T", inst.factor.T()},
                                                    {"R_target", inst.F->R_target()},
                                                    {"f_reference", inst.f_ref},
                                                    {"reference", inst.reference}};
    const bool small = inst.factor.n() <= kOracleMaxAssets;
    for (const ModelSpec& m : points) {
      json row{{"rep", rep}, {"warmup", warm}, {"seed", seed}};
      try {
        const BuiltModel b = build_model(m, inst, substream_seed(seed, 3));
        row.update(model_params(m, b));
        row["point"] = point_key(row);
        const FactorModel& model = *b.model;
        row["build_time"] = b.build_time;
        row["rel_spectral_error"] = relative_spectral_error(model.dense_covariance(), inst.Sigma);
        row["conditioning"] = conditioning_json(conditioning_report(model));
        const SolveResult r = solve(model, *inst.F, {}, cfg.solver, cfg.projection);
        row["solve_time"] = r.wall_time;
        row["iterations"] = r.iterations;
        row["termination"] = to_string(r.termination);
        row["objective"] = r.objective;
        const double full = r.x.dot(inst.Sigma * r.x);
        row["full_objective"] = full;
        row["full_model_gap"] = objective_gap(full, inst.f_ref);
        if (small) {
          const double v = solve_exact(mean_variance_qp(model.dense_covariance(), *inst.F)).value;
          row["model_gap"] = objective_gap(r.objective, v);
        } else {
          row["model_gap"] = nullptr;
        }
      } catch (const std::exception& e) {
        row["model"] = m.name();
        row["error"] = error_json(e);
      }
      rows.push_back(row);
    }
  });

  for (int rep = 0; rep < total; ++rep) {
    report.seed_ledger.push_back(seed_entry(rep, rep < cfg.warmup, rep_seed(cfg, rep)));
    for (const json& row : slots[static_cast<std::size_t>(rep)]) report.rows.push_back(row);
  }
  report.metadata["instances"] = instance_meta;
  report.metadata["return_quantile"] = cfg.return_quantile;
  report.summary = summarize(report.rows, "point",
                             {"rel_spectral_error", "full_model_gap", "model_gap", "build_time",
                              "solve_time", "iterations", "ell", "s"});
  report.csv_tables["rows"] = rows_to_csv(
      report.rows, {"rep", "warmup", "model", "sketch", "s", "ell", "s_over_ell", "eta",
                    "gamma", "rel_spectral_error", "full_model_gap", "model_gap", "iterations",
                    "build_time", "solve_time"});
  return report;
}

BenchReport run_rate_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.rate.n >= 2 && cfg.rate.n <= kOracleMaxAssets, ErrorKind::Argument,
          "rate experiment needs 2 <= n <= " + std::to_string(kOracleMaxAssets) +
              " for exact optima");
  require(cfg.rate.iterations >= 10, ErrorKind::Argument, "rate experiment needs >= 10 iterations");
  require(cfg.rate.kappa_target > 1.0, ErrorKind::Argument, "rate kappa_target must exceed 1");
  BenchReport report;
  report.experiment = "rate";
  report.metadata = environment_metadata(cfg, report.experiment);

  const int total = cfg.warmup + cfg.repetitions;
  std::vector<json> slots(static_cast<std::size_t>(total), json::array());
  std::vector<std::string> traces(static_cast<std::size_t>(total));

  parallel_for(total, cfg.threads, [&](int rep) {
    const bool warm = rep < cfg.warmup;
    const std::uint64_t seed = rep_seed(cfg, rep);
    SyntheticSpec spec = cfg.synthetic.value_or(SyntheticSpec{});
    spec.n = cfg.rate.n;
    spec.T = cfg.rate.T;
    spec.noise_floor = 0.0;
    spec.seed = cfg.instance_seed.value_or(substream_seed(seed, 1));
    const CovarianceFactor factor = center_and_factor(generate_synthetic(spec));
    Rng rng(substream_seed(seed, 2));
    const Eigen::VectorXd mu = gaussian_vector(spec.n, rng);
    const FeasibleSet F(mu, quantile(std::vector<double>(mu.data(), mu.data() + mu.size()),
                                     cfg.return_quantile));

    SolverConfig sc = cfg.solver;
    sc.record_objective = true;
    sc.max_iters = cfg.rate.iterations;
    sc.tol = 1e-300;
    sc.residual_check_stride = 1;

    struct Case {
      std::string name;
      FactorModel model;
      MomentumMode momentum;
    };
    const FactorModel convex = build_baseline(factor);
    const Eigen::Index rank = std::min<Eigen::Index>(spec.n, spec.T - 1);
    const FactorModel strong = build_str_at_level(
        factor, {SketchKind::gaussian_jl, spec.T, substream_seed(seed, 3)}, rank,
        RidgePolicy::target(cfg.rate.kappa_target));
    const std::vector<Case> cases{{"convex", convex, MomentumMode::fista},
                                  {"strongly_convex", strong, MomentumMode::strongly_convex}};

    std::ostringstream csv;
    csv.precision(17);
    for (const Case& c : cases) {
      json row{{"rep", rep}, {"warmup", warm}, {"seed", seed}, {"case", c.name},
               {"model", to_string(c.model.kind())}, {"gamma", c.model.gamma()}};
      try {
        SolverConfig run = sc;
        run.momentum_mode = c.momentum;
        if (c.momentum == MomentumMode::strongly_convex && run.step_mode == StepMode::backtracking)
          run.step_mode = StepMode::fixed_auto;
        const double f_star = solve_exact(mean_variance_qp(c.model.dense_covariance(), F)).value;
        const SolveResult r = solve(c.model, F, {}, run, cfg.projection);
        const double floor = 1e-13 * std::max(1.0, std::abs(f_star));
        std::vector<double> gaps;
        for (double f : r.objective_trace) gaps.push_back(std::max(f - f_star, 0.0));
        for (std::size_t k = 0; k < gaps.size(); ++k)
          csv << rep << "," << c.name << "," << k << "," << gaps[k] << "\n";
        row["f_star"] = f_star;
        row["iterations"] = r.iterations;
        row["solve_time"] = r.wall_time;
        row["step"] = r.step_used;
        row["m_f"] = r.m_f;
        row["final_gap"] = gaps.empty() ? json(nullptr) : json(gaps.back());
        std::vector<double> xs, ys;
        if (c.momentum == MomentumMode::fista) {
          for (std::size_t k = 10; k <= std::min<std::size_t>(200, gaps.size() - 1); ++k)
            if (gaps[k] > floor) {
              xs.push_back(std::log(static_cast<double>(k)));
              ys.push_back(std::log(gaps[k]));
            }
          row["loglog_slope"] = xs.size() >= 2 ? json(fit_slope(xs, ys)) : json(nullptr);
          row["fit_points"] = xs.size();
        } else {
          for (std::size_t k = 5; k < gaps.size(); ++k) {
            if (gaps[k] <= floor) break;
            xs.push_back(static_cast<double>(k));
            ys.push_back(std::log(gaps[k]));
          }
          const double predicted = 1.0 - std::sqrt(std::min(1.0, r.step_used * r.m_f));
          row["predicted_ratio"] = predicted;
          row["sqrt_alpha_m_f"] = std::sqrt(std::min(1.0, r.step_used * r.m_f));
          row["fitted_ratio"] = xs.size() >= 2 ? json(std::exp(fit_slope(xs, ys))) : json(nullptr);
          row["fit_points"] = xs.size();
        }
      } catch (const std::exception& e) {
        row["error"] = error_json(e);
      }
      slots[static_cast<std::size_t>(rep)].push_back(row);
    }
    traces[static_cast<std::size_t>(rep)] = csv.str();
  });

  std::string trace_csv = "rep,case,k,gap\n";
  for (int rep = 0; rep < total; ++rep) {
    report.seed_ledger.push_back(seed_entry(rep, rep < cfg.warmup, rep_seed(cfg, rep)));
    for (const json& row : slots[static_cast<std::size_t>(rep)]) report.rows.push_back(row);
    trace_csv += traces[static_cast<std::size_t>(rep)];
  }
  report.summary = summarize(report.rows, "case",
                             {"loglog_slope", "fitted_ratio", "predicted_ratio", "final_gap"});
  report.csv_tables["traces"] = trace_csv;
  report.csv_tables["rows"] =
      rows_to_csv(report.rows, {"rep", "warmup", "case", "gamma", "iterations", "loglog_slope",
                                "fitted_ratio", "predicted_ratio", "final_gap"});
  return report;
}

BenchReport run_solver_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  BenchReport report;
  report.experiment = "solver";
  report.metadata = environment_metadata(cfg, report.experiment);

  SolverConfig sc = cfg.solver;
  ProjectionConfig pc = cfg.projection;
  if (cfg.timing_mode) {
    sc.residual_check_stride = 5;
    pc.tol_scalar = 1e-8;
  }
  sc.record_objective = false;
  report.metadata["timing_solver"] = to_json(sc);
  report.metadata["timing_projection"] = to_json(pc);

  const std::vector<ModelSpec> models = models_or_default(cfg);
  const int sizes = static_cast<int>(cfg.solver_sizes.size());
  std::vector<json> slots(static_cast<std::size_t>(sizes), json::array());

  // Timing rows run one size at a time so measurements do not compete.
  for (int idx = 0; idx < sizes; ++idx) {
    const Eigen::Index n = cfg.solver_sizes[static_cast<std::size_t>(idx)];
    const std::uint64_t seed = rep_seed(cfg, idx);
    report.seed_ledger.push_back(seed_entry(idx, false, seed));
    json& rows = slots[static_cast<std::size_t>(idx)];
    SyntheticSpec spec = cfg.synthetic.value_or(SyntheticSpec{});
    spec.n = n;
    spec.T = std::max<Eigen::Index>(
        2, static_cast<Eigen::Index>(std::llround(cfg.solver_T_ratio * static_cast<double>(n))));
    spec.seed = cfg.instance_seed.value_or(substream_seed(seed, 1));
    Instance inst;
    try {
      inst = make_instance(cfg, center_and_factor(generate_synthetic(spec)), false,
                           substream_seed(seed, 2));
    } catch (const std::exception& e) {
      rows.push_back({{"n", n}, {"seed", seed}, {"error", error_json(e)}});
      continue;
    }
    const bool small = n <= kOracleMaxAssets;
    for (const ModelSpec& m : models) {
      json row{{"n", n}, {"T", spec.T}, {"seed", seed}, {"reference", inst.reference}};
      try {
        std::vector<double> build_times, solve_times;
        std::optional<BuiltModel> b;
        SolveResult r;
        for (int rep = 0; rep < cfg.warmup + cfg.repetitions; ++rep) {
          b = build_model(m, inst, substream_seed(seed, 3));
          r = solve(*b->model, *inst.F, {}, sc, pc);
          if (rep >= cfg.warmup) {
            build_times.push_back(b->build_time);
            solve_times.push_back(r.wall_time);
          }
        }
        row.update(model_params(m, *b));
        const FactorModel& model = *b->model;
        Eigen::VectorXd work(model.columns()), g(model.n());
        const Eigen::VectorXd x = r.x;
        std::vector<double> grad_times;
        for (int i = 0; i < cfg.gradient_samples; ++i) {
          const auto start = Clock::now();
          model.gradient_into(x, work, g);
          grad_times.push_back(seconds_since(start));
        }
        row["build_time"] = median(build_times);
        row["solve_time"] = median(solve_times);
        row["total_time"] = median(build_times) + median(solve_times);
        row["gradient_time"] = median(grad_times);
        row["iterations"] = r.iterations;
        row["termination"] = to_string(r.termination);
        row["objective"] = r.objective;
        const double full = r.x.dot(inst.Sigma * r.x);
        row["full_model_gap"] = objective_gap(full, inst.f_ref);
        if (small) {
          const double v = solve_exact(mean_variance_qp(model.dense_covariance(), *inst.F)).value;
          row["model_gap"] = objective_gap(r.objective, v);
        } else {
          row["model_gap"] = nullptr;
        }
      } catch (const std::exception& e) {
        row["model"] = m.name();
        row["error"] = error_json(e);
      }
      rows.push_back(row);
    }
  }
  for (const json& rows : slots)
    for (const json& row : rows) report.rows.push_back(row);
  report.csv_tables["rows"] =
      rows_to_csv(report.rows, {"n", "T", "model", "s", "ell", "iterations", "model_gap",
                                "full_model_gap", "build_time", "solve_time", "total_time",
                                "gradient_time"});
  return report;
}

BenchReport run_real_panel(const ExperimentConfig& cfg) {
  cfg.validate();
  require(cfg.synthetic || !cfg.panel_path.empty(), ErrorKind::Argument,
          "real-panel run needs a panel path (or a synthetic spec)");
  BenchReport report;
  report.experiment = "real";
  report.metadata = environment_metadata(cfg, report.experiment);
  const std::uint64_t seed = rep_seed(cfg, 0);
  report.seed_ledger.push_back(seed_entry(0, false, seed));

  const ReturnPanel panel = load_or_generate(cfg, substream_seed(seed, 1));
  const auto train_T = static_cast<Eigen::Index>(
      std::floor(cfg.train_fraction * static_cast<double>(panel.T())));
  const Eigen::Index test_T = panel.T() - train_T;
  require(train_T >= 2, ErrorKind::Dimension, "training segment needs at least 2 periods");
  require(test_T >= 2, ErrorKind::Dimension, "test segment needs at least 2 periods");
  const ReturnPanel train = panel.slice_periods(0, train_T);
  const ReturnPanel test = panel.slice_periods(train_T, test_T);

  // Expected returns are the raw training means, for generated panels too.
  const Instance inst = make_instance(cfg, center_and_factor(train), true, 0);
  report.metadata["R_target"] = inst.F->R_target();
  report.metadata["return_quantile"] = cfg.return_quantile;
  report.metadata["train_periods"] = train_T;
  report.metadata["test_periods"] = test_T;
  report.metadata["f_reference"] = inst.f_ref;
  report.metadata["reference"] = inst.reference;

  const bool small = panel.n() <= kOracleMaxAssets;
  for (const ModelSpec& m : models_or_default(cfg)) {
    json row{{"model", m.name()}};
    try {
      const BuiltModel b = build_model(m, inst, substream_seed(seed, 3));
      row.update(model_params(m, b));
      const FactorModel& model = *b.model;
      const SolveResult r = solve(model, *inst.F, {}, cfg.solver, cfg.projection);
      row["build_time"] = b.build_time;
      row["solve_time"] = r.wall_time;
      row["iterations"] = r.iterations;
      row["objective"] = r.objective;
      const double full = r.x.dot(inst.Sigma * r.x);
      row["full_objective"] = full;
      row["full_model_gap"] = objective_gap(full, inst.f_ref);
      if (small) {
        const double v = solve_exact(mean_variance_qp(model.dense_covariance(), *inst.F)).value;
        row["model_gap"] = objective_gap(r.objective, v);
      } else {
        row["model_gap"] = nullptr;
      }
      const PortfolioStats stats = annualize(portfolio_returns(r.x, test.returns()));
      row["annualized_return"] = stats.annualized_return;
      row["annualized_vol"] = stats.annualized_vol;
      row["intervals_per_year"] = stats.intervals_per_year;
      row["weights"] = std::vector<double>(r.x.data(), r.x.data() + r.x.size());
    } catch (const std::exception& e) {
      row["error"] = error_json(e);
    }
    report.rows.push_back(row);
  }
  report.csv_tables["rows"] =
      rows_to_csv(report.rows, {"model", "s", "ell", "iterations", "full_model_gap", "model_gap",
                                "annualized_return", "annualized_vol", "build_time",
                                "solve_time"});
  return report;
}

}  // namespace strnpga
