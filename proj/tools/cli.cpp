#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "expint/analysis.hpp"
#include "expint/errors.hpp"
#include "expint/harness.hpp"

namespace expint::cli {

namespace {

using nlohmann::json;

struct Options {
  std::string config;
  std::string out;
  std::string method;
  std::string problem;
  double h = 0.0;
  double T = 0.0;
  double eps = 0.0;
  int jobs = 1;
  std::size_t log_samples = 0;
  std::vector<double> h_list;
  std::size_t window = 64;
  int kmax = 3;
  double energy_bound = 1.0;
  double c0 = 1.0;
  double c = 0.1;
  int order = 2;
};

struct Context {
  std::string source = "<command line>";
};

void add_common(CLI::App* sub, Options& o, std::vector<CLI::Option*>& methods, std::vector<CLI::Option*>& problems,
                std::vector<CLI::Option*>& hs, std::vector<CLI::Option*>& Ts, std::vector<CLI::Option*>& epss,
                std::vector<CLI::Option*>& samples) {
  sub->add_option("--config", o.config, "JSON experiment config");
  sub->add_option("--out", o.out, "output path");
  methods.push_back(sub->add_option("--method", o.method, "EI-T, EI-O1 ... EI-O5"));
  problems.push_back(sub->add_option("--problem", o.problem, "wind or harmonic"));
  hs.push_back(sub->add_option("--h", o.h, "step size"));
  Ts.push_back(sub->add_option("--T", o.T, "final time"));
  epss.push_back(sub->add_option("--eps", o.eps, "stiffness parameter"));
  samples.push_back(sub->add_option("--log-samples", o.log_samples, "log-spaced drift samples"));
}

bool given(const std::vector<CLI::Option*>& opts) {
  for (const auto* opt : opts)
    if (opt->count() > 0) return true;
  return false;
}

struct Given {
  bool method, problem, h, T, eps, samples;
};

ExperimentConfig resolve(const Options& o, const Given& g, ExperimentConfig cfg, Context& ctx) {
  if (!o.config.empty()) {
    ctx.source = o.config;
    cfg = load_config(o.config);
  }
  if (g.method) {
    cfg.method = o.method;
    cfg.custom_rk.reset();
  }
  if (g.problem) cfg.problem.name = o.problem;
  if (g.h) cfg.h = o.h;
  if (g.T) cfg.T = o.T;
  if (g.eps) cfg.problem.eps = o.eps;
  if (g.samples) {
    cfg.sampling.kind = SamplingKind::Log;
    cfg.sampling.samples = o.log_samples;
  }
  return cfg;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
}

int cmd_run(const Options& o, const Given& g, Context& ctx, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o, g, {}, ctx);
  cfg.validate();
  const DriftSeries series = run_long(cfg);
  const std::string path = !o.out.empty() ? o.out : cfg.output;
  if (path.empty()) {
    write_csv(series, out);
    return 0;
  }
  std::ostringstream csv;
  write_csv(series, csv);
  write_file(path, csv.str());
  out << summary_json(series).dump(2) << '\n';
  return 0;
}

std::vector<ExperimentConfig> load_sweep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.is_object()) {
    for (const auto& [key, value] : j.items())
      if (key != "runs") throw ConfigError("unknown key '" + key + "' in sweep");
    j = j.at("runs");
  }
  if (!j.is_array() || j.empty()) throw ConfigError("sweep config must be a non-empty list of runs");
  std::vector<ExperimentConfig> configs;
  for (const auto& entry : j) configs.push_back(config_from_json(entry));
  return configs;
}

int cmd_sweep(const Options& o, const Given& g, Context& ctx, std::ostream& out) {
  if (o.config.empty()) throw ConfigError("sweep needs --config");
  ctx.source = o.config;
  std::vector<ExperimentConfig> configs = load_sweep(o.config);
  for (auto& cfg : configs) {
    Options single = o;
    single.config.clear();
    Context ignored;
    cfg = resolve(single, g, cfg, ignored);
    cfg.validate();
  }
  if (o.jobs < 1) throw ConfigError("--jobs must be at least 1");
  const std::filesystem::path dir = o.out.empty() ? std::filesystem::path(".") : std::filesystem::path(o.out);
  std::filesystem::create_directories(dir);

  const std::vector<DriftSeries> results = run_sweep(configs, o.jobs);
  json runs = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& cfg = results[i].config;
    const std::string name =
        !cfg.output.empty() ? cfg.output : "run_" + std::to_string(i) + "_" + cfg.method + ".csv";
    const std::filesystem::path path = dir / name;
    std::ostringstream csv;
    write_csv(results[i], csv);
    write_file(path.string(), csv.str());
    json s = summary_json(results[i]);
    s["csv"] = path.string();
    runs.push_back(std::move(s));
  }
  const json summary = {{"jobs", o.jobs}, {"runs", runs}};
  write_file((dir / "summary.json").string(), summary.dump(2) + "\n");
  out << summary.dump(2) << '\n';
  return 0;
}

ExperimentConfig study_defaults(double T) {
  ExperimentConfig cfg;
  cfg.problem.eps = 1e-2;
  cfg.T = T;
  return cfg;
}

int cmd_converge(const Options& o, const Given& g, Context& ctx, std::ostream& out) {
  ExperimentConfig cfg = resolve(o, g, study_defaults(1.0), ctx);
  const std::vector<double> hs = o.h_list.empty() ? std::vector<double>{0.01, 0.005, 0.0025} : o.h_list;
  if (hs.size() < 3) throw ConfigError("--h-list needs at least 3 step sizes");
  const Problem problem = build_problem(cfg.problem);
  const ConvergenceResult r = convergence_study(problem, build_method(cfg), hs, cfg.T, cfg.solver);
  out << "method " << cfg.method << "  problem " << cfg.problem.name << "  eps " << cfg.problem.eps << "  T " << cfg.T
      << "  h_ref " << r.h_ref << '\n';
  out << "h               error\n";
  for (std::size_t i = 0; i < r.h.size(); ++i) out << fmt(r.h[i]) << "    " << fmt(r.error[i]) << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "order %.4f\n", r.order);
  out << buf;
  return 0;
}

int cmd_drift(const Options& o, const Given& g, Context& ctx, std::ostream& out) {
  ExperimentConfig cfg = resolve(o, g, study_defaults(1e3), ctx);
  const std::vector<double> hs = o.h_list.empty() ? std::vector<double>{0.02, 0.01, 0.005} : o.h_list;
  if (hs.size() < 3) throw ConfigError("--h-list needs at least 3 step sizes");
  const Problem problem = build_problem(cfg.problem);
  const DriftScalingResult r = drift_scaling_study(problem, build_method(cfg), hs, cfg.T, cfg.solver);
  out << "method " << cfg.method << "  problem " << cfg.problem.name << "  eps " << cfg.problem.eps << "  T " << cfg.T
      << '\n';
  out << "h               max_relerr_H    max_relerr_K\n";
  for (std::size_t i = 0; i < r.h.size(); ++i)
    out << fmt(r.h[i]) << "    " << fmt(r.max_relerr_H[i]) << "    " << fmt(r.max_relerr_K[i]) << '\n';
  auto show = [](const std::optional<double>& e) {
    if (!e) return std::string("skipped");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *e);
    return std::string(buf);
  };
  out << "exponent_H " << show(r.exponent_H) << "\nexponent_K " << show(r.exponent_K) << '\n';
  return 0;
}

json claimed_flags(const MethodSpec& m) {
  if (std::holds_alternative<EITMethod>(m))
    return {{"symmetric", true}, {"reversible", nullptr}, {"symplectic", false}};
  if (const auto* e = std::get_if<EIOMethod>(&m))
    return {{"symmetric", e->claimed_symmetric}, {"reversible", e->claimed_reversible},
            {"symplectic", e->claimed_symplectic}};
  return nullptr;
}

bool rev_cond(const MethodSpec& m, const ExperimentConfig& cfg, const OscillatorySystem& osc) {
  if (std::holds_alternative<EITMethod>(m)) return rk_is_symplectic({{0.0, 0.0}, {0.5, 0.5}}, {0.5, 0.5});
  if (const auto* e = std::get_if<EIOMethod>(&m)) return is_symplectic_eio(*e, osc.dec, cfg.h);
  const json& rk = *cfg.custom_rk;
  return rk_is_symplectic(rk.at("a").get<std::vector<std::vector<double>>>(), rk.at("b").get<std::vector<double>>());
}

json nonresonance_json(const NonResonanceReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"k", row.k}, {"k_dot_lambda", row.k_dot_lambda}, {"sine", row.sine}, {"pass", row.pass}});
  return {{"c", r.c}, {"N", r.N}, {"threshold", r.threshold}, {"overall", r.overall}, {"rows", rows}};
}

int cmd_check(const Options& o, const Given& g, Context& ctx, std::ostream& out) {
  const ExperimentConfig cfg = resolve(o, g, {}, ctx);
  if (!(cfg.h > 0.0)) throw ConfigError("h must be positive");
  const Problem problem = build_problem(cfg.problem);
  const MethodSpec method = build_method(cfg);
  const OscillatorySystem osc = derive_oscillatory(problem.system);
  const double residual = check_symmetry_numeric(method, osc, cfg.h, problem.y0, cfg.solver);
  const AssumptionReport a = check_assumptions(problem.system, problem.y0, cfg.h, o.energy_bound, o.c0, o.c, o.order);
  const json report = {
      {"method", method_name(method)},
      {"problem", {{"name", cfg.problem.name}, {"eps", problem.system.eps()}, {"r", cfg.problem.r}}},
      {"h", cfg.h},
      {"claimed", claimed_flags(method)},
      {"symplectic_rev_cond", rev_cond(method, cfg, osc)},
      {"symmetry_residual", residual},
      {"symmetric", symmetric_residual(residual, cfg.solver)},
      {"assumptions",
       {{"energy_expression", a.energy_expression},
        {"energy_bound", a.energy_bound},
        {"energy_ok", a.energy_ok},
        {"h_over_eps", a.h_over_eps},
        {"c0", a.c0},
        {"step_ok", a.step_ok},
        {"nonresonance", nonresonance_json(a.nonresonance)}}},
  };
  out << report.dump(2) << '\n';
  return 0;
}

int cmd_fit(const Options& o, const Given& g, Context& ctx, std::ostream& out) {
  ExperimentConfig defaults;
  defaults.h = 1e-5;
  defaults.T = 0.1;
  const ExperimentConfig cfg = resolve(o, g, defaults, ctx);
  const Problem problem = build_problem(cfg.problem);
  const OscillatorySystem osc = derive_oscillatory(problem.system);
  const FrequencyBasis basis = frequency_basis(osc);
  if (basis.lambda.empty()) throw ConfigError("problem has no oscillatory frequencies");
  const std::size_t steps = step_count(cfg.h, cfg.T);
  if (o.window > steps + 1) throw ConfigError("--window exceeds the number of samples");
  const SampledTrajectory traj = transformed_samples(problem, build_method(cfg), cfg.h, steps, cfg.solver);
  const std::vector<MultiIndex> kset = multi_indices(basis.size(), o.kmax);
  const ModalAmplitudes fit = fit_modal_amplitudes(traj, basis, kset, traj.t.size() - o.window, o.window);
  const std::vector<double> levels = amplitude_by_order(fit);

  json modes = json::array();
  for (std::size_t m = 0; m < kset.size(); ++m) {
    json abs = json::array();
    for (std::size_t j = 0; j < fit.amplitudes.cols(); ++j) abs.push_back(std::abs(fit.amplitudes(m, j)));
    modes.push_back({{"k", kset[m]}, {"frequency", fit.frequencies[m]}, {"abs", abs}});
  }
  const json report = {
      {"method", cfg.method},
      {"problem", {{"name", cfg.problem.name}, {"eps", problem.system.eps()}}},
      {"h", cfg.h},
      {"T", cfg.T},
      {"window", {fit.t_start, fit.t_end}},
      {"lambda", basis.lambda},
      {"modes", modes},
      {"levels", levels},
      {"hierarchy_nonincreasing", amplitude_hierarchy(levels)},
      {"residual", fit.residual},
      {"condition", fit.condition},
  };
  out << report.dump(2) << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exponential integrators for oscillatory conservative systems", "expint"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  Options o;
  std::vector<CLI::Option*> methods, problems, hs, Ts, epss, samples;
  auto add = [&](const char* name, const char* desc) {
    CLI::App* sub = app.add_subcommand(name, desc);
    add_common(sub, o, methods, problems, hs, Ts, epss, samples);
    return sub;
  };
  CLI::App* run_cmd = add("run", "single run, CSV drift series");
  CLI::App* sweep_cmd = add("sweep", "list of runs, one CSV each plus summary.json");
  sweep_cmd->add_option("--jobs", o.jobs, "concurrent runs")->check(CLI::PositiveNumber);
  CLI::App* conv_cmd = add("converge", "empirical convergence order");
  conv_cmd->add_option("--h-list", o.h_list, "step sizes")->delimiter(',');
  CLI::App* drift_cmd = add("drift-scaling", "max drift against h");
  drift_cmd->add_option("--h-list", o.h_list, "step sizes")->delimiter(',');
  CLI::App* check_cmd = add("check", "structural predicates and assumptions as JSON");
  check_cmd->add_option("--energy-bound", o.energy_bound);
  check_cmd->add_option("--c0", o.c0);
  check_cmd->add_option("--c", o.c);
  check_cmd->add_option("--order", o.order, "resonance order N");
  CLI::App* fit_cmd = add("fit-modes", "modal amplitude fit as JSON");
  fit_cmd->add_option("--window", o.window, "samples at the end of the run");
  fit_cmd->add_option("--kmax", o.kmax, "largest |k|");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const Given g{given(methods), given(problems), given(hs), given(Ts), given(epss), given(samples)};
  Context ctx;
  try {
    if (*run_cmd) return cmd_run(o, g, ctx, out);
    if (*sweep_cmd) return cmd_sweep(o, g, ctx, out);
    if (*conv_cmd) return cmd_converge(o, g, ctx, out);
    if (*drift_cmd) return cmd_drift(o, g, ctx, out);
    if (*check_cmd) return cmd_check(o, g, ctx, out);
    if (*fit_cmd) return cmd_fit(o, g, ctx, out);
  } catch (const FixedPointDiverged& e) {
    err << "error: " << ctx.source << ": " << e.what() << " (step " << e.step() << ")\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << ctx.source << ": " << e.what() << '\n';
    return e.numerical() ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << ctx.source << ": " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace expint::cli
