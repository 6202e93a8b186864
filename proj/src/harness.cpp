#include "expint/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>

#include "expint/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace expint {

namespace {

using nlohmann::json;

constexpr std::size_t kMaxRecords = 1000000;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& into, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
  }
}

double relative_error(double value, double reference) {
  const double diff = std::abs(value - reference);
  return reference != 0.0 ? diff / std::abs(reference) : diff;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("h must be positive");
  if (!(T >= h) || !std::isfinite(T)) throw ConfigError("T must be finite and at least h");
  solver.validate();
  const std::size_t n = step_count(h, T);
  if (sampling.kind == SamplingKind::Log) {
    if (sampling.samples < 1) throw ConfigError("log sampling needs at least one sample");
    if (sampling.samples + 1 > kMaxRecords) throw ConfigError("sampling schedule exceeds 1e6 records");
  } else {
    if (sampling.stride < 1) throw ConfigError("stride must be at least 1");
    if (n / sampling.stride + 2 > kMaxRecords) throw ConfigError("sampling schedule exceeds 1e6 records");
  }
  (void)build_method(*this);
  (void)build_problem(problem);
}

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, {"problem", "method", "h", "T", "sampling", "solver", "output", "seed", "coordinates"}, "config");
  ExperimentConfig cfg;
  if (j.contains("problem")) {
    const json& p = j.at("problem");
    check_keys(p, {"name", "r", "eps", "omega", "y0"}, "problem");
    read(p, "name", cfg.problem.name, "problem");
    read(p, "r", cfg.problem.r, "problem");
    read(p, "eps", cfg.problem.eps, "problem");
    read(p, "omega", cfg.problem.omega, "problem");
    if (p.contains("y0")) {
      State y0;
      read(p, "y0", y0, "problem");
      cfg.problem.y0 = std::move(y0);
    }
  }
  if (j.contains("method")) {
    const json& m = j.at("method");
    if (m.is_string()) {
      cfg.method = m.get<std::string>();
    } else {
      check_keys(m, {"label", "c", "a", "b"}, "method");
      cfg.method = m.value("label", std::string("custom"));
      cfg.custom_rk = m;
    }
  }
  read(j, "h", cfg.h, "config");
  read(j, "T", cfg.T, "config");
  if (j.contains("sampling")) {
    const json& s = j.at("sampling");
    check_keys(s, {"kind", "samples", "stride"}, "sampling");
    std::string kind = "log";
    read(s, "kind", kind, "sampling");
    if (kind == "log") cfg.sampling.kind = SamplingKind::Log;
    else if (kind == "stride") cfg.sampling.kind = SamplingKind::Stride;
    else throw ConfigError("sampling kind must be 'log' or 'stride'");
    read(s, "samples", cfg.sampling.samples, "sampling");
    read(s, "stride", cfg.sampling.stride, "sampling");
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, {"tol", "max_iter", "divergence_factor", "damping_after", "damping"}, "solver");
    read(s, "tol", cfg.solver.tol, "solver");
    read(s, "max_iter", cfg.solver.max_iter, "solver");
    read(s, "divergence_factor", cfg.solver.divergence_factor, "solver");
    read(s, "damping_after", cfg.solver.damping_after, "solver");
    read(s, "damping", cfg.solver.damping, "solver");
  }
  read(j, "output", cfg.output, "config");
  read(j, "seed", cfg.seed, "config");
  if (j.contains("coordinates")) {
    std::string coords;
    read(j, "coordinates", coords, "config");
    if (coords == "original") cfg.coordinates = Coordinates::Original;
    else if (coords == "transformed") cfg.coordinates = Coordinates::Transformed;
    else throw ConfigError("coordinates must be 'original' or 'transformed'");
  }
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json problem = {{"name", cfg.problem.name}, {"r", cfg.problem.r}, {"eps", cfg.problem.eps},
                  {"omega", cfg.problem.omega}};
  if (cfg.problem.y0) problem["y0"] = *cfg.problem.y0;
  json j = {
      {"problem", problem},
      {"method", cfg.custom_rk ? *cfg.custom_rk : json(cfg.method)},
      {"h", cfg.h},
      {"T", cfg.T},
      {"sampling",
       {{"kind", cfg.sampling.kind == SamplingKind::Log ? "log" : "stride"},
        {"samples", cfg.sampling.samples},
        {"stride", cfg.sampling.stride}}},
      {"solver",
       {{"tol", cfg.solver.tol},
        {"max_iter", cfg.solver.max_iter},
        {"divergence_factor", cfg.solver.divergence_factor},
        {"damping_after", cfg.solver.damping_after},
        {"damping", cfg.solver.damping}}},
      {"output", cfg.output},
      {"seed", cfg.seed},
      {"coordinates", cfg.coordinates == Coordinates::Original ? "original" : "transformed"},
  };
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

Problem build_problem(const ProblemConfig& cfg) {
  Problem p = [&] {
    if (cfg.name == "wind") return make_wind(cfg.r, cfg.eps);
    if (cfg.name == "harmonic") return make_harmonic(cfg.omega);
    throw ConfigError("unknown problem '" + cfg.name + "'");
  }();
  if (cfg.y0) {
    if (cfg.y0->size() != p.system.dim()) throw ConfigError("y0 has the wrong dimension");
    p.y0 = *cfg.y0;
  }
  return p;
}

MethodSpec build_method(const ExperimentConfig& cfg) {
  if (!cfg.custom_rk) return method_from_name(cfg.method);
  const json& m = *cfg.custom_rk;
  std::vector<double> c, b;
  std::vector<std::vector<double>> a;
  read(m, "c", c, "method");
  read(m, "a", a, "method");
  read(m, "b", b, "method");
  if (c.empty() || a.size() != c.size() || b.size() != c.size())
    throw ConfigError("custom method needs matching 'c', 'a', 'b'");
  return build_symplectic_ei(c, a, b);
}

std::size_t step_count(double h, double T) {
  if (!(h > 0.0)) throw ConfigError("h must be positive");
  if (!(T >= 0.0)) throw ConfigError("T must be non-negative");
  const double ratio = T / h;
  const double n = std::round(ratio);
  if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError("T = " + std::to_string(T) + " is not a multiple of h = " + std::to_string(h));
  return static_cast<std::size_t>(n);
}

std::vector<std::size_t> sample_steps(std::size_t n_steps, const Sampling& sampling) {
  std::vector<std::size_t> steps{0};
  if (n_steps == 0) return steps;
  if (sampling.kind == SamplingKind::Stride) {
    const std::size_t stride = std::max<std::size_t>(1, sampling.stride);
    for (std::size_t n = stride; n < n_steps; n += stride) steps.push_back(n);
  } else {
    const std::size_t count = std::max<std::size_t>(1, sampling.samples);
    const double top = std::log(static_cast<double>(n_steps));
    for (std::size_t k = 0; k + 1 < count; ++k) {
      const double frac = count > 1 ? static_cast<double>(k) / static_cast<double>(count - 1) : 1.0;
      const auto n = std::max(static_cast<std::size_t>(std::llround(std::exp(frac * top))), steps.back() + 1);
      if (n < n_steps) steps.push_back(n);
    }
  }
  steps.push_back(n_steps);
  return steps;
}

DriftSeries run_long(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Problem problem = build_problem(cfg.problem);
  const OscillatorySystem osc = derive_oscillatory(problem.system);
  const MethodSpec method = build_method(cfg);
  const std::size_t n = step_count(cfg.h, cfg.T);
  const std::vector<std::size_t> samples = sample_steps(n, cfg.sampling);
  const ConservativeSystem& sys = problem.system;
  const std::size_t d = sys.dim();

  DriftSeries series;
  series.config = cfg;
  series.meta.steps = n;
  series.meta.iteration_histogram.assign(static_cast<std::size_t>(cfg.solver.max_iter) + 1, 0);

  const double H0 = energy(sys, problem.y0);
  const double K0 = kinetic(sys, problem.y0);
  auto record = [&](std::size_t step, double H, double K, double eH, double eK) {
    series.t.push_back(static_cast<double>(step) * cfg.h);
    series.H.push_back(H);
    series.K.push_back(K);
    series.relerr_H.push_back(eH);
    series.relerr_K.push_back(eK);
  };
  record(0, H0, K0, 0.0, 0.0);

  std::size_t next_sample = 1;
  auto observe = [&](std::size_t step, std::span<const double> y) {
    const double K = kinetic(sys, y);
    const double H = K + sys.potential(y);
    const double eH = relative_error(H, H0);
    const double eK = relative_error(K, K0);
    series.meta.max_relerr_H = std::max(series.meta.max_relerr_H, eH);
    series.meta.max_relerr_K = std::max(series.meta.max_relerr_K, eK);
    if (next_sample < samples.size() && samples[next_sample] == step) {
      record(step, H, K, eH, eK);
      ++next_sample;
    }
  };
  auto count = [&](const StepStats& stats) {
    series.meta.total_iterations += static_cast<std::uint64_t>(stats.iterations);
    series.meta.max_iterations = std::max(series.meta.max_iterations, stats.iterations);
    ++series.meta.iteration_histogram[static_cast<std::size_t>(stats.iterations)];
  };

  std::size_t step = 0;
  try {
    if (cfg.coordinates == Coordinates::Original) {
      const auto stepper = instantiate(method, osc, cfg.h, cfg.solver);
      State y = problem.y0;
      State next(d);
      for (step = 1; step <= n; ++step) {
        StepStats stats;
        stepper->step(y, next, stats);
        y.swap(next);
        count(stats);
        observe(step, y);
      }
      series.final_state = y;
    } else {
      const auto stepper = instantiate_transformed(method, osc, cfg.h, cfg.solver);
      ComplexState yt = transform_state(osc, std::span<const double>(problem.y0));
      ComplexState next(d);
      State y(d);
      for (step = 1; step <= n; ++step) {
        StepStats stats;
        stepper->step(yt, next, stats);
        yt.swap(next);
        count(stats);
        const ComplexState back = untransform_state(osc, yt);
        for (std::size_t i = 0; i < d; ++i) y[i] = back[i].real();
        observe(step, y);
      }
      series.final_state = y;
    }
  } catch (FixedPointDiverged& e) {
    e.set_step(step);
    throw;
  }

  // Median from the histogram.
  if (n > 0) {
    const std::uint64_t half = (static_cast<std::uint64_t>(n) + 1) / 2;
    std::uint64_t seen = 0;
    for (std::size_t k = 0; k < series.meta.iteration_histogram.size(); ++k) {
      seen += series.meta.iteration_histogram[k];
      if (seen >= half) {
        series.meta.median_iterations = static_cast<double>(k);
        break;
      }
    }
  }
  series.meta.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return series;
}

std::vector<DriftSeries> run_sweep_serial(const std::vector<ExperimentConfig>& configs) {
  std::vector<DriftSeries> out;
  out.reserve(configs.size());
  for (const auto& cfg : configs) out.push_back(run_long(cfg));
  return out;
}

std::vector<DriftSeries> run_sweep(const std::vector<ExperimentConfig>& configs, int jobs) {
  if (jobs <= 1) return run_sweep_serial(configs);
  std::vector<DriftSeries> out(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  const auto count = static_cast<long>(configs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
  for (long i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = run_long(configs[static_cast<std::size_t>(i)]);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_csv(const DriftSeries& series, std::ostream& out) {
  out << "t,H,K,relerr_H,relerr_K\n";
  char buf[160];
  for (std::size_t i = 0; i < series.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", series.t[i], series.H[i], series.K[i],
                  series.relerr_H[i], series.relerr_K[i]);
    out << buf;
  }
}

json summary_json(const DriftSeries& series) {
  double max_sampled_H = 0.0;
  double max_sampled_K = 0.0;
  for (std::size_t i = 0; i < series.t.size(); ++i) {
    max_sampled_H = std::max(max_sampled_H, series.relerr_H[i]);
    max_sampled_K = std::max(max_sampled_K, series.relerr_K[i]);
  }
  const double transient = std::min(1e3, 0.1 * series.config.T);
  return {
      {"config", to_json(series.config)},
      {"steps", series.meta.steps},
      {"wall_seconds", series.meta.wall_seconds},
      {"total_iterations", series.meta.total_iterations},
      {"median_iterations", series.meta.median_iterations},
      {"max_iterations", series.meta.max_iterations},
      {"max_relerr_H", series.meta.max_relerr_H},
      {"max_relerr_K", series.meta.max_relerr_K},
      {"max_sampled_relerr_H", max_sampled_H},
      {"max_sampled_relerr_K", max_sampled_K},
      {"slope_relerr_H", secular_slope(series.t, series.relerr_H, transient)},
      {"slope_relerr_K", secular_slope(series.t, series.relerr_K, transient)},
      {"samples", series.t.size()},
  };
}

double secular_slope(const std::vector<double>& t, const std::vector<double>& values, double t_min) {
  double st = 0.0, sv = 0.0;
  std::size_t m = 0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t_min) {
      st += t[i];
      sv += values[i];
      ++m;
    }
  if (m < 2) return 0.0;
  const double mt = st / static_cast<double>(m);
  const double mv = sv / static_cast<double>(m);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t_min) {
      num += (t[i] - mt) * (values[i] - mv);
      den += (t[i] - mt) * (t[i] - mt);
    }
  return den > 0.0 ? num / den : 0.0;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  std::transform(x.begin(), x.end(), lx.begin(), [](double v) { return std::log(v); });
  std::transform(y.begin(), y.end(), ly.begin(), [](double v) { return std::log(v); });
  return secular_slope(lx, ly, -INFINITY);
}

State integrate(const OscillatorySystem& osc, const MethodSpec& method, double h, std::size_t steps,
                const State& y0, const SolverConfig& cfg) {
  State y = y0;
  if (steps == 0) return y;
  const auto stepper = instantiate(method, osc, h, cfg);
  State next(y.size());
  for (std::size_t n = 1; n <= steps; ++n) {
    StepStats stats;
    try {
      stepper->step(y, next, stats);
    } catch (FixedPointDiverged& e) {
      e.set_step(n);
      throw;
    }
    y.swap(next);
  }
  return y;
}

SampledTrajectory transformed_samples(const Problem& problem, const MethodSpec& method, double h, std::size_t steps,
                                      const SolverConfig& cfg) {
  const OscillatorySystem osc = derive_oscillatory(problem.system);
  const auto stepper = instantiate(method, osc, h, cfg);
  SampledTrajectory traj;
  traj.t.reserve(steps + 1);
  traj.y.reserve(steps + 1);
  State y = problem.y0;
  State next(y.size());
  StepStats stats;
  for (std::size_t n = 0;; ++n) {
    traj.t.push_back(static_cast<double>(n) * h);
    traj.y.push_back(transform_state(osc, std::span<const double>(y)));
    if (n == steps) break;
    stepper->step(y, next, stats);
    y.swap(next);
  }
  return traj;
}

ConvergenceResult convergence_study(const Problem& problem, const MethodSpec& method, const std::vector<double>& h_list,
                                    double T, const SolverConfig& cfg) {
  if (h_list.size() < 3) throw ConfigError("convergence study needs at least three step sizes");
  const OscillatorySystem osc = derive_oscillatory(problem.system);
  ConvergenceResult result;
  result.h = h_list;
  result.h_ref = *std::min_element(h_list.begin(), h_list.end()) / 100.0;
  std::vector<std::size_t> steps;
  for (double h : h_list) steps.push_back(step_count(h, T));
  const State ref = integrate(osc, method, result.h_ref, step_count(result.h_ref, T), problem.y0, cfg);
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    const State y = integrate(osc, method, h_list[i], steps[i], problem.y0, cfg);
    double err = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) err = std::max(err, std::abs(y[k] - ref[k]));
    result.error.push_back(err);
  }
  result.order = loglog_slope(result.h, result.error);
  return result;
}

ReferenceResult reference_solution(const Problem& problem, double T, double tol, const SolverConfig& cfg) {
  if (!(tol >= 1e-12)) throw ConfigError("reference tolerance must be at least 1e-12");
  if (!(T >= 0.0)) throw ConfigError("T must be non-negative");
  if (T == 0.0) return {problem.y0, 0, 0.0};
  const OscillatorySystem osc = derive_oscillatory(problem.system);
  std::size_t n = 1;
  State prev = integrate(osc, EITMethod{}, T, n, problem.y0, cfg);
  double diff = INFINITY;
  for (int halving = 1; halving <= 20; ++halving) {
    n *= 2;
    State y = integrate(osc, EITMethod{}, T / static_cast<double>(n), n, problem.y0, cfg);
    diff = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) diff = std::max(diff, std::abs(y[k] - prev[k]));
    if (diff <= tol) return {std::move(y), n, diff};
    prev = std::move(y);
  }
  throw ToleranceNotReached("reference solution did not reach tol " + std::to_string(tol) +
                            " after 20 halvings (last difference " + std::to_string(diff) + ")");
}

double drift_roundoff_floor(std::size_t steps) {
  return 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max<std::size_t>(steps, 1));
}

DriftScalingResult drift_scaling_study(const Problem& problem, const MethodSpec& method,
                                       const std::vector<double>& h_list, double T, const SolverConfig& cfg) {
  if (h_list.size() < 3) throw ConfigError("drift scaling study needs at least three step sizes");
  const OscillatorySystem osc = derive_oscillatory(problem.system);
  const ConservativeSystem& sys = problem.system;
  const double H0 = energy(sys, problem.y0);
  const double K0 = kinetic(sys, problem.y0);
  DriftScalingResult result;
  for (double h : h_list) {
    const std::size_t n = step_count(h, T);
    const auto stepper = instantiate(method, osc, h, cfg);
    State y = problem.y0;
    State next(y.size());
    double worst_H = 0.0;
    double worst_K = 0.0;
    for (std::size_t step = 1; step <= n; ++step) {
      StepStats stats;
      try {
        stepper->step(y, next, stats);
      } catch (FixedPointDiverged& e) {
        e.set_step(step);
        throw;
      }
      y.swap(next);
      const double K = kinetic(sys, y);
      worst_K = std::max(worst_K, relative_error(K, K0));
      worst_H = std::max(worst_H, relative_error(K + sys.potential(y), H0));
    }
    result.h.push_back(h);
    result.max_relerr_H.push_back(worst_H);
    result.max_relerr_K.push_back(worst_K);
  }
  auto fit = [&](const std::vector<double>& drift) -> std::optional<double> {
    bool roundoff = true;
    for (std::size_t i = 0; i < drift.size(); ++i)
      roundoff = roundoff && drift[i] <= drift_roundoff_floor(step_count(result.h[i], T));
    if (roundoff) return std::nullopt;
    return loglog_slope(result.h, drift);
  };
  result.exponent_H = fit(result.max_relerr_H);
  result.exponent_K = fit(result.max_relerr_K);
  return result;
}

}  // namespace expint
