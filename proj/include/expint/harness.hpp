#pragma once

// Long-run drift measurement, convergence and drift-scaling studies,
// reference solutions and experiment configuration I/O.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "expint/analysis.hpp"
#include "expint/integrators.hpp"
#include "expint/problems.hpp"

namespace expint {

struct ProblemConfig {
  std::string name = "wind";  // "wind" | "harmonic"
  double r = 1.0;
  double eps = 1e-4;
  double omega = 1.0;
  std::optional<State> y0;
};

enum class SamplingKind { Log, Stride };

struct Sampling {
  SamplingKind kind = SamplingKind::Log;
  std::size_t samples = 1000;  // log: points over [h, T]
  std::size_t stride = 1;      // stride: every `stride` steps
};

enum class Coordinates { Original, Transformed };

struct ExperimentConfig {
  ProblemConfig problem;
  std::string method = "EI-T";
  std::optional<nlohmann::json> custom_rk;  // {"c": [...], "a": [[...]], "b": [...]}
  double h = 0.5;
  double T = 1e6;
  Sampling sampling;
  SolverConfig solver;
  std::string output;
  std::uint64_t seed = 0;
  Coordinates coordinates = Coordinates::Original;

  /// Throws ConfigError when h <= 0, T < h or the schedule is too large.
  void validate() const;
};

/// Field-for-field mapping; unknown keys raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

Problem build_problem(const ProblemConfig& cfg);
MethodSpec build_method(const ExperimentConfig& cfg);

/// Number of steps covering [0, T]; T must be a multiple of h to 1e-9.
std::size_t step_count(double h, double T);

/// Step indices to record, strictly increasing, always starting at 0 and
/// ending at n_steps.
std::vector<std::size_t> sample_steps(std::size_t n_steps, const Sampling& sampling);

struct RunMeta {
  std::size_t steps = 0;
  double wall_seconds = 0.0;
  std::uint64_t total_iterations = 0;
  int max_iterations = 0;
  double median_iterations = 0.0;
  double max_relerr_H = 0.0;  // over every step, not just samples
  double max_relerr_K = 0.0;
  std::vector<std::uint64_t> iteration_histogram;
};

struct DriftSeries {
  std::vector<double> t;
  std::vector<double> H;
  std::vector<double> K;
  std::vector<double> relerr_H;
  std::vector<double> relerr_K;
  RunMeta meta;
  ExperimentConfig config;
  State final_state;
};

/// Deterministic fixed-step run. FixedPointDiverged carries the failing step.
DriftSeries run_long(const ExperimentConfig& cfg);

/// Independent runs; `jobs > 1` distributes them over OpenMP threads.
/// Results are in input order and identical to the serial path.
std::vector<DriftSeries> run_sweep(const std::vector<ExperimentConfig>& configs, int jobs = 1);
std::vector<DriftSeries> run_sweep_serial(const std::vector<ExperimentConfig>& configs);

/// CSV with header t,H,K,relerr_H,relerr_K and 17 significant digits.
void write_csv(const DriftSeries& series, std::ostream& out);
nlohmann::json summary_json(const DriftSeries& series);

/// Least-squares slope of values against t over samples with t >= t_min.
double secular_slope(const std::vector<double>& t, const std::vector<double>& values, double t_min);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Integrates `steps` steps of `method` from y0 in original coordinates.
State integrate(const OscillatorySystem& osc, const MethodSpec& method, double h, std::size_t steps,
                const State& y0, const SolverConfig& cfg = {});

/// Every step of a run in original coordinates, mapped to y~ = P^H y.
SampledTrajectory transformed_samples(const Problem& problem, const MethodSpec& method, double h, std::size_t steps,
                                      const SolverConfig& cfg = {});

struct ConvergenceResult {
  std::vector<double> h;
  std::vector<double> error;  // max norm at T against the reference
  double h_ref = 0.0;
  double order = 0.0;
};

/// Reference is the same method at min(h_list)/100.
ConvergenceResult convergence_study(const Problem& problem, const MethodSpec& method, const std::vector<double>& h_list,
                                    double T, const SolverConfig& cfg = {});

struct ReferenceResult {
  State y;
  std::size_t steps = 0;
  double estimate = 0.0;  // max-norm difference between the last two halvings
};

/// EI-T with step halving until two successive results agree to tol.
/// Throws ToleranceNotReached after 20 halvings.
ReferenceResult reference_solution(const Problem& problem, double T, double tol, const SolverConfig& cfg = {});

struct DriftScalingResult {
  std::vector<double> h;
  std::vector<double> max_relerr_H;
  std::vector<double> max_relerr_K;
  std::optional<double> exponent_H;  // empty when every drift is below drift_roundoff_floor
  std::optional<double> exponent_K;
};

/// 16 eps_mach per step.
double drift_roundoff_floor(std::size_t steps);

DriftScalingResult drift_scaling_study(const Problem& problem, const MethodSpec& method,
                                       const std::vector<double>& h_list, double T, const SolverConfig& cfg = {});

}  // namespace expint
