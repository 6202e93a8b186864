#pragma once

// Resonance structure of the frequency set, the standing assumptions on step
// size and initial data, and an empirical modal-amplitude fit of sampled
// trajectories onto e^{i (k . omega~) t}.

#include <cstddef>
#include <span>
#include <vector>

#include "expint/spectral.hpp"
#include "expint/system.hpp"

namespace expint {

using MultiIndex = std::vector<int>;

int l1_norm(const MultiIndex& k);
double dot(const MultiIndex& k, std::span<const double> lambda);

struct FrequencyBasis {
  std::vector<double> lambda;  // distinct positive frequencies
  double eps = 1.0;

  std::size_t size() const noexcept { return lambda.size(); }
  /// lambda_k / eps
  std::vector<double> omega_tilde() const;
  /// Throws ConfigError unless lambda is nonempty, positive and distinct.
  void validate() const;
};

/// Distinct positive frequencies of osc, rescaled by eps so that
/// omega~ = lambda / eps reproduces the stored eigenvalues.
FrequencyBasis frequency_basis(const OscillatorySystem& osc, double rel_tol = 1e-10);

struct ResonanceSet {
  int N = 0;
  double tol = 0.0;  // relative to |lambda|_inf
  std::vector<double> lambda;
  std::vector<MultiIndex> module_members;   // k . lambda = 0, |k| <= N
  std::vector<MultiIndex> representatives;  // one per class, closed under negation

  bool in_module(const MultiIndex& k) const;
};

/// Exhaustive scan of |k| <= N. Throws CombinatorialBudgetExceeded when
/// (2N+1)^l > 1e7.
ResonanceSet enumerate_resonance(const FrequencyBasis& basis, int N, double tol = 1e-12);

struct NonResonanceRow {
  MultiIndex k;
  double k_dot_lambda = 0.0;
  double sine = 0.0;  // |sin(h/(2 eps) k.lambda)|
  bool pass = false;
};

struct NonResonanceReport {
  double h = 0.0;
  double eps = 0.0;
  double c = 0.0;
  int N = 0;
  double threshold = 0.0;  // c sqrt(h)
  std::vector<NonResonanceRow> rows;
  bool overall = true;
};

/// One row per k outside the resonance module with |k| <= N; a row passes
/// when |sin(h/(2 eps) k.lambda)| >= c sqrt(h).
NonResonanceReport check_nonresonance(const FrequencyBasis& basis, double h, int N, double c,
                                      const ResonanceSet& res);

struct AssumptionReport {
  double energy_expression = 0.0;  // 1/(2 eps) (y0^T M y0)^2 + V(y0)
  double energy_bound = 0.0;
  bool energy_ok = false;
  double h_over_eps = 0.0;
  double c0 = 0.0;
  bool step_ok = false;
  NonResonanceReport nonresonance;
};

/// Advisory only; never throws for failing checks.
AssumptionReport check_assumptions(const ConservativeSystem& sys, std::span<const double> y0, double h,
                                   double energy_bound, double c0, double c = 0.1, int N = 2);

struct SampledTrajectory {
  std::vector<double> t;
  std::vector<ComplexState> y;
};

struct ModalAmplitudes {
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<MultiIndex> kset;
  std::vector<double> frequencies;  // k . omega~
  DenseMatrix amplitudes;           // |kset| x dim
  double residual = 0.0;            // |A z - y|_F / |y|_F
  double condition = 0.0;           // 2-norm condition number of the design matrix
};

/// Least-squares fit y(t_n) ~ sum_k z^k e^{i (k . omega~) t_n} over samples
/// [first, first + count). Throws AliasedSampling if the sample spacing
/// times max |k . omega~| exceeds 1 or the window is shorter than 4 |kset|,
/// and IllConditionedBasis if the condition number exceeds 1e10.
ModalAmplitudes fit_modal_amplitudes(const SampledTrajectory& traj, const FrequencyBasis& basis,
                                     const std::vector<MultiIndex>& kset, std::size_t first, std::size_t count);

/// Every k with |k|_1 <= N, in lexicographic order.
std::vector<MultiIndex> multi_indices(std::size_t l, int N);

/// levels[n] = max |z^k_j| over components j and over k in the fit with |k|_1 = n.
std::vector<double> amplitude_by_order(const ModalAmplitudes& fit);

/// levels[n + 1] <= levels[n] + rel_floor * levels[1] for every n >= 1.
bool amplitude_hierarchy(const std::vector<double>& levels, double rel_floor = 1e-12);

/// Householder least squares min |A X - B|_F for A with full column rank.
DenseMatrix least_squares(DenseMatrix a, DenseMatrix b);

}  // namespace expint
