#pragma once

// Conservative systems y' = Q grad H(y) with H(y) = 1/2 y^T (M/eps) y + V(y),
// and their oscillatory form y' = Omega y + g(y), Omega = Q M / eps,
// g = Q grad V.

#include <functional>
#include <span>
#include <vector>

#include "expint/spectral.hpp"

namespace expint {

using State = std::vector<double>;
using ComplexState = std::vector<Complex>;

using PotentialFn = std::function<double(std::span<const double>)>;
using GradientFn = std::function<void(std::span<const double> y, std::span<double> out)>;

class ConservativeSystem {
 public:
  /// Validates skewness of Q, symmetry of M, eps > 0 and the gradient
  /// against central differences of V at a few deterministic points of
  /// magnitude `probe_scale`. Throws ConfigError on failure.
  ConservativeSystem(RealMatrix q, RealMatrix m, double eps, PotentialFn v, GradientFn grad_v,
                     double probe_scale = 1.0);

  std::size_t dim() const noexcept { return q_.rows(); }
  const RealMatrix& Q() const noexcept { return q_; }
  const RealMatrix& M() const noexcept { return m_; }
  double eps() const noexcept { return eps_; }

  double potential(std::span<const double> y) const { return v_(y); }
  void grad_potential(std::span<const double> y, std::span<double> out) const { grad_v_(y, out); }

  /// Same system with eps replaced.
  ConservativeSystem with_eps(double eps) const;

 private:
  RealMatrix q_;
  RealMatrix m_;
  double eps_;
  PotentialFn v_;
  GradientFn grad_v_;
};

/// Largest |grad V - central FD of V| over the probe points.
double gradient_check(const ConservativeSystem& sys, std::span<const State> points);

struct OscillatorySystem {
  DenseMatrix omega;         // Q M / eps
  RealMatrix omega_real;     // same, real storage
  SpectralDecomposition dec; // omega = P diag(i*lambda) P^H
  RealMatrix q;              // for g = Q grad V
  ConservativeSystem system;

  std::size_t dim() const noexcept { return omega_real.rows(); }

  /// g(y) = Q grad V(y).
  void nonlinearity(std::span<const double> y, std::span<double> out) const;

  /// Transformed frequencies; these are the stored eigenvalues (they already
  /// carry the 1/eps factor).
  const std::vector<double>& omega_tilde() const noexcept { return dec.lambda; }
};

OscillatorySystem derive_oscillatory(const ConservativeSystem& sys, double zero_tol = 1e-12);

double energy(const ConservativeSystem& sys, std::span<const double> y);
double kinetic(const ConservativeSystem& sys, std::span<const double> y);

/// grad H(y) = (M/eps) y + grad V(y).
State grad_energy(const ConservativeSystem& sys, std::span<const double> y);

/// y~ = P^H y.
ComplexState transform_state(const OscillatorySystem& osc, std::span<const double> y);
ComplexState transform_state(const OscillatorySystem& osc, std::span<const Complex> y);
/// P y~.
ComplexState untransform_state(const OscillatorySystem& osc, std::span<const Complex> yt);

/// 1/2 sum_j |lambda_j| |y~_j|^2. Equals K(y) whenever M/eps = P |Lambda| P^H,
/// which holds for the canonical Q and M = r*I.
double transformed_kinetic(const OscillatorySystem& osc, std::span<const Complex> yt);
double transformed_energy(const OscillatorySystem& osc, std::span<const Complex> yt);

}  // namespace expint
