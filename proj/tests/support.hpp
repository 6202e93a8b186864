#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <span>
#include <vector>

#include "expint/spectral.hpp"
#include "expint/system.hpp"

namespace expint::test {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240915);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

inline DenseMatrix random_skew_hermitian(std::size_t d, bool real_only, double scale = 1.0) {
  DenseMatrix a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = {uniform(-1, 1), real_only ? 0.0 : uniform(-1, 1)};
  DenseMatrix omega = a - a.adjoint();
  omega *= Complex(scale);
  return omega;
}

template <class T>
double max_diff(const Matrix<T>& a, const Matrix<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

template <class A, class B>
double max_diff(const A& a, const B& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Largest deviation of a singular value of u from 1.
inline double unitarity_defect(const DenseMatrix& u) {
  const HermitianEigen e = eig_hermitian(u.adjoint() * u);
  double m = 0.0;
  for (double s2 : e.values) m = std::max(m, std::abs(std::sqrt(std::max(s2, 0.0)) - 1.0));
  return m;
}

// y' = g(y) in one dimension: Omega = 0 and g = V'.
inline OscillatorySystem scalar_system(PotentialFn v, GradientFn dv) {
  ConservativeSystem sys(RealMatrix{{0.0}}, RealMatrix{{0.0}}, 1.0, std::move(v), std::move(dv));
  OscillatorySystem osc = derive_oscillatory(sys);
  osc.q = RealMatrix{{1.0}};
  return osc;
}

inline OscillatorySystem linear_scalar(double lambda) {
  return scalar_system([lambda](std::span<const double> y) { return 0.5 * lambda * y[0] * y[0]; },
                       [lambda](std::span<const double> y, std::span<double> out) { out[0] = lambda * y[0]; });
}

inline OscillatorySystem square_scalar() {
  return scalar_system([](std::span<const double> y) { return y[0] * y[0] * y[0] / 3.0; },
                       [](std::span<const double> y, std::span<double> out) { out[0] = y[0] * y[0]; });
}

}  // namespace expint::test
