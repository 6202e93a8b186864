#pragma once

#include <string>

#include "expint/system.hpp"

namespace expint {

struct Problem {
  std::string name;
  ConservativeSystem system;
  State y0;
};

/// Averaged wind-induced oscillation with zero damping:
///   Q = [[0,-1],[1,0]], M = r*I, V = -1/2 (x1 x2^2 - x1^3/3),
/// so H = r/(2 eps) |x|^2 + V and Omega = (r/eps) Q.
ConservativeSystem wind_problem(double r, double eps);
/// (1.1 sqrt(eps), sqrt(eps))
State wind_initial_state(double eps);

/// Linear rotation with frequency omega: Q = [[0,-1],[1,0]], M = omega*I,
/// eps = 1, V = 0.
ConservativeSystem harmonic_problem(double omega);

Problem make_wind(double r, double eps);
Problem make_harmonic(double omega);

}  // namespace expint
