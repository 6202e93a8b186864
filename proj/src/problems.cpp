#include "expint/problems.hpp"

#include <cmath>

#include "expint/errors.hpp"

namespace expint {

namespace {

RealMatrix canonical_q() { return RealMatrix{{0.0, -1.0}, {1.0, 0.0}}; }

}  // namespace

ConservativeSystem wind_problem(double r, double eps) {
  if (!(r > 0.0)) throw ConfigError("wind problem requires r > 0");
  if (!(eps > 0.0)) throw ConfigError("wind problem requires eps > 0");
  auto v = [](std::span<const double> x) { return -0.5 * (x[0] * x[1] * x[1] - x[0] * x[0] * x[0] / 3.0); };
  auto grad = [](std::span<const double> x, std::span<double> out) {
    out[0] = 0.5 * (x[0] * x[0] - x[1] * x[1]);
    out[1] = -x[0] * x[1];
  };
  return ConservativeSystem(canonical_q(), RealMatrix{{r, 0.0}, {0.0, r}}, eps, v, grad);
}

State wind_initial_state(double eps) {
  const double s = std::sqrt(eps);
  return {1.1 * s, s};
}

ConservativeSystem harmonic_problem(double omega) {
  if (!(omega > 0.0)) throw ConfigError("harmonic problem requires omega > 0");
  auto v = [](std::span<const double>) { return 0.0; };
  auto grad = [](std::span<const double>, std::span<double> out) {
    for (auto& x : out) x = 0.0;
  };
  return ConservativeSystem(canonical_q(), RealMatrix{{omega, 0.0}, {0.0, omega}}, 1.0, v, grad);
}

Problem make_wind(double r, double eps) { return {"wind", wind_problem(r, eps), wind_initial_state(eps)}; }

Problem make_harmonic(double omega) { return {"harmonic", harmonic_problem(omega), State{1.0, 0.0}}; }

}  // namespace expint
