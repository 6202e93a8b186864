#include "expint/system.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "expint/errors.hpp"

namespace expint {

namespace {

constexpr double kStructureTol = 1e-12;
constexpr double kGradientTol = 1e-5;

double inf_norm(std::span<const double> v) {
  double n = 0.0;
  for (double x : v) n = std::max(n, std::abs(x));
  return n;
}

std::vector<State> probe_points(std::size_t d, double scale) {
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<State> pts;
  pts.emplace_back(d, 0.0);
  for (int k = 0; k < 4; ++k) {
    State p(d);
    for (auto& x : p) x = dist(rng);
    pts.push_back(std::move(p));
  }
  return pts;
}

}  // namespace

ConservativeSystem::ConservativeSystem(RealMatrix q, RealMatrix m, double eps, PotentialFn v,
                                       GradientFn grad_v, double probe_scale)
    : q_(std::move(q)), m_(std::move(m)), eps_(eps), v_(std::move(v)), grad_v_(std::move(grad_v)) {
  if (!q_.square() || q_.rows() == 0) throw ConfigError("Q must be a non-empty square matrix");
  if (m_.rows() != q_.rows() || m_.cols() != q_.cols()) throw ConfigError("M and Q differ in size");
  if (!(eps_ > 0.0) || !std::isfinite(eps_)) throw ConfigError("eps must be positive and finite");
  if (!v_ || !grad_v_) throw ConfigError("potential and gradient evaluators are required");
  if ((q_ + q_.adjoint()).max_abs() > kStructureTol * std::max(1.0, q_.max_abs()))
    throw ConfigError("Q is not skew-symmetric");
  if ((m_ - m_.adjoint()).max_abs() > kStructureTol * std::max(1.0, m_.max_abs()))
    throw ConfigError("M is not symmetric");
  const auto pts = probe_points(dim(), probe_scale);
  const double err = gradient_check(*this, pts);
  if (!(err <= kGradientTol))
    throw ConfigError("gradient of V disagrees with finite differences (error " + std::to_string(err) + ")");
}

ConservativeSystem ConservativeSystem::with_eps(double eps) const {
  ConservativeSystem copy = *this;
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("eps must be positive and finite");
  copy.eps_ = eps;
  return copy;
}

double gradient_check(const ConservativeSystem& sys, std::span<const State> points) {
  const std::size_t d = sys.dim();
  double worst = 0.0;
  State grad(d);
  for (const auto& y : points) {
    sys.grad_potential(y, grad);
    const double step = 1e-6 * std::max(1.0, inf_norm(y));
    State probe = y;
    for (std::size_t i = 0; i < d; ++i) {
      probe[i] = y[i] + step;
      const double up = sys.potential(probe);
      probe[i] = y[i] - step;
      const double down = sys.potential(probe);
      probe[i] = y[i];
      worst = std::max(worst, std::abs(grad[i] - (up - down) / (2.0 * step)));
    }
  }
  return worst;
}

void OscillatorySystem::nonlinearity(std::span<const double> y, std::span<double> out) const {
  const std::size_t d = dim();
  // Small fixed-size scratch keeps the hot loop allocation-free for d <= 16.
  double stack[16];
  std::vector<double> heap;
  std::span<double> grad;
  if (d <= 16) {
    grad = std::span<double>(stack, d);
  } else {
    heap.resize(d);
    grad = heap;
  }
  system.grad_potential(y, grad);
  q.multiply(grad, out);
}

OscillatorySystem derive_oscillatory(const ConservativeSystem& sys, double zero_tol) {
  RealMatrix omega_real = sys.Q() * sys.M();
  omega_real *= 1.0 / sys.eps();
  DenseMatrix omega = to_complex(omega_real);
  SpectralDecomposition dec = eig_skew_hermitian(omega, zero_tol);
  return OscillatorySystem{std::move(omega), std::move(omega_real), std::move(dec), sys.Q(), sys};
}

double kinetic(const ConservativeSystem& sys, std::span<const double> y) {
  const std::size_t d = sys.dim();
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += sys.M()(i, j) * y[j];
    acc += y[i] * row;
  }
  return 0.5 * acc / sys.eps();
}

double energy(const ConservativeSystem& sys, std::span<const double> y) {
  return kinetic(sys, y) + sys.potential(y);
}

State grad_energy(const ConservativeSystem& sys, std::span<const double> y) {
  const std::size_t d = sys.dim();
  State g(d);
  sys.grad_potential(y, g);
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += sys.M()(i, j) * y[j];
    g[i] += row / sys.eps();
  }
  return g;
}

ComplexState transform_state(const OscillatorySystem& osc, std::span<const double> y) {
  ComplexState yc(y.begin(), y.end());
  return transform_state(osc, std::span<const Complex>(yc));
}

ComplexState transform_state(const OscillatorySystem& osc, std::span<const Complex> y) {
  const std::size_t d = osc.dim();
  ComplexState out(d);
  for (std::size_t j = 0; j < d; ++j) {
    Complex acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += std::conj(osc.dec.P(i, j)) * y[i];
    out[j] = acc;
  }
  return out;
}

ComplexState untransform_state(const OscillatorySystem& osc, std::span<const Complex> yt) {
  ComplexState out(osc.dim());
  osc.dec.P.multiply(yt, out);
  return out;
}

double transformed_kinetic(const OscillatorySystem& osc, std::span<const Complex> yt) {
  double acc = 0.0;
  for (std::size_t j = 0; j < osc.dim(); ++j) acc += std::abs(osc.dec.lambda[j]) * std::norm(yt[j]);
  return 0.5 * acc;
}

double transformed_energy(const OscillatorySystem& osc, std::span<const Complex> yt) {
  const ComplexState y = untransform_state(osc, yt);
  State yr(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) yr[i] = y[i].real();
  return transformed_kinetic(osc, yt) + osc.system.potential(yr);
}

}  // namespace expint
