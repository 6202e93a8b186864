#pragma once

// One-step exponential integrators for y' = Omega y + g(y).
//
// Every coefficient a_ij(h*Omega), b_i(h*Omega) is a scalar function of
// z = h*(i*lambda) applied on the spectrum of Omega. Instantiating a method
// for a fixed (Omega, h) evaluates these once; stepping then only does
// small real mat-vecs and the stage fixed-point iteration.

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "expint/spectral.hpp"
#include "expint/system.hpp"

namespace expint {

struct SolverConfig {
  double tol = 1e-14;             // relative fixed-point tolerance
  int max_iter = 100;
  double divergence_factor = 1e6; // abort when |x| > factor * (1 + |y|)
  int damping_after = 20;         // non-contracting iterations before damping
  double damping = 0.5;

  /// Throws ConfigError unless tol > 0 and max_iter >= 1.
  void validate() const;
};

/// Scalar function of z; an empty handle is the zero coefficient.
using Coefficient = ScalarFunction;

Coefficient constant_coefficient(double value);
/// z -> scale * exp(shift * z)
Coefficient exp_coefficient(double scale, double shift);
/// z -> scale * phi1(arg_scale * z)
Coefficient phi1_coefficient(double scale, double arg_scale = 1.0);

struct Tableau {
  std::vector<double> c;
  std::vector<std::vector<Coefficient>> a;  // s x s
  std::vector<Coefficient> b;

  std::size_t stages() const noexcept { return c.size(); }
  void validate() const;
};

struct EIOMethod {
  std::string label;
  double c1 = 0.5;
  Coefficient a11;
  Coefficient b1;
  bool claimed_symmetric = false;
  bool claimed_reversible = false;
  bool claimed_symplectic = false;
};

/// The symmetric two-point scheme
///   y1 = e^{h Omega} y + h/2 (g(y1) + e^{h Omega} g(y)).
struct EITMethod {};

using MethodSpec = std::variant<EITMethod, EIOMethod, Tableau>;

/// EI-O1 ... EI-O5 with the coefficient sets and claimed properties of the
/// standard table of one-stage methods. Throws UnknownMethod.
EIOMethod table1_method(std::string_view name);

/// "EI-T" or one of the table names.
MethodSpec method_from_name(std::string_view name);
std::string method_name(const MethodSpec& m);

/// EI-T written as the two-stage tableau c = (0, 1).
Tableau ei_t_tableau();
Tableau as_tableau(const EIOMethod& m);

struct StepStats {
  int iterations = 0;
};

class Stepper {
 public:
  virtual ~Stepper() = default;

  /// One step from y into out (distinct buffers).
  virtual void step(std::span<const double> y, std::span<double> out, StepStats& stats) const = 0;

  State step(std::span<const double> y) const;
  double h() const noexcept { return h_; }
  std::size_t dim() const noexcept { return dim_; }

 protected:
  Stepper(double h, std::size_t dim) : h_(h), dim_(dim) {}

 private:
  double h_;
  std::size_t dim_;
};

/// Stepper for the diagonalised system y~ = P^H y, where every coefficient
/// is a diagonal matrix and g~(y~) = P^H g(Re(P y~)).
class TransformedStepper {
 public:
  virtual ~TransformedStepper() = default;
  virtual void step(std::span<const Complex> y, std::span<Complex> out, StepStats& stats) const = 0;
  ComplexState step(std::span<const Complex> y) const;
  double h() const noexcept { return h_; }
  std::size_t dim() const noexcept { return dim_; }

 protected:
  TransformedStepper(double h, std::size_t dim) : h_(h), dim_(dim) {}

 private:
  double h_;
  std::size_t dim_;
};

/// Precomputes all matrix coefficients at h*Omega. h may be negative (used
/// for the adjoint step). Throws SingularFunctionValue if a coefficient is
/// not finite there.
std::unique_ptr<Stepper> instantiate(const MethodSpec& method, const OscillatorySystem& osc, double h,
                                     const SolverConfig& cfg = {});

std::unique_ptr<TransformedStepper> instantiate_transformed(const MethodSpec& method, const OscillatorySystem& osc,
                                                            double h, const SolverConfig& cfg = {});

State step_general(const Tableau& tab, const OscillatorySystem& osc, double h, std::span<const double> y,
                   const SolverConfig& cfg = {});
State step_ei_t(const OscillatorySystem& osc, double h, std::span<const double> y, const SolverConfig& cfg = {});
State step_ei_o(const EIOMethod& m, const OscillatorySystem& osc, double h, std::span<const double> y,
                const SolverConfig& cfg = {});

/// max_ij |b_i a_ij + b_j a_ji - b_i b_j| <= tol.
bool rk_is_symplectic(const std::vector<std::vector<double>>& rk_a, const std::vector<double>& rk_b,
                      double tol = 1e-14);

/// a_ij(z) = a_ij * e^{(c_i - c_j) z}, b_i(z) = b_i * e^{(1 - c_i) z}.
/// Throws NotSymplecticRK if the classical method fails rk_is_symplectic.
Tableau build_symplectic_ei(const std::vector<double>& rk_c, const std::vector<std::vector<double>>& rk_a,
                            const std::vector<double>& rk_b);

/// Checks b1(h Omega) = 2 a11 e^{(1 - c1) h Omega} with a11(h Omega) the
/// constant a11(0) * I, both to tol * max(1, |b1(h Omega)|_inf).
bool is_symplectic_eio(const EIOMethod& m, const SpectralDecomposition& dec, double h, double tol = 1e-12);

/// |Phi_{-h}(Phi_h(y)) - y|_inf / max(1, |y|_inf).
double check_symmetry_numeric(const MethodSpec& method, const OscillatorySystem& osc, double h,
                              std::span<const double> y, const SolverConfig& cfg = {});

/// Classification threshold used with check_symmetry_numeric.
inline bool symmetric_residual(double residual, const SolverConfig& cfg) { return residual <= 100.0 * cfg.tol; }

}  // namespace expint
