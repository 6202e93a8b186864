#include "expint/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "expint/errors.hpp"

namespace expint {

namespace {

double inf_norm(std::span<const double> v) {
  double n = 0.0;
  for (double x : v) n = std::max(n, std::abs(x));
  return n;
}

RealMatrix real_coefficient(const Coefficient& f, const SpectralDecomposition& dec, double h) {
  return real_part(matfun(f, dec, h), 1e-11);
}

// Shared fixed-point loop. `apply` maps the iterate x to F(x).
template <class T, class Map>
int fixed_point(Map&& apply, std::vector<T>& x, std::vector<T>& fx, double y_norm, const SolverConfig& cfg) {
  const double guard = cfg.divergence_factor * (1.0 + y_norm);
  double prev_diff = INFINITY;
  int non_contracting = 0;
  bool damped = false;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    apply(x, fx);
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      diff = std::max(diff, std::abs(fx[i] - x[i]));
      norm = std::max(norm, std::abs(fx[i]));
    }
    if (!std::isfinite(norm) || norm > guard)
      throw FixedPointDiverged("stage iteration left the divergence guard after " + std::to_string(it) +
                               " iterations");
    if (diff <= cfg.tol * norm) {
      x.swap(fx);
      return it;
    }
    if (diff >= prev_diff && ++non_contracting >= cfg.damping_after) damped = true;
    prev_diff = diff;
    if (damped) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += cfg.damping * (fx[i] - x[i]);
    } else {
      x.swap(fx);
    }
  }
  throw FixedPointDiverged("stage iteration did not converge in " + std::to_string(cfg.max_iter) + " iterations");
}

class EITStepper final : public Stepper {
 public:
  EITStepper(const OscillatorySystem& osc, double h, const SolverConfig& cfg)
      : Stepper(h, osc.dim()), osc_(osc), cfg_(cfg), expo_(real_coefficient(exp_coefficient(1.0, 1.0), osc.dec, h)) {}

  void step(std::span<const double> y, std::span<double> out, StepStats& stats) const override {
    const std::size_t d = dim();
    const double h = this->h();
    std::vector<double> gy(d), tmp(d), base(d), x(d), fx(d);
    osc_.nonlinearity(y, gy);
    // base = E (y + h/2 g(y)), predictor = E (y + h g(y))
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + 0.5 * h * gy[i];
    expo_.multiply(tmp, base);
    for (std::size_t i = 0; i < d; ++i) tmp[i] = y[i] + h * gy[i];
    expo_.multiply(tmp, x);
    std::vector<double> gx(d);
    auto apply = [&](const std::vector<double>& cur, std::vector<double>& next) {
      osc_.nonlinearity(cur, gx);
      for (std::size_t i = 0; i < d; ++i) next[i] = base[i] + 0.5 * h * gx[i];
    };
    stats.iterations = fixed_point(apply, x, fx, inf_norm(y), cfg_);
    std::copy(x.begin(), x.end(), out.begin());
  }

 private:
  OscillatorySystem osc_;
  SolverConfig cfg_;
  RealMatrix expo_;
};

class TableauStepper final : public Stepper {
 public:
  TableauStepper(const Tableau& tab, const OscillatorySystem& osc, double h, const SolverConfig& cfg)
      : Stepper(h, osc.dim()), osc_(osc), cfg_(cfg), c_(tab.c) {
    tab.validate();
    const std::size_t s = tab.stages();
    expo_ = real_coefficient(exp_coefficient(1.0, 1.0), osc.dec, h);
    for (std::size_t i = 0; i < s; ++i) {
      stage_expo_.push_back(real_coefficient(exp_coefficient(1.0, c_[i]), osc.dec, h));
      auto& row = a_.emplace_back();
      for (std::size_t j = 0; j < s; ++j) {
        if (tab.a[i][j]) row.emplace_back(real_coefficient(tab.a[i][j], osc.dec, h));
        else row.emplace_back(std::nullopt);
      }
      if (tab.b[i]) b_.emplace_back(real_coefficient(tab.b[i], osc.dec, h));
      else b_.emplace_back(std::nullopt);
    }
  }

  void step(std::span<const double> y, std::span<double> out, StepStats& stats) const override {
    const std::size_t d = dim();
    const std::size_t s = c_.size();
    const double h = this->h();
    std::vector<double> gy(d), tmp(d), stage_base(s * d), x(s * d), fx(s * d), g(s * d), prod(d);
    osc_.nonlinearity(y, gy);
    for (std::size_t i = 0; i < s; ++i) {
      stage_expo_[i].multiply(y, std::span<double>(stage_base).subspan(i * d, d));
      for (std::size_t k = 0; k < d; ++k) tmp[k] = y[k] + c_[i] * h * gy[k];
      stage_expo_[i].multiply(tmp, std::span<double>(x).subspan(i * d, d));
    }
    auto apply = [&](const std::vector<double>& cur, std::vector<double>& next) {
      for (std::size_t j = 0; j < s; ++j)
        osc_.nonlinearity(std::span<const double>(cur).subspan(j * d, d), std::span<double>(g).subspan(j * d, d));
      for (std::size_t i = 0; i < s; ++i) {
        std::copy_n(stage_base.begin() + i * d, d, next.begin() + i * d);
        for (std::size_t j = 0; j < s; ++j) {
          if (!a_[i][j]) continue;
          a_[i][j]->multiply(std::span<const double>(g).subspan(j * d, d), prod);
          for (std::size_t k = 0; k < d; ++k) next[i * d + k] += h * prod[k];
        }
      }
    };
    stats.iterations = fixed_point(apply, x, fx, inf_norm(y), cfg_);

    expo_.multiply(y, out);
    for (std::size_t i = 0; i < s; ++i) {
      if (!b_[i]) continue;
      osc_.nonlinearity(std::span<const double>(x).subspan(i * d, d), tmp);
      b_[i]->multiply(tmp, prod);
      for (std::size_t k = 0; k < d; ++k) out[k] += h * prod[k];
    }
  }

 private:
  OscillatorySystem osc_;
  SolverConfig cfg_;
  std::vector<double> c_;
  RealMatrix expo_;
  std::vector<RealMatrix> stage_expo_;
  std::vector<std::vector<std::optional<RealMatrix>>> a_;
  std::vector<std::optional<RealMatrix>> b_;
};

// Diagonal form y~' = i Lambda y~ + P^H g(P y~).
class DiagonalStepper final : public TransformedStepper {
 public:
  DiagonalStepper(const MethodSpec& method, const OscillatorySystem& osc, double h, const SolverConfig& cfg)
      : TransformedStepper(h, osc.dim()), osc_(osc), cfg_(cfg) {
    expo_ = diagonal(exp_coefficient(1.0, 1.0), h);
    if (std::holds_alternative<EITMethod>(method)) {
      two_point_ = true;
      return;
    }
    const Tableau tab = std::holds_alternative<EIOMethod>(method) ? as_tableau(std::get<EIOMethod>(method))
                                                                   : std::get<Tableau>(method);
    tab.validate();
    c_ = tab.c;
    const std::size_t s = tab.stages();
    for (std::size_t i = 0; i < s; ++i) {
      stage_expo_.push_back(diagonal(exp_coefficient(1.0, c_[i]), h));
      auto& row = a_.emplace_back();
      for (std::size_t j = 0; j < s; ++j)
        row.push_back(tab.a[i][j] ? diagonal(tab.a[i][j], h) : std::vector<Complex>{});
      b_.push_back(tab.b[i] ? diagonal(tab.b[i], h) : std::vector<Complex>{});
    }
  }

  void step(std::span<const Complex> y, std::span<Complex> out, StepStats& stats) const override {
    const std::size_t d = dim();
    const double h = this->h();
    std::vector<Complex> gy(d);
    nonlinearity(y, gy);
    double y_norm = 0.0;
    for (const auto& v : y) y_norm = std::max(y_norm, std::abs(v));

    if (two_point_) {
      std::vector<Complex> base(d), x(d), fx(d), gx(d);
      for (std::size_t i = 0; i < d; ++i) {
        base[i] = expo_[i] * (y[i] + 0.5 * h * gy[i]);
        x[i] = expo_[i] * (y[i] + h * gy[i]);
      }
      auto apply = [&](const std::vector<Complex>& cur, std::vector<Complex>& next) {
        nonlinearity(cur, gx);
        for (std::size_t i = 0; i < d; ++i) next[i] = base[i] + 0.5 * h * gx[i];
      };
      stats.iterations = fixed_point(apply, x, fx, y_norm, cfg_);
      std::copy(x.begin(), x.end(), out.begin());
      return;
    }

    const std::size_t s = c_.size();
    std::vector<Complex> base(s * d), x(s * d), fx(s * d), g(s * d), tmp(d);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t k = 0; k < d; ++k) {
        base[i * d + k] = stage_expo_[i][k] * y[k];
        x[i * d + k] = stage_expo_[i][k] * (y[k] + c_[i] * h * gy[k]);
      }
    auto apply = [&](const std::vector<Complex>& cur, std::vector<Complex>& next) {
      for (std::size_t j = 0; j < s; ++j)
        nonlinearity(std::span<const Complex>(cur).subspan(j * d, d), std::span<Complex>(g).subspan(j * d, d));
      for (std::size_t i = 0; i < s; ++i)
        for (std::size_t k = 0; k < d; ++k) {
          Complex acc = base[i * d + k];
          for (std::size_t j = 0; j < s; ++j)
            if (!a_[i][j].empty()) acc += h * a_[i][j][k] * g[j * d + k];
          next[i * d + k] = acc;
        }
    };
    stats.iterations = fixed_point(apply, x, fx, y_norm, cfg_);
    for (std::size_t k = 0; k < d; ++k) out[k] = expo_[k] * y[k];
    for (std::size_t i = 0; i < s; ++i) {
      if (b_[i].empty()) continue;
      nonlinearity(std::span<const Complex>(x).subspan(i * d, d), tmp);
      for (std::size_t k = 0; k < d; ++k) out[k] += h * b_[i][k] * tmp[k];
    }
  }

 private:
  std::vector<Complex> diagonal(const Coefficient& f, double h) const {
    std::vector<Complex> out(dim());
    for (std::size_t j = 0; j < dim(); ++j) {
      out[j] = f(Complex(0.0, h * osc_.dec.lambda[j]));
      if (!std::isfinite(out[j].real()) || !std::isfinite(out[j].imag()))
        throw SingularFunctionValue("coefficient is not finite on the spectrum");
    }
    return out;
  }

  // P^H g(Re(P y~))
  void nonlinearity(std::span<const Complex> yt, std::span<Complex> out) const {
    const std::size_t d = dim();
    std::vector<double> y(d), gy(d);
    for (std::size_t i = 0; i < d; ++i) {
      Complex acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += osc_.dec.P(i, j) * yt[j];
      y[i] = acc.real();
    }
    osc_.nonlinearity(y, gy);
    for (std::size_t j = 0; j < d; ++j) {
      Complex acc = 0.0;
      for (std::size_t i = 0; i < d; ++i) acc += std::conj(osc_.dec.P(i, j)) * gy[i];
      out[j] = acc;
    }
  }

  OscillatorySystem osc_;
  SolverConfig cfg_;
  bool two_point_ = false;
  std::vector<double> c_;
  std::vector<Complex> expo_;
  std::vector<std::vector<Complex>> stage_expo_;
  std::vector<std::vector<std::vector<Complex>>> a_;
  std::vector<std::vector<Complex>> b_;
};

}  // namespace

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("solver tol must be positive");
  if (max_iter < 1) throw ConfigError("solver max_iter must be at least 1");
  if (!(divergence_factor > 0.0)) throw ConfigError("solver divergence factor must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("solver damping must lie in (0, 1]");
}

Coefficient constant_coefficient(double value) {
  return [value](Complex) { return Complex(value); };
}

Coefficient exp_coefficient(double scale, double shift) {
  return [scale, shift](Complex z) { return scale * std::exp(shift * z); };
}

Coefficient phi1_coefficient(double scale, double arg_scale) {
  return [scale, arg_scale](Complex z) { return scale * phi1_scalar(arg_scale * z); };
}

void Tableau::validate() const {
  const std::size_t s = stages();
  if (s == 0) throw ConfigError("tableau has no stages");
  if (a.size() != s || b.size() != s) throw ConfigError("tableau dimensions are inconsistent");
  for (const auto& row : a)
    if (row.size() != s) throw ConfigError("tableau A is not square");
  for (double ci : c)
    if (!(ci >= 0.0 && ci <= 1.0)) throw ConfigError("tableau nodes must lie in [0, 1]");
}

EIOMethod table1_method(std::string_view name) {
  if (name == "EI-O1")
    return {"EI-O1", 0.5, constant_coefficient(0.5), exp_coefficient(1.0, 0.5), true, true, true};
  if (name == "EI-O2")
    return {"EI-O2", 0.5, constant_coefficient(0.5), phi1_coefficient(1.0), false, false, false};
  if (name == "EI-O3")
    return {"EI-O3", 2.0 / 3.0, constant_coefficient(0.5), exp_coefficient(1.0, 1.0 / 3.0), false, false, true};
  if (name == "EI-O4")
    return {"EI-O4", 0.5, phi1_coefficient(0.5, 0.5), phi1_coefficient(1.0), true, true, false};
  if (name == "EI-O5")
    return {"EI-O5", 0.5, constant_coefficient(1.0 / 3.0), exp_coefficient(2.0 / 3.0, 0.5), false, false, true};
  throw UnknownMethod("unknown method '" + std::string(name) + "'");
}

MethodSpec method_from_name(std::string_view name) {
  if (name == "EI-T") return EITMethod{};
  return table1_method(name);
}

std::string method_name(const MethodSpec& m) {
  struct Visitor {
    std::string operator()(const EITMethod&) const { return "EI-T"; }
    std::string operator()(const EIOMethod& e) const { return e.label; }
    std::string operator()(const Tableau& t) const { return "tableau-" + std::to_string(t.stages()) + "stage"; }
  };
  return std::visit(Visitor{}, m);
}

Tableau ei_t_tableau() {
  Tableau t;
  t.c = {0.0, 1.0};
  t.a = {{Coefficient{}, Coefficient{}}, {exp_coefficient(0.5, 1.0), constant_coefficient(0.5)}};
  t.b = {exp_coefficient(0.5, 1.0), constant_coefficient(0.5)};
  return t;
}

Tableau as_tableau(const EIOMethod& m) {
  Tableau t;
  t.c = {m.c1};
  t.a = {{m.a11}};
  t.b = {m.b1};
  return t;
}

State Stepper::step(std::span<const double> y) const {
  State out(dim());
  StepStats stats;
  step(y, out, stats);
  return out;
}

std::unique_ptr<Stepper> instantiate(const MethodSpec& method, const OscillatorySystem& osc, double h,
                                     const SolverConfig& cfg) {
  if (!(std::isfinite(h) && h != 0.0)) throw ConfigError("step size must be finite and nonzero");
  cfg.validate();
  struct Visitor {
    const OscillatorySystem& osc;
    double h;
    const SolverConfig& cfg;
    std::unique_ptr<Stepper> operator()(const EITMethod&) const { return std::make_unique<EITStepper>(osc, h, cfg); }
    std::unique_ptr<Stepper> operator()(const EIOMethod& m) const {
      if (!m.a11 || !m.b1) throw ConfigError("EI-O method '" + m.label + "' lacks a coefficient");
      return std::make_unique<TableauStepper>(as_tableau(m), osc, h, cfg);
    }
    std::unique_ptr<Stepper> operator()(const Tableau& t) const {
      return std::make_unique<TableauStepper>(t, osc, h, cfg);
    }
  };
  return std::visit(Visitor{osc, h, cfg}, method);
}

std::unique_ptr<TransformedStepper> instantiate_transformed(const MethodSpec& method, const OscillatorySystem& osc,
                                                            double h, const SolverConfig& cfg) {
  if (!(std::isfinite(h) && h != 0.0)) throw ConfigError("step size must be finite and nonzero");
  cfg.validate();
  if (const auto* m = std::get_if<EIOMethod>(&method); m && (!m->a11 || !m->b1))
    throw ConfigError("EI-O method '" + m->label + "' lacks a coefficient");
  return std::make_unique<DiagonalStepper>(method, osc, h, cfg);
}

ComplexState TransformedStepper::step(std::span<const Complex> y) const {
  ComplexState out(dim());
  StepStats stats;
  step(y, out, stats);
  return out;
}

namespace {
void require_positive(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step size must be positive");
}
}  // namespace

State step_general(const Tableau& tab, const OscillatorySystem& osc, double h, std::span<const double> y,
                   const SolverConfig& cfg) {
  require_positive(h);
  return instantiate(tab, osc, h, cfg)->step(y);
}

State step_ei_t(const OscillatorySystem& osc, double h, std::span<const double> y, const SolverConfig& cfg) {
  require_positive(h);
  return instantiate(EITMethod{}, osc, h, cfg)->step(y);
}

State step_ei_o(const EIOMethod& m, const OscillatorySystem& osc, double h, std::span<const double> y,
                const SolverConfig& cfg) {
  require_positive(h);
  return instantiate(m, osc, h, cfg)->step(y);
}

bool rk_is_symplectic(const std::vector<std::vector<double>>& rk_a, const std::vector<double>& rk_b, double tol) {
  const std::size_t s = rk_b.size();
  if (rk_a.size() != s) throw ConfigError("RK coefficient sizes are inconsistent");
  for (const auto& row : rk_a)
    if (row.size() != s) throw ConfigError("RK matrix is not square");
  double worst = 0.0;
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < s; ++j)
      worst = std::max(worst, std::abs(rk_b[i] * rk_a[i][j] + rk_b[j] * rk_a[j][i] - rk_b[i] * rk_b[j]));
  return worst <= tol;
}

Tableau build_symplectic_ei(const std::vector<double>& rk_c, const std::vector<std::vector<double>>& rk_a,
                            const std::vector<double>& rk_b) {
  if (rk_c.size() != rk_b.size()) throw ConfigError("RK coefficient sizes are inconsistent");
  if (!rk_is_symplectic(rk_a, rk_b)) throw NotSymplecticRK("classical RK coefficients are not symplectic");
  const std::size_t s = rk_c.size();
  Tableau t;
  t.c = rk_c;
  t.a.resize(s);
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      if (rk_a[i][j] == 0.0) t.a[i].emplace_back();
      else t.a[i].push_back(exp_coefficient(rk_a[i][j], rk_c[i] - rk_c[j]));
    }
    if (rk_b[i] == 0.0) t.b.emplace_back();
    else t.b.push_back(exp_coefficient(rk_b[i], 1.0 - rk_c[i]));
  }
  t.validate();
  return t;
}

bool is_symplectic_eio(const EIOMethod& m, const SpectralDecomposition& dec, double h, double tol) {
  if (!m.a11 || !m.b1) return false;
  const DenseMatrix b1 = matfun(m.b1, dec, h);
  const DenseMatrix a11 = matfun(m.a11, dec, h);
  const Complex a_bar = m.a11(Complex(0.0));
  const double scale = tol * std::max(1.0, b1.norm_inf());

  DenseMatrix constant = DenseMatrix::identity(dec.dim());
  constant *= a_bar;
  if ((a11 - constant).norm_inf() > scale) return false;

  const DenseMatrix target = matfun(exp_coefficient(1.0, 1.0 - m.c1), dec, h);
  DenseMatrix expected = target;
  expected *= 2.0 * a_bar;
  return (b1 - expected).norm_inf() <= scale;
}

double check_symmetry_numeric(const MethodSpec& method, const OscillatorySystem& osc, double h,
                              std::span<const double> y, const SolverConfig& cfg) {
  require_positive(h);
  const auto forward = instantiate(method, osc, h, cfg);
  const auto backward = instantiate(method, osc, -h, cfg);
  const State y1 = forward->step(y);
  const State y0 = backward->step(y1);
  double diff = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) diff = std::max(diff, std::abs(y0[i] - y[i]));
  return diff / std::max(1.0, inf_norm(y));
}

}  // namespace expint
