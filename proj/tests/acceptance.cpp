// Acceptance suite: one PASS/FAIL line per criterion, indented measurements
// below it. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "expint/analysis.hpp"
#include "expint/harness.hpp"
#include "support.hpp"

using namespace expint;
using expint::test::max_diff;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  static std::string format(const char* fmt, auto... args) {
    if constexpr (sizeof...(args) == 0) {
      return fmt;
    } else {
      char buf[512];
      std::snprintf(buf, sizeof buf, fmt, args...);
      return buf;
    }
  }
  void require(bool ok, const char* fmt, auto... args) {
    notes.push_back((ok ? "ok   " : "MISS ") + format(fmt, args...));
    pass = pass && ok;
  }
  void note(const char* fmt, auto... args) { notes.push_back("     " + format(fmt, args...)); }
};

int failures = 0;

void criterion(int id, const char* title, double budget_seconds, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.require(false, "exception: %s", e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (budget_seconds > 0) out.require(secs < budget_seconds, "runtime %.2f s < %.0f s", secs, budget_seconds);
  std::printf("%s  [%d] %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", id, title, secs);
  for (const auto& n : out.notes) std::printf("        %s\n", n.c_str());
  std::fflush(stdout);
  if (!out.pass) ++failures;
}

const char* const kTable[] = {"EI-O1", "EI-O2", "EI-O3", "EI-O4", "EI-O5"};

std::vector<std::pair<std::string, MethodSpec>> all_methods() {
  std::vector<std::pair<std::string, MethodSpec>> m{{"EI-T", EITMethod{}}};
  for (const char* name : kTable) m.emplace_back(name, table1_method(name));
  return m;
}

void table_predicates(Outcome& o) {
  const double eps = 1e-4, h = 0.5;
  const Problem wind = make_wind(1.0, eps);
  const OscillatorySystem osc = derive_oscillatory(wind.system);
  int sympl = 0;
  for (const char* name : kTable) {
    const EIOMethod m = table1_method(name);
    const bool got = is_symplectic_eio(m, osc.dec, h);
    sympl += got == m.claimed_symplectic;
    o.require(got == m.claimed_symplectic, "%s symplectic: predicate %s, table %s", name, got ? "Yes" : "Non",
              m.claimed_symplectic ? "Yes" : "Non");
  }
  o.note("symplectic column %d/5", sympl);
  const SolverConfig cfg;
  int sym = 0;
  for (const auto& [name, m] : all_methods()) {
    const bool claimed = std::holds_alternative<EITMethod>(m) || std::get<EIOMethod>(m).claimed_symmetric;
    const double res = check_symmetry_numeric(m, osc, h, wind.y0, cfg);
    const bool got = symmetric_residual(res, cfg);
    sym += got == claimed;
    o.require(got == claimed, "%s symmetric: residual %.3e -> %s, table %s", name.c_str(), res, got ? "Yes" : "Non",
              claimed ? "Yes" : "Non");
  }
  o.note("symmetric column %d/6", sym);
}

void long_run(Outcome& o) {
  const char* const methods[] = {"EI-T", "EI-O1", "EI-O3", "EI-O5", "EI-O2", "EI-O4"};
  std::vector<ExperimentConfig> configs;
  for (const char* m : methods) {
    ExperimentConfig cfg;
    cfg.method = m;
    cfg.h = 0.5;
    cfg.T = 1e6;
    cfg.problem.eps = 1e-4;
    cfg.problem.r = 1.0;
    configs.push_back(cfg);
  }
  const std::vector<DriftSeries> runs = run_sweep(configs, 1);
  double symplectic_max = 0.0;
  double o2_max = 0.0;
  for (const DriftSeries& s : runs) {
    const std::string& name = s.config.method;
    const double slope_H = secular_slope(s.t, s.relerr_H, 1e3);
    const double slope_K = secular_slope(s.t, s.relerr_K, 1e3);
    const bool finite = std::isfinite(s.meta.max_relerr_H) && std::isfinite(s.meta.max_relerr_K);
    o.note("%-6s max relerr_H %.3e  max relerr_K %.3e  slope_H %+.3e  slope_K %+.3e  median it %.0f  %.2f s",
           name.c_str(), s.meta.max_relerr_H, s.meta.max_relerr_K, slope_H, slope_K, s.meta.median_iterations,
           s.meta.wall_seconds);
    if (name == "EI-O2") {
      o2_max = s.meta.max_relerr_H;
      continue;
    }
    if (name == "EI-O4") continue;
    o.require(finite, "%s drift finite", name.c_str());
    o.require(std::abs(slope_H) <= 1e-12 && std::abs(slope_K) <= 1e-12, "%s |slope| <= 1e-12 per unit time",
              name.c_str());
    o.require(s.meta.wall_seconds < 60.0, "%s runtime < 60 s", name.c_str());
    if (name != "EI-T" && table1_method(name).claimed_symplectic) symplectic_max = std::max(symplectic_max, s.meta.max_relerr_H);
  }
  o.require(o2_max >= 10.0 * symplectic_max, "EI-O2 max relerr_H %.3e >= 10 x symplectic max %.3e (ratio %.2f)",
            o2_max, symplectic_max, o2_max / symplectic_max);
}

void drift_scaling(Outcome& o) {
  const Problem wind = make_wind(1.0, 1e-2);
  for (const auto& [name, m] : {std::pair<std::string, MethodSpec>{"EI-T", EITMethod{}},
                                {"EI-O1", table1_method("EI-O1")}}) {
    const DriftScalingResult r = drift_scaling_study(wind, m, {0.02, 0.01, 0.005}, 1e3);
    for (std::size_t i = 0; i < r.h.size(); ++i)
      o.note("%-6s h %.3f  max relerr_H %.3e  max relerr_K %.3e", name.c_str(), r.h[i], r.max_relerr_H[i],
             r.max_relerr_K[i]);
    o.require(r.exponent_H && *r.exponent_H >= 0.8, "%s exponent_H %.3f >= 0.8", name.c_str(),
              r.exponent_H.value_or(NAN));
    o.require(r.exponent_K && *r.exponent_K >= 0.8, "%s exponent_K %.3f >= 0.8", name.c_str(),
              r.exponent_K.value_or(NAN));
  }
}

void linear_exactness(Outcome& o) {
  const double omega = 1e4, h = 0.5;
  const OscillatorySystem osc = derive_oscillatory(harmonic_problem(omega));
  const State y{0.6, -0.8};
  const State exact{std::cos(h * omega) * y[0] - std::sin(h * omega) * y[1],
                    std::sin(h * omega) * y[0] + std::cos(h * omega) * y[1]};
  for (const auto& [name, m] : all_methods()) {
    const double step_err = max_diff(instantiate(m, osc, h)->step(y), exact);
    ExperimentConfig cfg;
    cfg.problem.name = "harmonic";
    cfg.problem.omega = omega;
    cfg.method = name;
    cfg.h = h;
    cfg.T = 1e4 * h;
    const DriftSeries s = run_long(cfg);
    o.require(step_err <= 1e-12 && s.meta.max_relerr_H <= 1e-10,
              "%-6s one-step error %.2e <= 1e-12, relerr_H after 1e4 steps %.2e <= 1e-10", name.c_str(), step_err,
              s.meta.max_relerr_H);
  }
}

void reductions(Outcome& o) {
  const double h = 0.1;
  auto one = [&](const MethodSpec& m, const OscillatorySystem& osc, double y) {
    return instantiate(m, osc, h)->step(State{y})[0];
  };
  const double trap_lin = (1.0 - h / 2) / (1.0 + h / 2);
  const double c = 0.5 + 0.5 * h * 0.25;
  const double trap_sq = 2.0 * c / (1.0 + std::sqrt(1.0 - 2.0 * h * c));
  const double mid_lin = (1.0 + h / 2) / (1.0 - h / 2);
  const double mid_m = 2.0 * 0.5 / (1.0 + std::sqrt(1.0 - 2.0 * h * 0.5));
  const double mid_sq = 2.0 * mid_m - 0.5;

  const double e1 = std::abs(one(EITMethod{}, test::linear_scalar(-1.0), 1.0) - trap_lin);
  const double e2 = std::abs(one(EITMethod{}, test::square_scalar(), 0.5) - trap_sq);
  o.require(e1 <= 1e-12 && e2 <= 1e-12, "EI-T vs trapezoidal rule: linear %.1e, quadratic %.1e", e1, e2);
  for (const char* name : {"EI-O1", "EI-O2"}) {
    const EIOMethod m = table1_method(name);
    const double f1 = std::abs(one(m, test::linear_scalar(1.0), 1.0) - mid_lin);
    const double f2 = std::abs(one(m, test::square_scalar(), 0.5) - mid_sq);
    o.require(f1 <= 1e-12 && f2 <= 1e-12, "%s vs implicit midpoint: linear %.1e, quadratic %.1e", name, f1, f2);
  }
}

void convergence(Outcome& o) {
  const Problem wind = make_wind(1.0, 1e-2);
  const std::vector<double> hs{0.01, 0.005, 0.0025};
  const struct {
    const char* name;
    double target;
  } cases[] = {{"EI-T", 2.0}, {"EI-O1", 2.0}, {"EI-O3", 1.0}};
  for (const auto& cs : cases) {
    const ConvergenceResult r = convergence_study(wind, method_from_name(cs.name), hs, 1.0);
    o.require(std::abs(r.order - cs.target) <= 0.2, "%-6s order %.3f, expected %.1f +- 0.2 (errors %.2e %.2e %.2e)",
              cs.name, r.order, cs.target, r.error[0], r.error[1], r.error[2]);
  }
}

void spectral_suite(Outcome& o) {
  double worst_rec = 0.0, worst_unit = 0.0, worst_phi = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 16);
    const DenseMatrix omega = test::random_skew_hermitian(d, trial % 2 == 0);
    const auto dec = eig_skew_hermitian(omega);
    worst_rec = std::max(worst_rec, max_diff(reconstruct(dec), omega));
    double top = 0.0;
    for (double l : dec.lambda) top = std::max(top, std::abs(l));
    const double t = std::pow(10.0, test::uniform(-3, 6)) / std::max(top, 1.0);
    worst_unit = std::max(worst_unit, test::unitarity_defect(expm(dec, t)));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const double mag = std::pow(10.0, test::uniform(-10, 4));
    const Complex z(0.0, (trial % 2 ? -1.0 : 1.0) * mag);
    const Complex em1 = mag < 1e-3 ? expm1_complex(z) : std::exp(z) - 1.0;
    worst_phi = std::max(worst_phi, std::abs(z * phi1_scalar(z) - em1));
  }
  for (double r : {1e-12, 1e-9, 5e-7, 9.99e-7}) {
    const Complex z(r, -r);
    worst_phi = std::max(worst_phi, std::abs(z * phi1_scalar(z) - expm1_complex(z)));
  }
  o.require(worst_rec <= 1e-12, "reconstruction over 100 matrices (d <= 16): %.2e <= 1e-12", worst_rec);
  o.require(worst_unit <= 1e-10, "|| |e^{t Omega}|_2 - 1 |: %.2e <= 1e-10", worst_unit);
  o.require(worst_phi <= 1e-12, "z phi1(z) - (e^z - 1): %.2e <= 1e-12", worst_phi);
}

void analysis_suite(Outcome& o) {
  using Set = std::set<MultiIndex>;
  const auto single = enumerate_resonance({{1.0}, 1.0}, 3);
  o.require(Set(single.module_members.begin(), single.module_members.end()) == Set{{0}} &&
                single.representatives.size() == 7,
            "single frequency: module {0}, 7 representatives");
  const auto pair = enumerate_resonance({{1.0, 2.0}, 1.0}, 3);
  const Set pm(pair.module_members.begin(), pair.module_members.end());
  o.require(pm.count({2, -1}) == 1 && pm.count({-2, 1}) == 1, "(1,2): (2,-1) and (-2,1) in module");
  const auto irr = enumerate_resonance({{1.0, std::sqrt(2.0)}, 1.0}, 5, 1e-12);
  o.require(irr.module_members.size() == 1, "(1,sqrt2), N=5: module {0}");

  const auto osc = derive_oscillatory(wind_problem(1.0, 1e-4));
  const FrequencyBasis basis = frequency_basis(osc);
  const auto rep = check_nonresonance(basis, 0.5, 4, 0.1, enumerate_resonance(basis, 4));
  double worst = 0.0;
  for (const auto& row : rep.rows) {
    const long double arg = 2500.0L * static_cast<long double>(row.k[0]);
    const double direct = static_cast<double>(std::abs(std::sin(arg)));
    worst = std::max(worst, std::abs(row.sine - direct) / std::abs(static_cast<double>(arg)));
  }
  o.require(rep.rows.size() == 8 && worst <= 1e-15, "non-resonance k = 1..4 vs |sin(2500 k)|: %.1e per unit argument",
            worst);

  const double w = 1e4, hs = 0.05 / w;
  const Complex z1 = std::polar(1e-2, 0.3), z2 = std::polar(1e-4, -1.1);
  SampledTrajectory syn;
  for (int n = 0; n < 400; ++n) {
    const double t = n * hs;
    syn.t.push_back(t);
    syn.y.push_back({z1 * std::polar(1.0, w * t) + z2 * std::polar(1.0, 2 * w * t)});
  }
  const auto kset = multi_indices(1, 2);
  const auto fit2 = fit_modal_amplitudes(syn, {{1.0}, 1e-4}, kset, 0, 400);
  double rel1 = 0, rel2 = 0;
  for (std::size_t m = 0; m < kset.size(); ++m) {
    if (kset[m][0] == 1) rel1 = std::abs(fit2.amplitudes(m, 0) - z1) / std::abs(z1);
    if (kset[m][0] == 2) rel2 = std::abs(fit2.amplitudes(m, 0) - z2) / std::abs(z2);
  }
  o.require(rel1 <= 1e-6 && rel2 <= 1e-6, "two-tone fit: relative errors %.1e, %.1e <= 1e-6", rel1, rel2);

  const Problem wind = make_wind(1.0, 1e-4);
  const SampledTrajectory traj = transformed_samples(wind, EITMethod{}, 1e-5, 10000);
  const auto fit = fit_modal_amplitudes(traj, basis, multi_indices(1, 3), traj.t.size() - 64, 64);
  const auto levels = amplitude_by_order(fit);
  o.require(amplitude_hierarchy(levels), "wind h=1e-5, 1e4 steps: |z^k| for |k|=1,2,3: %.3e %.3e %.3e (residual %.1e)",
            levels[1], levels[2], levels[3], fit.residual);
}

}  // namespace

int main() {
  criterion(1, "method table predicates: symplectic 5/5 and symmetric 6/6 at h=0.5, eps=1e-4", 1.0, table_predicates);
  criterion(2, "long-run conservation on the wind problem, h=0.5, T=1e6", 0.0, long_run);
  criterion(3, "O(h) drift scaling, eps=1e-2, T=1e3, h in {0.02, 0.01, 0.005}", 30.0, drift_scaling);
  criterion(4, "linear exactness and unitarity at h omega = 5000", 0.0, linear_exactness);
  criterion(5, "Omega = 0 reductions to trapezoidal and midpoint rules", 0.0, reductions);
  criterion(6, "convergence orders on the eps=1e-2 wind problem", 10.0, convergence);
  criterion(7, "spectral-core property suite", 0.0, spectral_suite);
  criterion(8, "analysis suite: resonance, non-resonance, modal fits", 0.0, analysis_suite);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
