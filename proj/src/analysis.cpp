#include "expint/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "expint/errors.hpp"

namespace expint {

int l1_norm(const MultiIndex& k) {
  int n = 0;
  for (int v : k) n += std::abs(v);
  return n;
}

double dot(const MultiIndex& k, std::span<const double> lambda) {
  double acc = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) acc += k[i] * lambda[i];
  return acc;
}

std::vector<double> FrequencyBasis::omega_tilde() const {
  std::vector<double> w(lambda.size());
  std::transform(lambda.begin(), lambda.end(), w.begin(), [this](double l) { return l / eps; });
  return w;
}

void FrequencyBasis::validate() const {
  if (lambda.empty()) throw ConfigError("frequency basis is empty");
  if (!(eps > 0.0)) throw ConfigError("frequency basis needs eps > 0");
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (!(lambda[i] > 0.0) || !std::isfinite(lambda[i])) throw ConfigError("frequencies must be positive");
    for (std::size_t j = 0; j < i; ++j)
      if (lambda[i] == lambda[j]) throw ConfigError("frequencies must be distinct");
  }
}

FrequencyBasis frequency_basis(const OscillatorySystem& osc, double rel_tol) {
  const double eps = osc.system.eps();
  double top = 0.0;
  for (double l : osc.dec.lambda) top = std::max(top, std::abs(l));
  FrequencyBasis basis{{}, eps};
  for (double l : osc.dec.lambda) {
    if (l <= rel_tol * top) continue;
    const double scaled = l * eps;
    if (basis.lambda.empty() || scaled - basis.lambda.back() > rel_tol * top * eps) basis.lambda.push_back(scaled);
  }
  return basis;
}

namespace {

constexpr double kBudget = 1e7;

void for_each_index(std::size_t l, int N, const auto& visit) {
  if (std::pow(2.0 * N + 1.0, static_cast<double>(l)) > kBudget)
    throw CombinatorialBudgetExceeded("(2N+1)^l = " + std::to_string(std::pow(2.0 * N + 1.0, double(l))) +
                                      " exceeds the enumeration budget");
  MultiIndex k(l, -N);
  while (true) {
    if (l1_norm(k) <= N) visit(k);
    std::size_t pos = l;
    while (pos > 0) {
      --pos;
      if (k[pos] < N) {
        ++k[pos];
        std::fill(k.begin() + pos + 1, k.end(), -N);
        break;
      }
      if (pos == 0) return;
    }
    if (l == 0) return;
  }
}

bool better_representative(const MultiIndex& a, const MultiIndex& b) {
  const int na = l1_norm(a);
  const int nb = l1_norm(b);
  return na != nb ? na < nb : a < b;
}

MultiIndex negate(MultiIndex k) {
  for (auto& v : k) v = -v;
  return k;
}

}  // namespace

bool ResonanceSet::in_module(const MultiIndex& k) const {
  double top = 0.0;
  for (double l : lambda) top = std::max(top, std::abs(l));
  return std::abs(dot(k, lambda)) <= tol * top;
}

ResonanceSet enumerate_resonance(const FrequencyBasis& basis, int N, double tol) {
  basis.validate();
  if (N < 1) throw ConfigError("resonance order N must be at least 1");
  ResonanceSet res{N, tol, basis.lambda, {}, {}};
  const double cut = tol * *std::max_element(basis.lambda.begin(), basis.lambda.end());

  struct Entry {
    double value;
    MultiIndex k;
  };
  std::vector<Entry> entries;
  for_each_index(basis.size(), N, [&](const MultiIndex& k) {
    const double v = dot(k, basis.lambda);
    if (std::abs(v) <= cut) res.module_members.push_back(k);
    entries.push_back({v, k});
  });

  // Classes are runs of equal k.lambda; pick representatives on the positive
  // side and mirror them so the set is closed under negation.
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });
  res.representatives.push_back(MultiIndex(basis.size(), 0));
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].value - entries[j - 1].value <= cut) ++j;
    if (entries[i].value > cut) {
      MultiIndex best = entries[i].k;
      for (std::size_t m = i + 1; m < j; ++m)
        if (better_representative(entries[m].k, best)) best = entries[m].k;
      res.representatives.push_back(negate(best));
      res.representatives.push_back(std::move(best));
    }
    i = j;
  }
  std::sort(res.representatives.begin(), res.representatives.end());
  return res;
}

NonResonanceReport check_nonresonance(const FrequencyBasis& basis, double h, int N, double c,
                                      const ResonanceSet& res) {
  basis.validate();
  if (!(h > 0.0)) throw ConfigError("step size must be positive");
  if (!(c > 0.0)) throw ConfigError("non-resonance constant must be positive");
  NonResonanceReport report{h, basis.eps, c, N, c * std::sqrt(h), {}, true};
  for_each_index(basis.size(), N, [&](const MultiIndex& k) {
    if (res.in_module(k)) return;
    NonResonanceRow row;
    row.k = k;
    row.k_dot_lambda = dot(k, basis.lambda);
    row.sine = std::abs(std::sin(h / (2.0 * basis.eps) * row.k_dot_lambda));
    row.pass = row.sine >= report.threshold;
    report.overall = report.overall && row.pass;
    report.rows.push_back(std::move(row));
  });
  return report;
}

AssumptionReport check_assumptions(const ConservativeSystem& sys, std::span<const double> y0, double h,
                                   double energy_bound, double c0, double c, int N) {
  AssumptionReport report;
  const std::size_t d = sys.dim();
  double quad = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) quad += y0[i] * sys.M()(i, j) * y0[j];
  report.energy_expression = quad * quad / (2.0 * sys.eps()) + sys.potential(y0);
  report.energy_bound = energy_bound;
  report.energy_ok = report.energy_expression <= energy_bound;
  report.h_over_eps = h / sys.eps();
  report.c0 = c0;
  report.step_ok = report.h_over_eps >= c0;

  const OscillatorySystem osc = derive_oscillatory(sys);
  const FrequencyBasis basis = frequency_basis(osc);
  if (!basis.lambda.empty() && h > 0.0) {
    const ResonanceSet res = enumerate_resonance(basis, N);
    report.nonresonance = check_nonresonance(basis, h, N, c, res);
  } else {
    report.nonresonance.h = h;
    report.nonresonance.eps = sys.eps();
    report.nonresonance.c = c;
    report.nonresonance.N = N;
  }
  return report;
}

std::vector<MultiIndex> multi_indices(std::size_t l, int N) {
  if (N < 0) throw ConfigError("multi-index order must be non-negative");
  std::vector<MultiIndex> out;
  for_each_index(l, N, [&](const MultiIndex& k) { out.push_back(k); });
  return out;
}

std::vector<double> amplitude_by_order(const ModalAmplitudes& fit) {
  std::vector<double> levels;
  for (std::size_t m = 0; m < fit.kset.size(); ++m) {
    const auto n = static_cast<std::size_t>(l1_norm(fit.kset[m]));
    if (levels.size() <= n) levels.resize(n + 1, 0.0);
    for (std::size_t j = 0; j < fit.amplitudes.cols(); ++j) levels[n] = std::max(levels[n], std::abs(fit.amplitudes(m, j)));
  }
  return levels;
}

bool amplitude_hierarchy(const std::vector<double>& levels, double rel_floor) {
  if (levels.size() < 2) return true;
  const double floor = rel_floor * levels[1];
  for (std::size_t n = 1; n + 1 < levels.size(); ++n)
    if (levels[n + 1] > levels[n] + floor) return false;
  return true;
}

DenseMatrix least_squares(DenseMatrix a, DenseMatrix b) {
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  if (b.rows() != n) throw std::invalid_argument("least_squares: row mismatch");
  if (m > n) throw std::invalid_argument("least_squares: underdetermined system");
  std::vector<Complex> v(n);
  for (std::size_t k = 0; k < m; ++k) {
    double norm = 0.0;
    for (std::size_t i = k; i < n; ++i) norm += std::norm(a(i, k));
    norm = std::sqrt(norm);
    if (norm == 0.0) throw IllConditionedBasis("least_squares: rank-deficient design matrix");
    const Complex x0 = a(k, k);
    const Complex phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : Complex(1.0);
    const Complex alpha = -phase * norm;
    double vnorm = 0.0;
    for (std::size_t i = k; i < n; ++i) {
      v[i] = a(i, k) - (i == k ? alpha : Complex(0.0));
      vnorm += std::norm(v[i]);
    }
    vnorm = std::sqrt(vnorm);
    for (std::size_t i = k; i < n; ++i) v[i] /= vnorm;
    auto reflect = [&](DenseMatrix& mat, std::size_t col_begin) {
      for (std::size_t j = col_begin; j < mat.cols(); ++j) {
        Complex s = 0.0;
        for (std::size_t i = k; i < n; ++i) s += std::conj(v[i]) * mat(i, j);
        for (std::size_t i = k; i < n; ++i) mat(i, j) -= 2.0 * v[i] * s;
      }
    };
    reflect(a, k);
    reflect(b, 0);
  }
  DenseMatrix x(m, b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t k = m; k-- > 0;) {
      Complex s = b(k, j);
      for (std::size_t i = k + 1; i < m; ++i) s -= a(k, i) * x(i, j);
      x(k, j) = s / a(k, k);
    }
  return x;
}

ModalAmplitudes fit_modal_amplitudes(const SampledTrajectory& traj, const FrequencyBasis& basis,
                                     const std::vector<MultiIndex>& kset, std::size_t first, std::size_t count) {
  basis.validate();
  if (kset.empty()) throw ConfigError("modal fit needs at least one multi-index");
  if (traj.t.size() != traj.y.size()) throw ConfigError("trajectory times and states differ in length");
  if (first + count > traj.t.size() || count < 2) throw ConfigError("modal fit window is out of range");
  for (const auto& k : kset)
    if (k.size() != basis.size()) throw ConfigError("multi-index length does not match the frequency basis");
  if (count < 4 * kset.size())
    throw AliasedSampling("window of " + std::to_string(count) + " samples is shorter than 4 |kset|");

  const std::vector<double> w = basis.omega_tilde();
  ModalAmplitudes out;
  out.t_start = traj.t[first];
  out.t_end = traj.t[first + count - 1];
  out.kset = kset;
  double max_freq = 0.0;
  for (const auto& k : kset) {
    out.frequencies.push_back(dot(k, w));
    max_freq = std::max(max_freq, std::abs(out.frequencies.back()));
  }
  double spacing = 0.0;
  for (std::size_t n = first + 1; n < first + count; ++n) spacing = std::max(spacing, traj.t[n] - traj.t[n - 1]);
  if (spacing * max_freq > 1.0)
    throw AliasedSampling("sample spacing " + std::to_string(spacing) + " aliases frequency " +
                          std::to_string(max_freq));

  const std::size_t d = traj.y[first].size();
  DenseMatrix design(count, kset.size());
  DenseMatrix rhs(count, d);
  for (std::size_t n = 0; n < count; ++n) {
    const double t = traj.t[first + n];
    for (std::size_t m = 0; m < kset.size(); ++m) design(n, m) = std::polar(1.0, out.frequencies[m] * t);
    for (std::size_t j = 0; j < d; ++j) rhs(n, j) = traj.y[first + n][j];
  }

  const HermitianEigen gram = eig_hermitian(design.adjoint() * design);
  const double smin = std::max(gram.values.front(), 0.0);
  const double smax = gram.values.back();
  out.condition = smin > 0.0 ? std::sqrt(smax / smin) : INFINITY;
  if (!(out.condition <= 1e10)) throw IllConditionedBasis("modal design matrix is ill-conditioned");

  out.amplitudes = least_squares(design, rhs);
  const DenseMatrix fitted = design * out.amplitudes;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t n = 0; n < count; ++n)
    for (std::size_t j = 0; j < d; ++j) {
      num += std::norm(fitted(n, j) - rhs(n, j));
      den += std::norm(rhs(n, j));
    }
  out.residual = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return out;
}

}  // namespace expint
