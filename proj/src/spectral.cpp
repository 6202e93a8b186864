#include "expint/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "expint/errors.hpp"

namespace expint {

namespace {

double abs_value(double x) { return std::abs(x); }
double abs_value(const Complex& x) { return std::abs(x); }
bool finite_value(double x) { return std::isfinite(x); }
bool finite_value(const Complex& x) { return std::isfinite(x.real()) && std::isfinite(x.imag()); }
double conj_value(double x) { return x; }
Complex conj_value(const Complex& x) { return std::conj(x); }

}  // namespace

template <class T>
Matrix<T>::Matrix(std::initializer_list<std::initializer_list<T>> init)
    : rows_(init.size()), cols_(init.size() ? init.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : init) {
    if (r.size() != cols_) throw std::invalid_argument("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

template <class T>
Matrix<T> Matrix<T>::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
  return m;
}

template <class T>
Matrix<T> Matrix<T>::adjoint() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = conj_value((*this)(i, j));
  return out;
}

template <class T>
Matrix<T>& Matrix<T>::operator+=(const Matrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("matrix size mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

template <class T>
Matrix<T>& Matrix<T>::operator-=(const Matrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("matrix size mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

template <class T>
Matrix<T>& Matrix<T>::operator*=(T s) {
  for (auto& v : data_) v *= s;
  return *this;
}

template <class T>
double Matrix<T>::norm_inf() const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (const auto& v : row(i)) sum += abs_value(v);
    best = std::max(best, sum);
  }
  return best;
}

template <class T>
double Matrix<T>::max_abs() const {
  double best = 0.0;
  for (const auto& v : data_) best = std::max(best, abs_value(v));
  return best;
}

template <class T>
bool Matrix<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const T& v) { return finite_value(v); });
}

template <class T>
void Matrix<T>::multiply(std::span<const T> x, std::span<T> out) const {
  for (std::size_t i = 0; i < rows_; ++i) {
    const T* r = data_.data() + i * cols_;
    T acc{};
    for (std::size_t j = 0; j < cols_; ++j) acc += r[j] * x[j];
    out[i] = acc;
  }
}

template <class T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matrix product size mismatch");
  Matrix<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

template class Matrix<double>;
template class Matrix<Complex>;
template Matrix<double> operator*(const Matrix<double>&, const Matrix<double>&);
template Matrix<Complex> operator*(const Matrix<Complex>&, const Matrix<Complex>&);

DenseMatrix to_complex(const RealMatrix& m) {
  DenseMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
  return out;
}

RealMatrix real_part(const DenseMatrix& m, double tol) {
  const double bound = tol * std::max(1.0, m.max_abs());
  RealMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (std::abs(m(i, j).imag()) > bound)
        throw std::domain_error("matrix has a non-negligible imaginary part");
      out(i, j) = m(i, j).real();
    }
  return out;
}

HermitianEigen eig_hermitian(const DenseMatrix& input, int max_sweeps) {
  if (!input.square()) throw std::invalid_argument("eig_hermitian: matrix is not square");
  const std::size_t n = input.rows();
  DenseMatrix a = input;
  DenseMatrix v = DenseMatrix::identity(n);

  double frob2 = 0.0;
  for (const auto& x : a.data()) frob2 += std::norm(x);
  const double target = 1e-30 * frob2;

  auto off_diagonal = [&] {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    return off;
  };

  int sweep = 0;
  for (; sweep <= max_sweeps; ++sweep) {
    const double off = off_diagonal();
    if (off <= target || frob2 == 0.0) break;
    if (sweep == max_sweeps)
      throw NoConvergence("Jacobi eigensolver exceeded " + std::to_string(max_sweeps) + " sweeps");

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const Complex e = apq / mag;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // U = I except U_pp = U_qq = c, U_pq = s*e, U_qp = -s*conj(e).
        const Complex upq = s * e;
        const Complex uqp = -s * std::conj(e);
        for (std::size_t k = 0; k < n; ++k) {
          const Complex akp = a(k, p);
          const Complex akq = a(k, q);
          a(k, p) = akp * c + akq * uqp;
          a(k, q) = akp * upq + akq * c;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const Complex apk = a(p, k);
          const Complex aqk = a(q, k);
          a(p, k) = c * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {
          const Complex vkp = v(k, p);
          const Complex vkq = v(k, q);
          v(k, p) = vkp * c + vkq * uqp;
          v(k, q) = vkp * upq + vkq * c;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i).real() < a(j, j).real(); });

  HermitianEigen out{DenseMatrix(n, n), std::vector<double>(n)};
  for (std::size_t col = 0; col < n; ++col) {
    out.values[col] = a(order[col], order[col]).real();
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, col) = v(k, order[col]);
  }
  return out;
}

SpectralDecomposition eig_skew_hermitian(const DenseMatrix& omega, double zero_tol) {
  if (!omega.square()) throw NotSkewHermitian("generator is not square");
  const double scale = omega.norm_inf();
  const double skew_residual = (omega + omega.adjoint()).norm_inf();
  if (!(skew_residual <= zero_tol * std::max(1.0, scale)))
    throw NotSkewHermitian("generator fails the skew-Hermitian check (|A + A^H| = " +
                           std::to_string(skew_residual) + ")");

  // -i*Omega is Hermitian; symmetrise away the tolerated skew defect.
  const std::size_t n = omega.rows();
  DenseMatrix herm(n, n);
  const Complex minus_i(0.0, -1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      herm(i, j) = 0.5 * (minus_i * omega(i, j) + std::conj(minus_i * omega(j, i)));

  HermitianEigen eig = eig_hermitian(herm);

  SpectralDecomposition dec{std::move(eig.vectors), std::move(eig.values), true};
  const double zero_cut = zero_tol * scale;
  for (auto& l : dec.lambda)
    if (std::abs(l) <= zero_cut) l = 0.0;

  // Greedy +/- matching from both ends of the ascending spectrum.
  const double pair_tol = 1e-10 * scale;
  std::size_t lo = 0;
  std::size_t hi = n;
  while (lo < hi && dec.lambda[lo] < 0.0 && dec.lambda[hi - 1] > 0.0) {
    if (std::abs(dec.lambda[lo] + dec.lambda[hi - 1]) > pair_tol) {
      dec.paired = false;
      break;
    }
    ++lo;
    --hi;
  }
  for (std::size_t k = lo; k < hi && dec.paired; ++k)
    if (dec.lambda[k] != 0.0) dec.paired = false;
  return dec;
}

DenseMatrix matfun(const ScalarFunction& f, const SpectralDecomposition& dec, double t) {
  const std::size_t n = dec.dim();
  std::vector<Complex> fv(n);
  for (std::size_t j = 0; j < n; ++j) {
    fv[j] = f(Complex(0.0, t * dec.lambda[j]));
    if (!std::isfinite(fv[j].real()) || !std::isfinite(fv[j].imag()))
      throw SingularFunctionValue("matrix function is not finite at eigenvalue " +
                                  std::to_string(t * dec.lambda[j]) + "i");
  }
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      Complex acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += dec.P(i, j) * fv[j] * std::conj(dec.P(k, j));
      out(i, k) = acc;
    }
  return out;
}

Complex expm1_complex(Complex z) {
  const double x = z.real();
  const double y = z.imag();
  const double half_sin = std::sin(0.5 * y);
  const double re = std::expm1(x) * std::cos(y) - 2.0 * half_sin * half_sin;
  const double im = std::exp(x) * std::sin(y);
  return {re, im};
}

Complex phi1_scalar(Complex z) {
  if (std::abs(z) < 1e-6) return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
  return expm1_complex(z) / z;
}

DenseMatrix phi1(const SpectralDecomposition& dec, double h) { return matfun(phi1_scalar, dec, h); }

DenseMatrix expm(const SpectralDecomposition& dec, double t) {
  return matfun([](Complex z) { return std::exp(z); }, dec, t);
}

DenseMatrix reconstruct(const SpectralDecomposition& dec) {
  return matfun([](Complex z) { return z; }, dec, 1.0);
}

}  // namespace expint
