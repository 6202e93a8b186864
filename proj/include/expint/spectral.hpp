#pragma once

// Dense matrices and spectral calculus for normal generators.
//
// A skew-Hermitian generator is diagonalised as Omega = P diag(i*Lambda) P^H
// with real Lambda sorted into paired blocks (-l_k, ..., -l_1, 0, ..., l_1,
// ..., l_k). Matrix functions are then evaluated on the spectrum.

#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace expint {

using Complex = std::complex<double>;

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> init);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> data() const noexcept { return data_; }

  Matrix adjoint() const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(T s);

  /// Maximum absolute row sum.
  double norm_inf() const;
  double max_abs() const;
  bool all_finite() const;

  /// out = this * x. `out` must not alias `x`.
  void multiply(std::span<const T> x, std::span<T> out) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using DenseMatrix = Matrix<Complex>;
using RealMatrix = Matrix<double>;

template <class T>
Matrix<T> operator*(const Matrix<T>& a, const Matrix<T>& b);
template <class T>
Matrix<T> operator+(Matrix<T> a, const Matrix<T>& b) { return a += b; }
template <class T>
Matrix<T> operator-(Matrix<T> a, const Matrix<T>& b) { return a -= b; }
template <class T>
Matrix<T> operator*(T s, Matrix<T> a) { return a *= s; }

DenseMatrix to_complex(const RealMatrix& m);

/// Real part of `m`. Throws std::domain_error if some imaginary part
/// exceeds `tol * max(1, |m|_max)`.
RealMatrix real_part(const DenseMatrix& m, double tol = 1e-12);

struct SpectralDecomposition {
  DenseMatrix P;               // unitary, columns are eigenvectors
  std::vector<double> lambda;  // Omega = P diag(i*lambda) P^H, ascending
  bool paired = true;          // every nonzero value has a partner of opposite sign

  std::size_t dim() const noexcept { return lambda.size(); }
};

/// Eigendecomposition of a skew-Hermitian matrix by cyclic Jacobi sweeps on
/// the Hermitian matrix -i*Omega. Eigenvalues with |l| <= zero_tol*|Omega|_inf
/// are set to zero.
SpectralDecomposition eig_skew_hermitian(const DenseMatrix& omega, double zero_tol = 1e-12);

struct HermitianEigen {
  DenseMatrix vectors;
  std::vector<double> values;  // ascending
};

/// Cyclic Jacobi for a Hermitian matrix. Throws NoConvergence after
/// `max_sweeps` sweeps.
HermitianEigen eig_hermitian(const DenseMatrix& a, int max_sweeps = 50);

using ScalarFunction = std::function<Complex(Complex)>;

/// P diag(f(i*t*lambda_j)) P^H, i.e. f(t*Omega).
DenseMatrix matfun(const ScalarFunction& f, const SpectralDecomposition& dec, double t = 1.0);

/// e^z - 1 without cancellation for small |z|.
Complex expm1_complex(Complex z);

/// (e^z - 1)/z, with a four-term series below |z| = 1e-6.
Complex phi1_scalar(Complex z);

/// phi1(h*Omega).
DenseMatrix phi1(const SpectralDecomposition& dec, double h);

/// exp(t*Omega).
DenseMatrix expm(const SpectralDecomposition& dec, double t);

/// Reconstruct P diag(i*lambda) P^H.
DenseMatrix reconstruct(const SpectralDecomposition& dec);

}  // namespace expint
