#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "expint/errors.hpp"
#include "expint/spectral.hpp"
#include "support.hpp"

using namespace expint;
using expint::test::max_diff;
using expint::test::random_skew_hermitian;
using expint::test::uniform;
using expint::test::unitarity_defect;

namespace {

DenseMatrix rotation_generator(double w) { return {{0.0, -w}, {w, 0.0}}; }

}  // namespace

TEST_CASE("rotation generator has eigenvalues -w, w and eigenvectors (1, -+i)/sqrt2") {
  const double w = 3.0;
  const auto dec = eig_skew_hermitian(rotation_generator(w));
  REQUIRE(dec.lambda.size() == 2);
  CHECK(dec.lambda[0] == doctest::Approx(-w).epsilon(1e-14));
  CHECK(dec.lambda[1] == doctest::Approx(w).epsilon(1e-14));
  CHECK(dec.paired);
  // Omega v = i lambda v for each column; the pair (1, -i) belongs to +w.
  for (std::size_t k = 0; k < 2; ++k) {
    const Complex v0 = dec.P(0, k), v1 = dec.P(1, k);
    CHECK(std::abs(std::abs(v0) - 1.0 / std::numbers::sqrt2) < 1e-14);
    const Complex ratio = v1 / v0;
    CHECK(std::abs(ratio - Complex(0.0, dec.lambda[k] > 0 ? -1.0 : 1.0)) < 1e-14);
  }
}

TEST_CASE("zero generator gives zero spectrum and unitary P") {
  const DenseMatrix zero(4, 4);
  const auto dec = eig_skew_hermitian(zero);
  for (double l : dec.lambda) CHECK(l == 0.0);
  CHECK(unitarity_defect(dec.P) < 1e-14);
  CHECK(max_diff(reconstruct(dec), zero) == 0.0);
}

TEST_CASE("random 6x6 real skew-symmetric reconstruction") {
  for (int trial = 0; trial < 10; ++trial) {
    const DenseMatrix omega = random_skew_hermitian(6, true);
    const auto dec = eig_skew_hermitian(omega);
    CHECK(max_diff(reconstruct(dec), omega) < 1e-12);
    CHECK(dec.paired);
  }
}

TEST_CASE("property: reconstruction and unitarity on random skew-Hermitian matrices") {
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 16);
    const DenseMatrix omega = random_skew_hermitian(d, trial % 2 == 0, std::pow(10.0, uniform(-2, 4)));
    const auto dec = eig_skew_hermitian(omega);
    CHECK(max_diff(reconstruct(dec), omega) <= 1e-12 * std::max(1.0, omega.norm_inf()));
    CHECK(unitarity_defect(dec.P) < 1e-12);
    CHECK(std::is_sorted(dec.lambda.begin(), dec.lambda.end()));
  }
}

TEST_CASE("real skew-symmetric spectra come in +- pairs") {
  for (int trial = 0; trial < 20; ++trial) {
    const auto dec = eig_skew_hermitian(random_skew_hermitian(2 + trial % 7, true));
    CHECK(dec.paired);
    const std::size_t n = dec.lambda.size();
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(dec.lambda[i] + dec.lambda[n - 1 - i]) < 1e-12 * 4 * n);
  }
}

TEST_CASE("eig_skew_hermitian rejects non-skew input") {
  const DenseMatrix sym{{1.0, 2.0}, {2.0, 1.0}};
  CHECK_THROWS_AS(eig_skew_hermitian(sym), NotSkewHermitian);
  DenseMatrix almost = rotation_generator(1.0);
  almost(0, 1) += 1e-6;
  CHECK_THROWS_AS(eig_skew_hermitian(almost), NotSkewHermitian);
}

TEST_CASE("matfun identity and rotation") {
  const double w = 2.5, h = 0.3;
  const DenseMatrix omega = rotation_generator(w);
  const auto dec = eig_skew_hermitian(omega);
  CHECK(max_diff(matfun([](Complex z) { return z; }, dec), omega) < 1e-12);
  const DenseMatrix e = expm(dec, h);
  const DenseMatrix rot{{std::cos(h * w), -std::sin(h * w)}, {std::sin(h * w), std::cos(h * w)}};
  CHECK(max_diff(e, rot) < 1e-14);
}

TEST_CASE("property: exp of skew-Hermitian is unitary for |t| |Omega| up to 1e6") {
  for (int trial = 0; trial < 30; ++trial) {
    const DenseMatrix omega = random_skew_hermitian(1 + trial % 8, trial % 3 == 0);
    const auto dec = eig_skew_hermitian(omega);
    double top = 0.0;
    for (double l : dec.lambda) top = std::max(top, std::abs(l));
    const double t = (trial % 2 ? -1.0 : 1.0) * std::pow(10.0, uniform(-3, 6)) / std::max(top, 1e-300);
    CHECK(unitarity_defect(expm(dec, t)) <= 1e-10);
  }
}

TEST_CASE("property: spectral mapping matfun(f) matfun(g) = matfun(fg)") {
  const auto f = [](Complex z) { return std::exp(0.5 * z); };
  const auto g = [](Complex z) { return phi1_scalar(z); };
  const auto fg = [&](Complex z) { return f(z) * g(z); };
  for (int trial = 0; trial < 20; ++trial) {
    const auto dec = eig_skew_hermitian(random_skew_hermitian(6, trial % 2 == 0));
    const double t = uniform(-5, 5);
    CHECK(max_diff(matfun(f, dec, t) * matfun(g, dec, t), matfun(fg, dec, t)) < 1e-11);
  }
}

TEST_CASE("matfun raises on non-finite values") {
  const auto dec = eig_skew_hermitian(rotation_generator(1.0));
  const auto zero = eig_skew_hermitian(DenseMatrix(2, 2));
  CHECK_THROWS_AS(matfun([](Complex z) { return 1.0 / z; }, zero), SingularFunctionValue);
  CHECK_THROWS_AS(matfun([](Complex) { return Complex(NAN, 0.0); }, dec), SingularFunctionValue);
}

TEST_CASE("phi1 values") {
  const auto dec = eig_skew_hermitian(rotation_generator(4.0));
  CHECK(max_diff(phi1(dec, 0.0), DenseMatrix::identity(2)) < 1e-15);
  const Complex at_ipi = phi1_scalar(Complex(0.0, std::numbers::pi));
  CHECK(std::abs(at_ipi - Complex(0.0, 2.0 / std::numbers::pi)) < 1e-15);
  CHECK(phi1_scalar(0.0) == Complex(1.0));
}

TEST_CASE("phi1 series and closed-form branches agree near the switch") {
  for (double r : {1e-8, 5e-7, 9.99e-7, 1e-6, 1.01e-6, 1e-5}) {
    for (Complex dir : {Complex(1, 0), Complex(0, 1), Complex(-1, 0), Complex(0.6, -0.8)}) {
      const Complex z = r * dir;
      const Complex series = 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
      const Complex closed = expm1_complex(z) / z;
      CHECK(std::abs(series - closed) < 1e-12);
      CHECK(std::abs(phi1_scalar(z) - series) < 1e-12);
    }
  }
}

TEST_CASE("property: z phi1(z) = e^z - 1 on the spectrum, |z| <= 1e4") {
  for (int trial = 0; trial < 100; ++trial) {
    const double mag = std::pow(10.0, uniform(-10, 4));
    Complex z;
    if (trial % 4 == 0) z = std::polar(std::min(mag, 50.0), uniform(-std::numbers::pi, std::numbers::pi));
    else z = Complex(0.0, (trial % 2 ? -1.0 : 1.0) * mag);
    const Complex em1 = std::abs(z) < 1e-3 ? expm1_complex(z) : std::exp(z) - 1.0;
    const double scale = std::max(1.0, std::abs(std::exp(z)));
    CHECK(std::abs(z * phi1_scalar(z) - em1) <= 1e-12 * scale);
  }
  for (int trial = 0; trial < 10; ++trial) {
    const DenseMatrix omega = random_skew_hermitian(6, trial % 2 == 0);
    const auto dec = eig_skew_hermitian(omega);
    double top = 0.0;
    for (double l : dec.lambda) top = std::max(top, std::abs(l));
    const double t = std::pow(10.0, uniform(-8, 4)) / top;
    DenseMatrix lhs = Complex(t) * omega * phi1(dec, t);
    DenseMatrix rhs = expm(dec, t) - DenseMatrix::identity(6);
    CHECK(max_diff(lhs, rhs) <= 1e-12 * std::max(1.0, t * top));
  }
}

TEST_CASE("eig_hermitian sorts eigenvalues and diagonalises") {
  const DenseMatrix a{{2.0, Complex(0.0, 1.0)}, {Complex(0.0, -1.0), 2.0}};
  const auto e = eig_hermitian(a);
  CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.values[1] == doctest::Approx(3.0).epsilon(1e-14));
}
