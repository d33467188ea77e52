#include "exs/elliptic.hpp"

#include <cmath>
#include <doctest.h>
#include <vector>

#include "exs/errors.hpp"
#include "support/quadrature.hpp"

using exs::elliptic::ellint_e;
using exs::elliptic::ellint_f;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

double oracle_f(double phi, double k2) {
  return testsupport::integrate(
      [k2](double t) { return 1.0 / std::sqrt(1.0 - k2 * std::sin(t) * std::sin(t)); }, 0.0, phi);
}

double oracle_e(double phi, double k2) {
  return testsupport::integrate(
      [k2](double t) { return std::sqrt(1.0 - k2 * std::sin(t) * std::sin(t)); }, 0.0, phi);
}

double rel_err(double got, double want) {
  return std::fabs(got - want) / std::max(std::fabs(want), 1e-300);
}

}  // namespace

TEST_CASE("first kind: fixed values") {
  CHECK(ellint_f(0.0, 0.5) == 0.0);
  CHECK(ellint_f(1.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  // quadrature oracle value for the complete integral at k2 = 1/2
  CHECK(rel_err(ellint_f(kPi / 2.0, 0.5), 1.8540746773013719) < 1e-13);
  // reflection F(pi - phi) = 2K - F(phi), frozen oracle value
  CHECK(rel_err(ellint_f(kPi / 2.0 + 0.3, 0.5), 2.2723231294716419) < 1e-13);
  const double reflected =
      2.0 * ellint_f(kPi / 2.0, 0.5) - ellint_f(kPi / 2.0 - 0.3, 0.5);
  CHECK(rel_err(ellint_f(kPi / 2.0 + 0.3, 0.5), reflected) < 1e-14);
}

TEST_CASE("second kind: fixed values") {
  CHECK(ellint_e(0.0, 0.7) == 0.0);
  CHECK(ellint_e(kPi / 2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  // k2 = 8/9, the Gauss-map modulus of the (0.8, 2.4) unduloid
  CHECK(rel_err(ellint_e(0.9, 8.0 / 9.0), 0.79804435759809711) < 1e-13);
}

TEST_CASE("quasi-periodicity extends both integrals") {
  const double k2 = 0.37;
  const double kc = ellint_f(kPi / 2.0, k2);
  const double ec = ellint_e(kPi / 2.0, k2);
  for (double phi : {0.1, 0.9, 1.4, -0.6}) {
    CHECK(ellint_f(phi + kPi, k2) == doctest::Approx(ellint_f(phi, k2) + 2.0 * kc).epsilon(1e-14));
    CHECK(ellint_e(phi + kPi, k2) == doctest::Approx(ellint_e(phi, k2) + 2.0 * ec).epsilon(1e-14));
  }
  // large amplitudes stay on the oracle
  for (double phi : {7.3, 18.9, -25.0}) {
    CHECK(rel_err(ellint_f(phi, k2), oracle_f(phi, k2)) < 1e-12);
    CHECK(rel_err(ellint_e(phi, k2), oracle_e(phi, k2)) < 1e-12);
  }
}

TEST_CASE("oddness is bitwise") {
  for (double phi : {0.2, 1.1, 2.7, 5.9, 11.0})
    for (double k2 : {0.0, 0.5, 0.99}) {
      CHECK(ellint_f(-phi, k2) == -ellint_f(phi, k2));
      CHECK(ellint_e(-phi, k2) == -ellint_e(phi, k2));
    }
}

TEST_CASE("monotone in the amplitude, and E <= phi <= F") {
  for (double k2 : {0.1, 0.5, 0.9}) {
    double pf = -1e300, pe = -1e300;
    for (int i = 0; i <= 40; ++i) {
      const double phi = -2.0 + 4.0 * i / 40.0;
      const double f = ellint_f(phi, k2), e = ellint_e(phi, k2);
      CHECK(f > pf);
      CHECK(e > pe);
      pf = f;
      pe = e;
    }
  }
  for (int i = 0; i <= 20; ++i) {
    const double phi = kPi / 2.0 * i / 20.0;
    for (double k2 : {0.0, 0.3, 0.8, 0.999}) {
      CHECK(ellint_e(phi, k2) <= phi + 1e-15);
      CHECK(ellint_f(phi, k2) >= phi - 1e-15);
    }
  }
}

TEST_CASE("oracle agreement on a 100-point grid") {
  const std::vector<double> k2s = {0.0, 0.1, 0.25, 0.4, 0.55, 0.7, 0.8, 8.0 / 9.0, 0.95, 0.99};
  double worst_f = 0.0, worst_e = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double phi = -3.3 + 6.6 * i / 9.0;
    for (double k2 : k2s) {
      worst_f = std::max(worst_f, rel_err(ellint_f(phi, k2), oracle_f(phi, k2)));
      worst_e = std::max(worst_e, rel_err(ellint_e(phi, k2), oracle_e(phi, k2)));
    }
  }
  CHECK(worst_f < 1e-12);
  CHECK(worst_e < 1e-12);
}

TEST_CASE("domain and divergence errors") {
  CHECK_THROWS_AS(ellint_f(0.5, -0.1), exs::Error);
  CHECK_THROWS_AS(ellint_f(0.5, 1.1), exs::Error);
  CHECK_THROWS_AS(ellint_e(0.5, 2.0), exs::Error);
  CHECK_THROWS_AS(ellint_f(std::numeric_limits<double>::infinity(), 0.5), exs::Error);

  // k2 = 1: F diverges once |phi| >= pi/2, E stays finite
  CHECK_THROWS_AS(ellint_f(kPi / 2.0, 1.0), exs::Error);
  CHECK_THROWS_AS(ellint_f(2.0, 1.0), exs::Error);
  try {
    ellint_f(2.0, 1.0);
  } catch (const exs::Error& e) {
    CHECK(e.code() == exs::errc::divergence);
  }
  CHECK(ellint_f(1.0, 1.0) == doctest::Approx(std::atanh(std::sin(1.0))).epsilon(1e-14));
  CHECK(ellint_e(4.0, 1.0) == doctest::Approx(oracle_e(4.0, 1.0)).epsilon(1e-13));
}
