// Incomplete elliptic integrals via Carlson symmetric forms. The duplication
// algorithm keeps full accuracy uniformly in the modulus, including near
// k2 -> 1 where direct quadrature of the integrand needs step-size tuning.

#include "exs/elliptic.hpp"

#include <cmath>
#include <string>

#include "exs/errors.hpp"

namespace exs::elliptic {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
// High/low split of pi for exact amplitude reduction phi = n*pi + r.
constexpr double kPiHi = 3.14159265358979311600e+00;
constexpr double kPiLo = 1.22464679914735320717e-16;
constexpr double kHalfPi = kPi / 2.0;

// Carlson R_F(x, y, z), at most one argument zero.
double carlson_rf(double x, double y, double z) {
  constexpr double errtol = 0.0025;  // truncation ~ errtol^6
  double xt = x, yt = y, zt = z;
  double ave, dx, dy, dz;
  do {
    const double sx = std::sqrt(xt), sy = std::sqrt(yt), sz = std::sqrt(zt);
    const double lam = sx * (sy + sz) + sy * sz;
    xt = 0.25 * (xt + lam);
    yt = 0.25 * (yt + lam);
    zt = 0.25 * (zt + lam);
    ave = (xt + yt + zt) / 3.0;
    dx = (ave - xt) / ave;
    dy = (ave - yt) / ave;
    dz = (ave - zt) / ave;
  } while (std::max({std::fabs(dx), std::fabs(dy), std::fabs(dz)}) > errtol);
  const double e2 = dx * dy - dz * dz;
  const double e3 = dx * dy * dz;
  return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0) / std::sqrt(ave);
}

// Carlson R_D(x, y, z), z > 0, at most one of x, y zero.
double carlson_rd(double x, double y, double z) {
  constexpr double errtol = 0.0015;
  double xt = x, yt = y, zt = z;
  double sum = 0.0, fac = 1.0;
  double ave, dx, dy, dz;
  do {
    const double sx = std::sqrt(xt), sy = std::sqrt(yt), sz = std::sqrt(zt);
    const double lam = sx * (sy + sz) + sy * sz;
    sum += fac / (sz * (zt + lam));
    fac *= 0.25;
    xt = 0.25 * (xt + lam);
    yt = 0.25 * (yt + lam);
    zt = 0.25 * (zt + lam);
    ave = 0.2 * (xt + yt + 3.0 * zt);
    dx = (ave - xt) / ave;
    dy = (ave - yt) / ave;
    dz = (ave - zt) / ave;
  } while (std::max({std::fabs(dx), std::fabs(dy), std::fabs(dz)}) > errtol);
  const double ea = dx * dy;
  const double eb = dz * dz;
  const double ec = ea - eb;
  const double ed = ea - 6.0 * eb;
  const double ee = ed + ec + ec;
  return 3.0 * sum +
         fac *
             (1.0 + ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 4.5 / 26.0 * dz * ee) +
              dz * (1.0 / 6.0 * ee + dz * (-9.0 / 22.0 * ec + 3.0 / 26.0 * dz * ea))) /
             (ave * std::sqrt(ave));
}

void check_args(const EllipticArgs& a) {
  if (!std::isfinite(a.phi)) fail(errc::domain, "elliptic amplitude must be finite");
  if (!(a.k2 >= 0.0 && a.k2 <= 1.0))
    fail(errc::domain, "elliptic modulus squared must lie in [0, 1], got " + std::to_string(a.k2));
}

// phi >= 0 decomposed as phi = n*pi + r with r in (-pi/2, pi/2].
void reduce(double phi, long long& n, double& r) {
  n = static_cast<long long>(std::ceil((phi - kHalfPi) / kPi));
  const double dn = static_cast<double>(n);
  r = (phi - dn * kPiHi) - dn * kPiLo;
  if (r > kHalfPi) {  // rounding pushed r past the half-open boundary
    n += 1;
    const double d2 = static_cast<double>(n);
    r = (phi - d2 * kPiHi) - d2 * kPiLo;
  } else if (r <= -kHalfPi) {
    n -= 1;
    const double d2 = static_cast<double>(n);
    r = (phi - d2 * kPiHi) - d2 * kPiLo;
  }
}

double incomplete_f(double r, double k2) {
  const double s = std::sin(r);
  const double c = std::cos(r);
  return s * carlson_rf(c * c, 1.0 - k2 * s * s, 1.0);
}

double incomplete_e(double r, double k2) {
  const double s = std::sin(r);
  const double c = std::cos(r);
  const double y = 1.0 - k2 * s * s;
  return s * carlson_rf(c * c, y, 1.0) - (k2 / 3.0) * s * s * s * carlson_rd(c * c, y, 1.0);
}

}  // namespace

double ellint_f(const EllipticArgs& args) {
  check_args(args);
  if (args.phi < 0.0) return -ellint_f(EllipticArgs{-args.phi, args.k2});
  long long n;
  double r;
  reduce(args.phi, n, r);
  if (args.k2 == 1.0) {
    if (n != 0 || r == kHalfPi)
      fail(errc::divergence, "F(phi, k) diverges for k2 = 1 once |phi| >= pi/2");
    return std::atanh(std::sin(r));
  }
  double value = incomplete_f(r, args.k2);
  if (n != 0) {
    const double complete = carlson_rf(0.0, 1.0 - args.k2, 1.0);
    value += 2.0 * static_cast<double>(n) * complete;
  }
  return value;
}

double ellint_e(const EllipticArgs& args) {
  check_args(args);
  if (args.phi < 0.0) return -ellint_e(EllipticArgs{-args.phi, args.k2});
  long long n;
  double r;
  reduce(args.phi, n, r);
  if (args.k2 == 1.0) return 2.0 * static_cast<double>(n) + std::sin(r);
  double value = incomplete_e(r, args.k2);
  if (n != 0) {
    const double mc = 1.0 - args.k2;
    const double complete =
        carlson_rf(0.0, mc, 1.0) - (args.k2 / 3.0) * carlson_rd(0.0, mc, 1.0);
    value += 2.0 * static_cast<double>(n) * complete;
  }
  return value;
}

}  // namespace exs::elliptic
