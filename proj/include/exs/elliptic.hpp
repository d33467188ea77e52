#pragma once

namespace exs::elliptic {

// Amplitude in radians (any finite real) and modulus squared k2 in [0, 1].
struct EllipticArgs {
  double phi = 0.0;
  double k2 = 0.0;
};

// Incomplete elliptic integral of the first kind,
//   F(phi, k) = int_0^phi dt / sqrt(1 - k^2 sin^2 t),
// extended to all amplitudes by F(phi + pi) = F(phi) + 2 F(pi/2).
// Throws errc::domain for k2 outside [0,1] or non-finite phi, and
// errc::divergence for k2 = 1 with |phi| >= pi/2.
double ellint_f(const EllipticArgs& args);

// Incomplete elliptic integral of the second kind,
//   E(phi, k) = int_0^phi sqrt(1 - k^2 sin^2 t) dt,
// with the analogous extension. Finite for every k2 in [0,1].
double ellint_e(const EllipticArgs& args);

inline double ellint_f(double phi, double k2) { return ellint_f(EllipticArgs{phi, k2}); }
inline double ellint_e(double phi, double k2) { return ellint_e(EllipticArgs{phi, k2}); }

}  // namespace exs::elliptic
