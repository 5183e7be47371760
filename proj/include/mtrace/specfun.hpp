#pragma once

#include <complex>

namespace mtrace::specfun {

enum class OrderKind { real, imaginary };

/// Order of a modified Bessel function: nu for K_nu, or k for K_{ik}.
struct BesselOrder {
  OrderKind kind = OrderKind::real;
  double value = 0.0;

  static BesselOrder real(double nu) { return {OrderKind::real, nu}; }
  static BesselOrder imaginary(double k) { return {OrderKind::imaginary, k}; }
};

/// A real number carried as (log|v|, sign) to survive exp(-exp(x)) underflow.
struct LogValue {
  double log_abs = 0.0;
  int sign = 1;  // -1, 0 or +1

  double value() const;
};

/// K_nu(y) for real nu, or K_{ik}(y) for purely imaginary order; real in both
/// cases.  Evaluated from the integral of exp(-y cosh t) cosh(nu t) (resp.
/// cos(k t)) by the trapezoidal rule, which converges exponentially for these
/// analytic, double-exponentially decaying integrands.  For imaginary order
/// the contour is lifted towards the saddle point so the result keeps full
/// relative accuracy when K_{ik}(y) ~ exp(-pi k / 2).
/// Throws NonPositiveArgument for y <= 0 and Overflow when the result does
/// not fit in a double (use bessel_k_log then).
double bessel_k(BesselOrder order, double y);
LogValue bessel_k_log(BesselOrder order, double y);

/// Real and imaginary parts of I_{-ik}(y).
struct ComplexParts {
  double re = 0.0;
  double im = 0.0;
};

/// I_{-ik}(y) for real k and y > 0.  Small arguments use the ascending series
/// with the Lanczos complex Gamma function; larger ones use Schlaefli's
/// integral.  Every call cross-checks Im I_{-ik}(y) = sinh(pi k)/pi K_{ik}(y)
/// against an independent evaluation and throws AccuracyLoss beyond 1e-10.
ComplexParts bessel_i_reim(double k, double y);

/// exp(-y) Re I_{-ik}(y) and exp(+y) Im I_{-ik}(y); usable for any y > 0.
ComplexParts bessel_i_reim_scaled(double k, double y);

/// Elliptic modulus carried together with its complement k' = sqrt(1-k^2), so
/// that k -> 1 does not lose the digits of k'.
struct Modulus {
  double k = 0.0;
  double kp = 1.0;

  /// Throws ModulusOutOfRange unless 0 <= k < 1.
  static Modulus from_k(double k);
  static Modulus from_complement(double kp);
};

/// (K, E) for the complete integrals or (F, E) for the incomplete ones.
struct EllipticPair {
  double first = 0.0;
  double second = 0.0;
};

/// Complete integrals by the arithmetic-geometric mean.  Modulus convention: k,
/// never the parameter m = k^2.
EllipticPair elliptic_complete(double k);
EllipticPair elliptic_complete(const Modulus& m);
/// K(k) - E(k) without cancellation.
double elliptic_k_minus_e(const Modulus& m);

/// F(phi, k) and E(phi, k) for |phi| < pi/2, via Carlson's symmetric forms.
EllipticPair elliptic_incomplete(double phi, double k);
/// F - E given sin(phi) and cos(phi)^2 directly; avoids both the cancellation
/// in F - E and the loss of cos(phi) near phi = pi/2.
double elliptic_f_minus_e(double sin_phi, double cos2_phi, const Modulus& m);

/// Carlson symmetric integrals.
double carlson_rf(double x, double y, double z);
double carlson_rd(double x, double y, double z);

/// Principal branch of the Lambert function for x > 0.
double lambert_w(double x);

/// log Gamma(x) for x > 0.
double log_gamma(double x);
/// Principal branch of log Gamma(z) (Lanczos approximation, reflection for Re z < 1/2).
std::complex<double> log_gamma(std::complex<double> z);

}  // namespace mtrace::specfun
