#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mtrace/errors.hpp"
#include "mtrace/specfun.hpp"

namespace mtrace::specfun {

Modulus Modulus::from_k(double k) {
  if (!(k >= 0.0 && k < 1.0)) throw ModulusOutOfRange("modulus k must lie in [0, 1), got " + std::to_string(k));
  return {k, std::sqrt((1.0 - k) * (1.0 + k))};
}

Modulus Modulus::from_complement(double kp) {
  if (!(kp > 0.0 && kp <= 1.0)) {
    throw ModulusOutOfRange("complementary modulus must lie in (0, 1], got " + std::to_string(kp));
  }
  return {std::sqrt((1.0 - kp) * (1.0 + kp)), kp};
}

namespace {

struct AgmResult {
  double k_integral;
  double k_minus_e;
};

// a0 = 1, b0 = k', c0 = k;  K = pi / (2 a_N),  K - E = K * sum 2^(n-1) c_n^2.
AgmResult agm(const Modulus& m) {
  double a = 1.0, b = m.kp, c = m.k;
  double sum = 0.5 * c * c;
  double pow2 = 0.5;
  for (int n = 0; n < 60; ++n) {
    const double an = 0.5 * (a + b);
    const double bn = std::sqrt(a * b);
    c = 0.5 * (a - b);
    a = an;
    b = bn;
    pow2 *= 2.0;
    sum += pow2 * c * c;
    if (std::abs(c) <= 1e-17 * a) break;
  }
  const double kk = std::numbers::pi / (2.0 * a);
  return {kk, kk * sum};
}

}  // namespace

EllipticPair elliptic_complete(const Modulus& m) {
  const AgmResult r = agm(m);
  return {r.k_integral, r.k_integral - r.k_minus_e};
}

EllipticPair elliptic_complete(double k) { return elliptic_complete(Modulus::from_k(k)); }

double elliptic_k_minus_e(const Modulus& m) { return agm(m).k_minus_e; }

// Carlson's duplication algorithm with the fifth-order Taylor tail
// (Carlson 1995).  The stopping thresholds give errors near 1e-16.
double carlson_rf(double x, double y, double z) {
  if (x < 0.0 || y < 0.0 || z < 0.0 || (x + y == 0.0) || (x + z == 0.0) || (y + z == 0.0)) {
    throw DomainError("carlson_rf: invalid arguments");
  }
  constexpr double kTol = 0.0008;
  double xt = x, yt = y, zt = z;
  double ave = 0.0, dx = 0.0, dy = 0.0, dz = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double sx = std::sqrt(xt), sy = std::sqrt(yt), sz = std::sqrt(zt);
    const double lambda = sx * (sy + sz) + sy * sz;
    xt = 0.25 * (xt + lambda);
    yt = 0.25 * (yt + lambda);
    zt = 0.25 * (zt + lambda);
    ave = (xt + yt + zt) / 3.0;
    dx = (ave - xt) / ave;
    dy = (ave - yt) / ave;
    dz = (ave - zt) / ave;
    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) < kTol) break;
  }
  const double e2 = dx * dy - dz * dz;
  const double e3 = dx * dy * dz;
  return (1.0 + (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) * e2 + e3 / 14.0 + e2 * e2 * e2 * (-5.0 / 208.0) +
          e3 * e3 * (3.0 / 104.0) + e2 * e2 * e3 * (1.0 / 16.0)) /
         std::sqrt(ave);
}

double carlson_rd(double x, double y, double z) {
  if (x < 0.0 || y < 0.0 || z <= 0.0 || (x + y == 0.0)) throw DomainError("carlson_rd: invalid arguments");
  constexpr double kTol = 0.0008;
  double xt = x, yt = y, zt = z;
  double sum = 0.0, fac = 1.0;
  double ave = 0.0, dx = 0.0, dy = 0.0, dz = 0.0;
  for (int it = 0; it < 100; ++it) {
    const double sx = std::sqrt(xt), sy = std::sqrt(yt), sz = std::sqrt(zt);
    const double lambda = sx * (sy + sz) + sy * sz;
    sum += fac / (sz * (zt + lambda));
    fac *= 0.25;
    xt = 0.25 * (xt + lambda);
    yt = 0.25 * (yt + lambda);
    zt = 0.25 * (zt + lambda);
    ave = 0.2 * (xt + yt + 3.0 * zt);
    dx = (ave - xt) / ave;
    dy = (ave - yt) / ave;
    dz = (ave - zt) / ave;
    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) < kTol) break;
  }
  // Elementary symmetric functions of (dx, dy, dz, dz, dz).
  const double ea = dx * dy;
  const double eb = dz * dz;
  const double ec = ea - eb;
  const double ed = ea - 6.0 * eb;
  const double ee = ed + ec + ec;
  const double s2 = ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed - 4.5 / 26.0 * dz * ee);
  const double s3 = dz * (ee / 6.0 + dz * (-9.0 / 22.0 * ec + dz * 3.0 / 26.0 * ea));
  return 3.0 * sum + fac * (1.0 + s2 + s3) / (ave * std::sqrt(ave));
}

EllipticPair elliptic_incomplete(double phi, double k) {
  if (!(std::abs(phi) < 0.5 * std::numbers::pi)) {
    throw PhiOutOfRange("amplitude must satisfy |phi| < pi/2, got " + std::to_string(phi));
  }
  const Modulus m = Modulus::from_k(k);
  const double s = std::sin(phi);
  const double c = std::cos(phi);
  if (s == 0.0) return {0.0, 0.0};
  const double c2 = c * c;
  const double delta2 = 1.0 - k * k * s * s;
  const double f = s * carlson_rf(c2, delta2, 1.0);
  const double fme = elliptic_f_minus_e(s, c2, m);
  return {f, f - fme};
}

double elliptic_f_minus_e(double sin_phi, double cos2_phi, const Modulus& m) {
  if (sin_phi == 0.0 || m.k == 0.0) return 0.0;
  const double s2 = sin_phi * sin_phi;
  // 1 - k^2 s^2 = cos^2 + k'^2 s^2, with no cancellation as k -> 1.
  const double delta2 = cos2_phi + m.kp * m.kp * s2;
  return m.k * m.k / 3.0 * sin_phi * s2 * carlson_rd(cos2_phi, delta2, 1.0);
}

}  // namespace mtrace::specfun
