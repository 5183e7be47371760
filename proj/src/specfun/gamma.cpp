#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "mtrace/errors.hpp"
#include "mtrace/specfun.hpp"

namespace mtrace::specfun {

namespace {

// Lanczos coefficients, g = 7, n = 9 (Godfrey).  Relative accuracy about 1e-15
// for Re z >= 1/2.
constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

std::complex<double> lanczos_log_gamma(std::complex<double> z) {
  // Gamma(z) with z -> z - 1 shift built into the series.
  z -= 1.0;
  std::complex<double> x = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) x += kLanczos[i] / (z + static_cast<double>(i));
  const std::complex<double> t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

}  // namespace

std::complex<double> log_gamma(std::complex<double> z) {
  using std::numbers::pi;
  if (z.real() < 0.5) {
    // Reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z).
    return std::log(pi) - std::log(std::sin(pi * z)) - lanczos_log_gamma(1.0 - z);
  }
  return lanczos_log_gamma(z);
}

double log_gamma(double x) {
  if (!(x > 0.0)) throw NonPositiveArgument("log_gamma requires x > 0, got " + std::to_string(x));
  if (x == 1.0 || x == 2.0) return 0.0;
  if (x < 0.5) return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  return lanczos_log_gamma({x, 0.0}).real();
}

double lambert_w(double x) {
  if (!(x > 0.0)) throw NonPositiveArgument("lambert_w supports the principal branch on x > 0 only");
  if (!std::isfinite(x)) return x;
  // Starting guess: log(1+x) below e, asymptotic log x - log log x above.
  double w = x < std::numbers::e ? std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)))
                                 : std::log(x) - std::log(std::log(x));
  for (int it = 0; it < 50; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    // Halley step.
    const double dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= dw;
    if (std::abs(dw) <= 4e-16 * (1.0 + std::abs(w))) break;
  }
  return w;
}

}  // namespace mtrace::specfun
