#pragma once

#include <functional>

namespace mtrace::quad {

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  int max_intervals = 4000;
  /// When false a failure to reach tolerance is reported through Result::converged.
  bool throw_on_failure = true;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

using Integrand = std::function<double(double)>;

/// Globally adaptive 15-point Gauss-Kronrod quadrature on [a, b].
Result integrate(const Integrand& f, double a, double b, const Options& opts = {});

/// Integral over [a, inf) using the map x = a + s/(1-s).  Integrands must decay
/// at least like 1/x^2; the integrand is never evaluated at s = 1.
Result integrate_to_infinity(const Integrand& f, double a, const Options& opts = {});

/// Integral over (-inf, b].
Result integrate_from_minus_infinity(const Integrand& f, double b, const Options& opts = {});

/// Integral over [a, b] split at the given interior breakpoints (sorted, inside (a, b)).
Result integrate_split(const Integrand& f, double a, double b, std::initializer_list<double> breaks,
                       const Options& opts = {});

}  // namespace mtrace::quad
