#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mtrace/ode.hpp"
#include "mtrace/potential.hpp"

namespace mtrace {

/// Leading part of log a(lambda) at lambda = shift - nu^2.
///   exp:      nu log 2nu - nu - (1/2) log nu + (1/2) log(pi/2) - log K_0(1)
///   cosh:     2 nu (K(k) - E(k)) + log pi - log t12(0),  k^2 = 1 - 4/nu^2, nu > 2
///   harmonic: Stirling form of log(2^{nu^2/2} sqrt(pi) / Gamma((1+nu^2)/2))
///             without the 1/(12 z) series.
/// `log_t12_zero` overrides the cosh reference value (computed by shooting if NaN).
double leading_term(const PotentialModel& model, double nu, const OdeOptions& opts = {},
                    double log_t12_zero = std::numeric_limits<double>::quiet_NaN());

/// log|t12(0)| of the cosh model.
double cosh_log_t12_zero(const OdeOptions& opts = {});

/// a_0(lambda) of the exp model: exact LG amplitude part of log a.
double exp_a0(double nu);

/// log a(shift - nu^2): Bessel ratio (exp), Gamma formula (harmonic), shooting (cosh).
double log_a_exact(const PotentialModel& model, double nu, const OdeOptions& opts = {});

struct ValueWithError {
  double value = 0.0;
  double error = 0.0;
};

/// int sigma dx over the domain, from chi along the decaying solution plus
/// the LG tail beyond the seed point(s).
ValueWithError sigma_integral_exact(const PotentialModel& model, double lambda, const OdeOptions& opts = {});

using Coefficient = ValueWithError;

/// exp: -int_{-log nu}^inf c_n(t) dt for n = 1..N (the sigma part of c_n at nu).
std::vector<Coefficient> exp_recursion_coeffs(int n_terms, double nu);

/// exp: alpha_n, coefficients of a_0 - (leading term) in powers of 1/nu.
std::vector<double> exp_alpha_coeffs(int n_terms);

/// cosh: -int tau_n(y; nu) (1 - k^2 sech^2 y)^{-1/2} dy with exact-weight
/// coefficients, n = 1..N.  sum_n value_n / nu^n approximates -int sigma dx.
std::vector<Coefficient> cosh_semi_numeric_coeffs(int n_terms, double nu);

/// cosh: nu-independent formal coefficients -sum_{n+2j=m} int_{|y|>delta}
/// tau_n(y) w_j(y) dy with the weight expanded in nu^-2.  The uncertainty
/// includes the window estimate nu^m (S_m(nu) - sum_{k<m} c_k nu^-k) - c_m, where
/// S_m is the exact-weight sum through order m at `nu`.
std::vector<Coefficient> cosh_formal_coeffs(int n_terms, double nu, double delta = 1e-3);

enum class CoeffRoute { recursion, fit };

struct SeriesFit {
  Coefficient constant;
  /// c_1..c_N.
  std::vector<Coefficient> coeffs;
  /// Amplitudes of nu^-n log nu, n = 1..N, when requested.
  std::vector<Coefficient> log_amplitudes;
  double gram_condition = 0.0;
};

struct FitOptions {
  bool log_basis = false;
  /// Extra powers nu^-(N+1)..nu^-(N+guard) that absorb truncation.
  int guard = 2;
};

/// Least squares of `values` against {1, nu^-1, ..., nu^-(N+guard)} (plus
/// nu^-n log nu).  Throws IllConditionedFit if the Gram matrix of the
/// normalized basis has condition number > 1e10.
SeriesFit fit_series(const std::vector<double>& nu_grid, const std::vector<double>& values, int n_terms,
                     const FitOptions& opts = {});

/// Coefficients c_1..c_N.  Recursion route: exp gives the sigma contributions
/// at nu_grid.back(), cosh the formal coefficients (N <= 6).  Fit route:
/// fit_series on log_a_exact - leading_term over nu_grid (N <= 4).
std::vector<Coefficient> series_coeffs(const PotentialModel& model, int n_terms, CoeffRoute route,
                                       const std::vector<double>& nu_grid, const OdeOptions& opts = {});

struct ExpansionReport {
  std::string model;
  int order = 0;
  std::vector<double> nu_grid;
  std::vector<double> log_a_exact;
  std::vector<double> leading;
  Coefficient constant;
  std::vector<Coefficient> coeffs;
  /// partial_sums[M][i] = leading + sum_{n<=M} c_n nu^-n; residuals[M][i] = |log a - partial_sums[M][i]|.
  std::vector<std::vector<double>> partial_sums;
  std::vector<std::vector<double>> residuals;
  /// Log-log slopes of residuals[M], M = 0..N.
  std::vector<double> residual_orders;
  /// residual_orders[M] <= -(M + 0.5).
  std::vector<bool> certified;
  std::optional<std::vector<Coefficient>> log_term_amplitudes;
  double gram_condition = 0.0;

  bool all_certified() const;
  std::string to_csv() const;
  std::string to_json() const;
};

struct ReportOptions {
  OdeOptions ode;
  bool log_basis = false;
  unsigned threads = 0;
};

/// nu_grid ascending, at least 6 points spanning an octave, N <= 4.
ExpansionReport report(const PotentialModel& model, const std::vector<double>& nu_grid, int n_terms,
                       const ReportOptions& opts = {});

/// Least-squares slope of log|r| against log nu.
double loglog_slope(const std::vector<double>& nu, const std::vector<double>& r);

}  // namespace mtrace
