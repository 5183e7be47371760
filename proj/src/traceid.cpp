#include "mtrace/traceid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "json.hpp"
#include "mtrace/errors.hpp"
#include "mtrace/parallel.hpp"
#include "mtrace/quadrature.hpp"
#include "mtrace/riccati.hpp"
#include "mtrace/specfun.hpp"
#include "mtrace/spectrum.hpp"

namespace mtrace {

namespace {

constexpr double kPi = std::numbers::pi;
// Coefficient integrands decay like e^{-t} or sech y; beyond this they are below 1e-16 of their peak.
constexpr double kCutoff = 40.0;

double log_k0_at_one() {
  static const double v = std::log(specfun::bessel_k(specfun::BesselOrder::real(0.0), 1.0));
  return v;
}

quad::Options coeff_options() {
  quad::Options o;
  o.abs_tol = 1e-11;
  o.rel_tol = 1e-10;
  o.throw_on_failure = false;
  return o;
}

void require_nu(const PotentialModel& model, double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("nu must be positive");
  if (model.kind() == ModelKind::cosh_line && !(nu > 2.0)) throw DomainError("cosh model needs nu > 2");
}

double harmonic_z(double nu) { return 0.5 * (1.0 + nu * nu); }

// Integral of f(y) + f(-y) over [from, inf), split near the scale 1/nu.
quad::Result symmetric_integral(const quad::Integrand& f, double from, double nu) {
  auto g = [&](double y) { return f(y) + f(-y); };
  std::vector<double> cuts;
  for (double c : {2.0 / nu, 8.0 / nu, 1.0, 4.0})
    if (c > from * 1.001) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  quad::Result total;
  double a = from;
  for (double c : cuts) {
    const auto r = quad::integrate(g, a, c, coeff_options());
    total.value += r.value;
    total.error += r.error;
    a = c;
  }
  const auto r = quad::integrate(g, a, kCutoff, coeff_options());
  total.value += r.value;
  total.error += r.error;
  return total;
}

// sqrt(tanh^2 y + (4/nu^2) sech^2 y), the exact cosh weight.
double cosh_weight(double nu, double y) {
  const double t = std::tanh(y);
  const double s = 1.0 / std::cosh(y);
  return std::sqrt(t * t + 4.0 / (nu * nu) * s * s);
}

struct LinearFit {
  Eigen::VectorXd coef;
  Eigen::VectorXd stderr_;
  double cond = 0.0;
};

LinearFit least_squares(const Eigen::MatrixXd& basis, const Eigen::VectorXd& y) {
  const Eigen::Index m = basis.rows(), p = basis.cols();
  if (m < p) throw IllConditionedFit("fewer grid points than basis functions");
  Eigen::VectorXd scale = basis.colwise().norm().transpose();
  Eigen::MatrixXd b = basis;
  for (Eigen::Index j = 0; j < p; ++j) b.col(j) /= scale(j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  LinearFit out;
  out.cond = s(p - 1) > 0.0 ? std::pow(s(0) / s(p - 1), 2) : std::numeric_limits<double>::infinity();
  if (!(out.cond <= 1e10)) {
    std::ostringstream msg;
    msg << "Gram condition number " << out.cond << " exceeds 1e10";
    throw IllConditionedFit(msg.str());
  }
  const Eigen::VectorXd c = b.colPivHouseholderQr().solve(y);
  const double rss = (b * c - y).squaredNorm();
  const double s2 = m > p ? rss / static_cast<double>(m - p) : 0.0;
  const Eigen::MatrixXd cov = (b.transpose() * b).inverse() * s2;
  out.coef = c.cwiseQuotient(scale);
  out.stderr_ = cov.diagonal().cwiseSqrt().cwiseQuotient(scale);
  return out;
}

Eigen::MatrixXd power_basis(const std::vector<double>& nu, int powers, int log_terms) {
  const Eigen::Index m = static_cast<Eigen::Index>(nu.size());
  Eigen::MatrixXd b(m, 1 + powers + log_terms);
  for (Eigen::Index i = 0; i < m; ++i) {
    b(i, 0) = 1.0;
    for (int n = 1; n <= powers; ++n) b(i, n) = std::pow(nu[i], -n);
    for (int n = 1; n <= log_terms; ++n) b(i, powers + n) = std::pow(nu[i], -n) * std::log(nu[i]);
  }
  return b;
}

}  // namespace

double cosh_log_t12_zero(const OdeOptions& opts) {
  return shoot(PotentialModel(ModelKind::cosh_line), 0.0, opts).t12.log_abs;
}

double exp_a0(double nu) {
  const double r = std::sqrt(nu * nu + 1.0);
  return -r + nu * std::asinh(nu) - 0.25 * std::log1p(nu * nu) + 0.5 * std::log(kPi / 2.0) - log_k0_at_one();
}

double leading_term(const PotentialModel& model, double nu, const OdeOptions& opts, double log_t12_zero) {
  require_nu(model, nu);
  switch (model.kind()) {
    case ModelKind::exp_half_line:
      return nu * std::log(2.0 * nu) - nu - 0.5 * std::log(nu) + 0.5 * std::log(kPi / 2.0) - log_k0_at_one();
    case ModelKind::cosh_line: {
      if (std::isnan(log_t12_zero)) log_t12_zero = cosh_log_t12_zero(opts);
      const double kme = specfun::elliptic_k_minus_e(specfun::Modulus::from_complement(2.0 / nu));
      return 2.0 * nu * kme + std::log(kPi) - log_t12_zero;
    }
    case ModelKind::harmonic_line: {
      const double z = harmonic_z(nu);
      const double stirling = (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * kPi);
      return 0.5 * nu * nu * std::log(2.0) + 0.5 * std::log(kPi) - stirling;
    }
  }
  return 0.0;
}

double log_a_exact(const PotentialModel& model, double nu, const OdeOptions& opts) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("nu must be positive");
  switch (model.kind()) {
    case ModelKind::exp_half_line:
      return specfun::bessel_k_log(specfun::BesselOrder::real(nu), 1.0).log_abs - log_k0_at_one();
    case ModelKind::harmonic_line:
      return 0.5 * nu * nu * std::log(2.0) + 0.5 * std::log(kPi) - specfun::log_gamma(harmonic_z(nu));
    case ModelKind::cosh_line: {
      const auto la = fredholm_log_a(model, model.lambda_of_nu(nu), 0.0, opts);
      if (la.sign <= 0) throw NumericalError("a(lambda) is not positive below the spectrum");
      return la.log_abs;
    }
  }
  return 0.0;
}

ValueWithError sigma_integral_exact(const PotentialModel& model, double lambda, const OdeOptions& opts) {
  if (!(lambda < model.shift())) throw DomainError("sigma integral needs lambda below the shift");
  ValueWithError out;
  if (model.domain() == Domain::half_line) {
    const auto path = integrate_psi1(model, lambda, 0.0, {0.0}, opts);
    if (!std::isfinite(path.chi[0])) throw NumericalError("LG form broke down before x = 0");
    out.value = -path.chi[0];
    out.error = path.seed_error + opts.rtol * (1.0 + std::abs(out.value));
    return out;
  }
  const double x0 = seed_abscissa(model, lambda, opts);
  const auto path = integrate_psi1(model, lambda, x0, {-x0}, opts);
  if (!std::isfinite(path.chi[0])) throw NumericalError("LG form broke down before -x0");
  double tail_err = 0.0;
  const double tail = lg_sigma_tail(model, lambda, -x0, false, &tail_err);
  out.value = -path.chi[0] + tail;
  out.error = path.seed_error + tail_err + opts.rtol * (1.0 + std::abs(out.value));
  return out;
}

std::vector<Coefficient> exp_recursion_coeffs(int n_terms, double nu) {
  if (n_terms < 1 || n_terms > 6) throw OrderTooHigh("recursion route supports 1 <= N <= 6");
  if (!(nu >= 1.0)) throw DomainError("nu must be at least 1");
  const NuSeries series = exp_sigma_series(n_terms);
  std::vector<Coefficient> out;
  for (int n = 1; n <= n_terms; ++n) {
    auto f = [&](double t) { return series.coeff(n, t); };
    const double lo = -std::log(nu);
    const auto r = lo < 0.0 ? quad::integrate_split(f, lo, kCutoff, {0.0, 4.0}, coeff_options())
                            : quad::integrate(f, lo, kCutoff, coeff_options());
    out.push_back({-r.value, r.error});
  }
  return out;
}

std::vector<double> exp_alpha_coeffs(int n_terms) {
  // a_0 - leading = -sum_j binom(1/2, j) nu^{1-2j} + nu asinh-series - (1/4) log(1 + nu^-2).
  std::vector<double> alpha(static_cast<std::size_t>(n_terms), 0.0);
  double binom_half = 1.0;  // binom(1/2, j)
  double central = 1.0;     // binom(2j, j) / 4^j
  for (int j = 1; 2 * j - 1 <= n_terms; ++j) {
    binom_half *= (0.5 - (j - 1)) / j;
    central *= (2.0 * j - 1.0) / (2.0 * j);
    const double sgn = (j % 2 == 1) ? 1.0 : -1.0;
    alpha[2 * j - 2] = -binom_half + sgn * central / (2.0 * j);
    if (2 * j <= n_terms) alpha[2 * j - 1] = -0.25 * sgn / j;
  }
  return alpha;
}

std::vector<Coefficient> cosh_semi_numeric_coeffs(int n_terms, double nu) {
  if (n_terms < 1 || n_terms > 6) throw OrderTooHigh("recursion route supports 1 <= N <= 6");
  if (!(nu > 2.0)) throw DomainError("cosh model needs nu > 2");
  const NuSeries series = cosh_tau_series(n_terms, {WeightMode::exact, nu, 1e-3});
  std::vector<Coefficient> out;
  for (int n = 1; n <= n_terms; ++n) {
    if (n % 2 == 0) {  // odd in y
      out.push_back({0.0, 0.0});
      continue;
    }
    const auto r =
        symmetric_integral([&](double y) { return series.coeff(n, y) / cosh_weight(nu, y); }, 0.0, nu);
    out.push_back({-r.value, r.error});
  }
  return out;
}

std::vector<Coefficient> cosh_formal_coeffs(int n_terms, double nu, double delta) {
  if (n_terms < 1 || n_terms > 6) throw OrderTooHigh("recursion route supports 1 <= N <= 6");
  if (!(nu > 2.0)) throw DomainError("cosh model needs nu > 2");
  if (!(delta > 0.0 && delta < 0.5)) throw DomainError("delta must lie in (0, 0.5)");
  const NuSeries formal = cosh_tau_series(n_terms, {WeightMode::formal, 0.0, delta});
  // w_j(y) = binom(-1/2, j) 4^j sech^{2j} y / |tanh y|^{2j+1}
  auto weight_term = [](int j, double y) {
    double b = 1.0;
    for (int i = 1; i <= j; ++i) b *= (-0.5 - (i - 1)) / i;
    const double s2 = 1.0 / (std::cosh(y) * std::cosh(y));
    const double t = std::abs(std::tanh(y));
    return b * std::pow(4.0 * s2, j) / std::pow(t, 2 * j + 1);
  };
  // Window estimate: the nu^-m part of the exact-weight sum at nu that the
  // formal coefficients below order m do not account for.
  const auto exact = cosh_semi_numeric_coeffs(n_terms, nu);
  std::vector<Coefficient> out;
  double exact_sum = 0.0, formal_sum = 0.0;
  for (int m = 1; m <= n_terms; ++m) {
    auto integrand = [&](double y) {
      const auto tau = formal.coeffs(y);
      double sum = 0.0;
      for (int j = 0; 2 * j < m; ++j) sum += tau[static_cast<std::size_t>(m - 2 * j - 1)] * weight_term(j, y);
      return sum;
    };
    const auto outer = symmetric_integral(integrand, delta, 1.0 / delta);
    const double value = -outer.value;
    exact_sum += exact[m - 1].value * std::pow(nu, -m);
    const double window = std::pow(nu, m) * (exact_sum - formal_sum) - value;
    formal_sum += value * std::pow(nu, -m);
    out.push_back({value, outer.error + exact[m - 1].error + std::abs(window)});
  }
  return out;
}

SeriesFit fit_series(const std::vector<double>& nu_grid, const std::vector<double>& values, int n_terms,
                     const FitOptions& opts) {
  if (nu_grid.size() != values.size()) throw DomainError("grid and values differ in length");
  if (n_terms < 0 || n_terms > 4) throw OrderTooHigh("fit route supports N <= 4");
  if (opts.guard < 0) throw DomainError("guard must be non-negative");
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  const int logs = opts.log_basis ? std::max(n_terms, 1) : 0;
  const auto main = least_squares(power_basis(nu_grid, n_terms + opts.guard, logs), y);

  // Truncation sensitivity: the same fit with one guard term fewer.
  Eigen::VectorXd spread = Eigen::VectorXd::Zero(main.coef.size());
  if (opts.guard > 0) {
    const int powers = n_terms + opts.guard - 1;
    const auto coarse = least_squares(power_basis(nu_grid, powers, logs), y);
    for (int n = 0; n <= n_terms; ++n) spread(n) = std::abs(main.coef(n) - coarse.coef(n));
    for (int n = 1; n <= logs; ++n)
      spread(powers + 1 + n) = std::abs(main.coef(powers + 1 + n) - coarse.coef(powers + n));
  }
  auto coefficient = [&](Eigen::Index i) { return Coefficient{main.coef(i), main.stderr_(i) + spread(i)}; };
  SeriesFit out;
  out.gram_condition = main.cond;
  out.constant = coefficient(0);
  for (int n = 1; n <= n_terms; ++n) out.coeffs.push_back(coefficient(n));
  for (int n = 1; n <= logs; ++n) out.log_amplitudes.push_back(coefficient(n_terms + opts.guard + n));
  return out;
}

std::vector<Coefficient> series_coeffs(const PotentialModel& model, int n_terms, CoeffRoute route,
                                       const std::vector<double>& nu_grid, const OdeOptions& opts) {
  if (nu_grid.empty()) throw DomainError("empty nu grid");
  if (route == CoeffRoute::recursion) {
    switch (model.kind()) {
      case ModelKind::exp_half_line:
        return exp_recursion_coeffs(n_terms, nu_grid.back());
      case ModelKind::cosh_line:
        return cosh_formal_coeffs(n_terms, nu_grid.back());
      case ModelKind::harmonic_line:
        throw DomainError("no recursion route for the harmonic model");
    }
  }
  if (n_terms < 1 || n_terms > 4) throw OrderTooHigh("fit route supports 1 <= N <= 4");
  const double t12 = model.kind() == ModelKind::cosh_line ? cosh_log_t12_zero(opts) : 0.0;
  std::vector<double> y(nu_grid.size());
  parallel_for(nu_grid.size(), 0, [&](std::size_t i) {
    y[i] = log_a_exact(model, nu_grid[i], opts) - leading_term(model, nu_grid[i], opts, t12);
  });
  return fit_series(nu_grid, y, n_terms).coeffs;
}

double loglog_slope(const std::vector<double>& nu, const std::vector<double>& r) {
  const std::size_t m = nu.size();
  if (m < 2 || r.size() != m) throw DomainError("slope needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = std::log(nu[i]);
    const double v = std::log(std::max(std::abs(r[i]), 1e-300));
    sx += x;
    sy += v;
    sxx += x * x;
    sxy += x * v;
  }
  const double dm = static_cast<double>(m);
  return (dm * sxy - sx * sy) / (dm * sxx - sx * sx);
}

bool ExpansionReport::all_certified() const {
  return std::all_of(certified.begin(), certified.end(), [](bool b) { return b; });
}

ExpansionReport report(const PotentialModel& model, const std::vector<double>& nu_grid, int n_terms,
                       const ReportOptions& opts) {
  if (n_terms < 0 || n_terms > 4) throw OrderTooHigh("report supports N <= 4");
  if (nu_grid.size() < 6) throw DomainError("nu grid needs at least 6 points");
  if (!std::is_sorted(nu_grid.begin(), nu_grid.end()) ||
      std::adjacent_find(nu_grid.begin(), nu_grid.end()) != nu_grid.end())
    throw DomainError("nu grid must be strictly ascending");
  if (nu_grid.back() < 2.0 * nu_grid.front() * (1.0 - 1e-12)) throw DomainError("nu grid must span an octave");
  for (double nu : nu_grid) require_nu(model, nu);

  ExpansionReport rep;
  rep.model = model.name();
  rep.order = n_terms;
  rep.nu_grid = nu_grid;
  const std::size_t m = nu_grid.size();
  rep.log_a_exact.resize(m);
  rep.leading.resize(m);
  const double t12 = model.kind() == ModelKind::cosh_line ? cosh_log_t12_zero(opts.ode) : 0.0;
  parallel_for(m, opts.threads, [&](std::size_t i) {
    rep.log_a_exact[i] = log_a_exact(model, nu_grid[i], opts.ode);
    rep.leading[i] = leading_term(model, nu_grid[i], opts.ode, t12);
  });

  std::vector<double> y(m);
  for (std::size_t i = 0; i < m; ++i) y[i] = rep.log_a_exact[i] - rep.leading[i];

  for (int order = 0; order <= n_terms; ++order) {
    std::vector<double> c;
    if (order > 0) {
      const auto fit = fit_series(nu_grid, y, order);
      for (const auto& k : fit.coeffs) c.push_back(k.value);
      if (order == n_terms) {
        rep.coeffs = fit.coeffs;
        rep.constant = fit.constant;
        rep.gram_condition = fit.gram_condition;
      }
    }
    std::vector<double> partial(m), resid(m);
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (int n = 1; n <= order; ++n) s += c[n - 1] * std::pow(nu_grid[i], -n);
      partial[i] = rep.leading[i] + s;
      resid[i] = std::abs(y[i] - s);
    }
    const double slope = loglog_slope(nu_grid, resid);
    rep.partial_sums.push_back(partial);
    rep.residuals.push_back(resid);
    rep.residual_orders.push_back(slope);
    rep.certified.push_back(slope <= -(order + 0.5));
  }
  if (n_terms == 0) {
    rep.constant = fit_series(nu_grid, y, 0).constant;
  }
  if (opts.log_basis) {
    FitOptions fo;
    fo.log_basis = true;
    rep.log_term_amplitudes = fit_series(nu_grid, y, n_terms, fo).log_amplitudes;
  }
  return rep;
}

std::string ExpansionReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "nu,log_a_exact,leading";
  for (int k = 0; k <= order; ++k) out << ",partial_" << k;
  for (int k = 0; k <= order; ++k) out << ",residual_" << k;
  out << "\n";
  for (std::size_t i = 0; i < nu_grid.size(); ++i) {
    out << nu_grid[i] << ',' << log_a_exact[i] << ',' << leading[i];
    for (const auto& p : partial_sums) out << ',' << p[i];
    for (const auto& r : residuals) out << ',' << r[i];
    out << "\n";
  }
  return out.str();
}

std::string ExpansionReport::to_json() const {
  using nlohmann::json;
  auto coeff_json = [](const std::vector<Coefficient>& v) {
    json a = json::array();
    for (const auto& c : v) a.push_back({{"value", c.value}, {"uncertainty", c.error}});
    return a;
  };
  json j;
  j["schema"] = 1;
  j["model"] = model;
  j["order"] = order;
  j["nu_grid"] = nu_grid;
  j["log_a_exact"] = log_a_exact;
  j["leading"] = leading;
  j["constant"] = {{"value", constant.value}, {"uncertainty", constant.error}};
  j["coeffs"] = coeff_json(coeffs);
  j["partial_sums"] = partial_sums;
  j["residuals"] = residuals;
  j["residual_orders"] = residual_orders;
  j["certified"] = certified;
  j["gram_condition"] = gram_condition;
  j["log_term_amplitudes"] = log_term_amplitudes ? coeff_json(*log_term_amplitudes) : json(nullptr);
  return j.dump(2);
}

}  // namespace mtrace
