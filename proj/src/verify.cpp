#include "mtrace/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "mtrace/errors.hpp"
#include "mtrace/ode.hpp"
#include "mtrace/potential.hpp"
#include "mtrace/quadrature.hpp"
#include "mtrace/riccati.hpp"
#include "mtrace/specfun.hpp"
#include "mtrace/spectrum.hpp"
#include "mtrace/traceid.hpp"

namespace mtrace {

namespace {

using specfun::BesselOrder;
constexpr double kPi = std::numbers::pi;

struct Suite {
  std::string name;
  std::vector<CheckResult> results;

  // Runs `body`, which returns the measured error and sets `detail`; the check
  // passes when the error is at most `bound`.  Exceptions count as failures.
  void check(const std::string& check_name, double bound, const std::function<double(std::ostringstream&)>& body) {
    CheckResult r{name, check_name, false, ""};
    std::ostringstream detail;
    detail.precision(3);
    try {
      const double err = body(detail);
      r.passed = std::isfinite(err) && err <= bound;
      detail << " (measure " << err << ", bound " << bound << ")";
    } catch (const std::exception& e) {
      detail << "exception: " << e.what();
    }
    r.detail = detail.str();
    results.push_back(r);
  }
};

const PotentialModel kExp{ModelKind::exp_half_line};
const PotentialModel kCosh{ModelKind::cosh_line};
const PotentialModel kHarm{ModelKind::harmonic_line};

std::vector<double> geometric(double a, double b, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(a * std::pow(b / a, static_cast<double>(i) / (n - 1)));
  return g;
}

void specfun_suite(Suite& s, const VerifyOptions& opts) {
  s.check("legendre_relation", 1e-13, [](std::ostringstream& d) {
    double worst = 0.0;
    for (double k : {0.1, 0.5, 0.9, 0.999}) {
      const auto m = specfun::Modulus::from_k(k);
      const auto p = specfun::elliptic_complete(m);
      const auto q = specfun::elliptic_complete(specfun::Modulus::from_complement(k));
      worst = std::max(worst, std::abs(p.second * q.first + q.second * p.first - p.first * q.first - kPi / 2));
    }
    d << "E K' + E' K - K K' = pi/2";
    return worst;
  });
  s.check("k_minus_e", 1e-13, [](std::ostringstream& d) {
    double worst = 0.0;
    for (double k : {0.2, 0.7, 0.95}) {
      const auto m = specfun::Modulus::from_k(k);
      const auto p = specfun::elliptic_complete(m);
      worst = std::max(worst, std::abs(specfun::elliptic_k_minus_e(m) - (p.first - p.second)) / (p.first - p.second));
    }
    d << "K - E without cancellation";
    return worst;
  });
  s.check("bessel_half_order", 1e-12, [](std::ostringstream& d) {
    double worst = 0.0;
    for (double y : {0.1, 1.0, 7.5, 30.0}) {
      const double exact = std::sqrt(kPi / (2 * y)) * std::exp(-y);
      worst = std::max(worst, std::abs(specfun::bessel_k(BesselOrder::real(0.5), y) / exact - 1));
    }
    d << "K_{1/2}(y) = sqrt(pi/2y) e^{-y}";
    return worst;
  });
  s.check("bessel_recurrence", 1e-11, [](std::ostringstream& d) {
    double worst = 0.0;
    for (double nu : {1.0, 4.3, 12.0}) {
      const double y = 1.7;
      const double lhs = specfun::bessel_k(BesselOrder::real(nu + 1), y);
      const double rhs = specfun::bessel_k(BesselOrder::real(nu - 1), y) + 2 * nu / y * specfun::bessel_k(BesselOrder::real(nu), y);
      worst = std::max(worst, std::abs(lhs / rhs - 1));
    }
    d << "K_{nu+1} = K_{nu-1} + (2 nu/y) K_nu";
    return worst;
  });
  s.check("connection_formula", 1e-10, [](std::ostringstream& d) {
    double worst = 0.0;
    for (double k : {0.5, 1.0, 3.0})
      for (double y : {0.3, 2.0, 6.0}) {
        const auto i = specfun::bessel_i_reim(k, y);
        const double kk = specfun::bessel_k(BesselOrder::imaginary(k), y);
        const double rhs = std::sinh(kPi * k) / kPi * kk;
        const double scale = std::sinh(kPi * k) / kPi * std::exp(-kPi * k / 2) * std::sqrt(kPi / (2 * y)) * std::exp(-y);
        worst = std::max(worst, std::abs(i.im - rhs) / std::max(std::abs(rhs), 1e-3 * scale));
      }
    d << "Im I_{-ik} = sinh(pi k)/pi K_{ik}";
    return worst;
  });
  s.check("lambert_and_gamma", 1e-13, [](std::ostringstream& d) {
    double worst = 0.0;
    for (double x : {0.01, 1.0, 50.0, 1e6}) {
      const double w = specfun::lambert_w(x);
      worst = std::max(worst, std::abs(w * std::exp(w) / x - 1));
    }
    double fact = 0.0;
    for (int n = 2; n <= 30; ++n) {
      fact += std::log(n - 1.0);
      worst = std::max(worst, std::abs(specfun::log_gamma(static_cast<double>(n)) - fact) / std::max(1.0, fact));
    }
    d << "W e^W = x, log Gamma(n) = log (n-1)!";
    return worst;
  });
  s.check("phase_integral_closed_form", 1e-9, [&](std::ostringstream& d) {
    std::mt19937_64 rng(20261018);
    std::uniform_real_distribution<double> nu_dist(2.5, 50.0), x_dist(-5.0, 5.0);
    double worst = 0.0;
    quad::Options qo;
    qo.abs_tol = opts.quad_tol;
    qo.rel_tol = opts.quad_tol;
    for (int i = 0; i < 20; ++i) {
      const double nu = nu_dist(rng), x = x_dist(rng);
      const PhaseIntegral phase(kCosh, nu);
      const double ref = quad::integrate([&](double s) { return phase.integrand(s); }, 0.0, x, qo).value;
      worst = std::max(worst, std::abs(phase.closed_form(x) - ref) / std::max(1.0, std::abs(ref)));
    }
    d << "cosh elliptic closed form vs quadrature, 20 random (nu, x)";
    return worst;
  });
}

void identities_suite(Suite& s, const VerifyOptions& opts) {
  const OdeOptions& ode = opts.ode;
  s.check("exp_bessel_ratio", 1e-7, [&](std::ostringstream& d) {
    double worst = 0.0;
    const double k0 = specfun::bessel_k(BesselOrder::real(0.0), 1.0);
    for (double nu : {2.0, 5.0, 10.0, 20.0}) {
      const double ratio = specfun::bessel_k(BesselOrder::real(nu), 1.0) / k0;
      worst = std::max(worst, std::abs(fredholm_a(kExp, -nu * nu, 0.0, ode) / ratio - 1));
    }
    d << "a(-nu^2) = K_nu(1)/K_0(1), nu = 2, 5, 10, 20";
    return worst;
  });
  s.check("harmonic_gamma_formula", 1e-6, [&](std::ostringstream& d) {
    double worst = 0.0;
    for (double l : {-1.0, -3.0, -7.5}) {
      const double exact = std::exp(-0.5 * l * std::log(2.0) + 0.5 * std::log(kPi) - specfun::log_gamma(0.5 * (1 - l)));
      worst = std::max(worst, std::abs(fredholm_a(kHarm, l, 0.0, ode) / exact - 1));
    }
    d << "a(lambda) = 2^{-lambda/2} sqrt(pi) / Gamma((1-lambda)/2)";
    return worst;
  });
  s.check("harmonic_eigenvalues", 1e-8, [&](std::ostringstream& d) {
    EigenOptions eo;
    eo.ode = ode;
    eo.threads = opts.threads;
    const auto e = eigenvalues(kHarm, 10, eo);
    double worst = 0.0;
    for (int n = 0; n < 10; ++n) worst = std::max(worst, std::abs(e[n].lambda - (2 * n + 1)));
    d << "lambda_n = 1, 3, ..., 19";
    return worst;
  });
  s.check("half_line_sigma_identity", 1e-6, [&](std::ostringstream& d) {
    const double nu = 5.0;
    const auto si = sigma_integral_exact(kExp, -nu * nu, ode);
    d << "log a - a0 = -int sigma (exp, nu = 5)";
    return std::abs(log_a_exact(kExp, nu, ode) - exp_a0(nu) + si.value);
  });
  s.check("line_sigma_identity", 1e-6, [&](std::ostringstream& d) {
    const double t12 = cosh_log_t12_zero(ode);
    double worst = 0.0;
    for (double nu : {4.0, 6.0, 10.0}) {
      const auto si = sigma_integral_exact(kCosh, 2 - nu * nu, ode);
      worst = std::max(worst, std::abs(log_a_exact(kCosh, nu, ode) - leading_term(kCosh, nu, ode, t12) + si.value));
    }
    d << "log a - 2nu(K-E) - log pi + log t12(0) = -int sigma (cosh, nu = 4, 6, 10)";
    return worst;
  });
  // Slopes of the sup over sample points; pointwise slopes break down near
  // isolated zeros of the leading residual coefficient.
  const std::vector<double> nus{20, 28, 40, 56, 80, 113, 160, 226};
  auto sup_slope = [&](const NuSeries& series, const RiccatiForm& form, double min_abs) {
    std::vector<double> sup;
    for (double nu : nus) {
      double m = 0.0;
      for (int i = 0; i <= 800; ++i) {
        const double p = -4.0 + 0.01 * i;
        if (std::abs(p) >= min_abs - 1e-12) m = std::max(m, riccati_residual(series, form, nu, p));
      }
      sup.push_back(m);
    }
    return loglog_slope(nus, sup);
  };
  s.check("riccati_orders_exp", 0.0, [&](std::ostringstream& d) {
    double worst = -1e300;
    for (int n = 1; n <= 4; ++n)
      worst = std::max(worst, sup_slope(exp_sigma_series(n), RiccatiForm::exp_t_form(), 0.0) + (n + 0.5));
    d << "sup over |t| <= 4: slope + (N + 1/2) <= 0 for N = 1..4";
    return worst;
  });
  s.check("riccati_orders_cosh_formal", 0.0, [&](std::ostringstream& d) {
    double worst = -1e300;
    for (int n = 1; n <= 2; ++n)
      worst = std::max(worst, sup_slope(cosh_tau_series(n), RiccatiForm::cosh_y_form(), 0.5) + (n + 0.5));
    d << "sup over 0.5 <= |y| <= 4: slope + (N + 1/2) <= 0 for N = 1, 2";
    return worst;
  });
  s.check("expansion_orders", 0.0, [&](std::ostringstream& d) {
    ReportOptions ro;
    ro.ode = ode;
    ro.threads = opts.threads;
    const auto e = report(kExp, geometric(5, 80, 12), 2, ro);
    const auto c = report(kCosh, geometric(6, 48, 8), 1, ro);
    double worst = -1e300;
    for (int m = 0; m <= 2; ++m) worst = std::max(worst, e.residual_orders[m] + (m + 0.5));
    for (int m = 0; m <= 1; ++m) worst = std::max(worst, c.residual_orders[m] + (m + 0.5));
    d << "exp orders " << e.residual_orders[0] << ", " << e.residual_orders[1] << ", " << e.residual_orders[2]
      << "; cosh orders " << c.residual_orders[0] << ", " << c.residual_orders[1] << ";";
    return worst;
  });
  s.check("exp_counting", 2.0, [&](std::ostringstream& d) {
    EigenOptions eo;
    eo.ode = ode;
    eo.threads = opts.threads;
    const auto e = eigenvalues(kExp, 30, eo);
    double worst = 0.0;
    for (int n = 1; n <= 30; ++n) worst = std::max(worst, std::abs(n - exp_counting_estimate(e[n - 1].lambda)));
    const double lambert = std::abs(exp_lambert_eigenvalue(30) / e[29].lambda - 1);
    d << "count vs (sqrt l/pi) log(2 sqrt l/e); Lambert inversion at n = 30 off by " << lambert;
    return lambert <= 0.05 ? worst : std::numeric_limits<double>::infinity();
  });
}

void picard_suite(Suite& s, const VerifyOptions& opts) {
  std::vector<double> xs;
  for (int i = 0; i < 9; ++i) xs.push_back(3.0 - 0.25 * i);
  PicardResult r;
  try {
    r = picard_psi1(1.0, xs, 5);
  } catch (const std::exception& e) {
    s.results.push_back({s.name, "picard_iterates", false, std::string("exception: ") + e.what()});
    return;
  }
  s.check("remainder_bound", 10.0, [&](std::ostringstream& d) {
    double c = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j)
      c = std::max(c, std::abs(r.partial[j] - r.iterates[0][j]) * std::exp(3.5 * xs[j]));
    d << "fitted C in |sum - K_{ik}(e^x)| <= C e^{-e^x} e^{-7x/2}, k = 1, x in [1, 3]";
    return c;
  });
  s.check("factorial_decay", 1.0, [&](std::ostringstream& d) {
    const std::size_t j = xs.size() - 1;
    const double r1 = std::abs(r.iterates[2][j] / r.iterates[1][j]);
    const double r3 = std::abs(r.iterates[4][j] / r.iterates[3][j]);
    d << "ratio f_4/f_3 over f_2/f_1 at x = 1";
    return r3 / r1;
  });
  s.check("agrees_with_shooting", 1e-7, [&](std::ostringstream& d) {
    const SolutionPath p = integrate_psi1(kCosh, 1.0, 0.0, xs, opts.ode);
    double worst = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j)
      worst = std::max(worst, std::abs(std::log(r.partial[j]) - std::exp(xs[j]) - p.log_psi[j]));
    d << "log psi_1 from Picard vs shooting at k = 1";
    return worst;
  });
}

}  // namespace

std::vector<std::string> verify_suites() { return {"specfun", "identities", "picard", "all"}; }

std::vector<CheckResult> run_verify(const std::string& suite, const VerifyOptions& opts) {
  const bool all = suite == "all";
  if (!all && suite != "specfun" && suite != "identities" && suite != "picard")
    throw DomainError("unknown suite '" + suite + "' (specfun, identities, picard, all)");
  std::vector<CheckResult> out;
  auto run = [&](const std::string& name, void (*fn)(Suite&, const VerifyOptions&)) {
    if (!all && suite != name) return;
    Suite s{name, {}};
    fn(s, opts);
    out.insert(out.end(), s.results.begin(), s.results.end());
  };
  run("specfun", specfun_suite);
  run("identities", identities_suite);
  run("picard", picard_suite);
  return out;
}

}  // namespace mtrace
