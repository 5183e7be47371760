#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/ellint_1.hpp>
#include <boost/math/special_functions/ellint_2.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "json.hpp"
#include "mtrace/errors.hpp"
#include "mtrace/riccati.hpp"
#include "mtrace/spectrum.hpp"
#include "mtrace/traceid.hpp"

using namespace mtrace;

namespace {

const PotentialModel kExp{ModelKind::exp_half_line};
const PotentialModel kCosh{ModelKind::cosh_line};
const PotentialModel kHarm{ModelKind::harmonic_line};
const double kLogPi = std::log(std::numbers::pi);

double log_bessel_ratio(double nu) {
  return std::log(boost::math::cyl_bessel_k(nu, 1.0)) - std::log(boost::math::cyl_bessel_k(0.0, 1.0));
}

std::vector<double> log_grid(double a, double b, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(a * std::pow(b / a, static_cast<double>(i) / (n - 1)));
  return g;
}

double log_t12_zero() {
  static const double v = cosh_log_t12_zero();
  return v;
}

template <class F>
double gk(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-13);
}

}  // namespace

TEST_CASE("leading term") {
  SUBCASE("exp nu = 10 against the Bessel ratio") {
    CHECK(std::abs(log_bessel_ratio(10.0) - leading_term(kExp, 10.0)) <= 0.05);
  }
  SUBCASE("cosh nu -> 2 reduces to the t12 constant") {
    CHECK(leading_term(kCosh, 2.0 + 1e-9) == doctest::Approx(kLogPi - log_t12_zero()).epsilon(1e-8));
  }
  SUBCASE("cosh nu = 40 against the logarithmic limit form") {
    const double nu = 40.0;
    const double k = std::sqrt(1.0 - 4.0 / (nu * nu));
    const double kme = boost::math::ellint_1(k) - boost::math::ellint_2(k);
    const double lead = leading_term(kCosh, nu);
    CHECK(lead == doctest::Approx(2.0 * nu * kme + kLogPi - log_t12_zero()).epsilon(1e-12));
    const double limit_form = 2.0 * (nu * std::log(2.0 * nu) - nu) + kLogPi - log_t12_zero();
    const double f1 = 2.0 * std::log(2.0 * nu) / nu;
    CHECK(std::abs(lead - limit_form) <= 2.0 * f1);
  }
  SUBCASE("harmonic leading term removes the Stirling series") {
    const double nu = 7.0, z = 0.5 * (1.0 + nu * nu);
    const double exact = 0.5 * nu * nu * std::log(2.0) + 0.5 * kLogPi - std::lgamma(z);
    CHECK(exact - leading_term(kHarm, nu) == doctest::Approx(-1.0 / (12.0 * z)).epsilon(1e-3));
  }
  SUBCASE("domain") {
    CHECK_THROWS_AS(leading_term(kCosh, 2.0), DomainError);
    CHECK_THROWS_AS(leading_term(kExp, -1.0), DomainError);
  }
}

TEST_CASE("log a exact sources") {
  CHECK(log_a_exact(kExp, 5.0) == doctest::Approx(log_bessel_ratio(5.0)).epsilon(1e-10));
  CHECK(log_a_exact(kHarm, std::sqrt(3.0)) == doctest::Approx(std::log(5.0132565492620005)).epsilon(1e-12));
  CHECK(log_a_exact(kCosh, std::sqrt(2.0)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("exact sigma-integral identities") {
  SUBCASE("half line, exp nu = 5") {
    const double nu = 5.0;
    const auto s = sigma_integral_exact(kExp, -nu * nu);
    CHECK(s.error < 1e-8);
    CHECK(std::abs(log_bessel_ratio(nu) - exp_a0(nu) + s.value) <= 1e-6);
  }
  SUBCASE("exp_a0 from the phase-integral limit") {
    const double nu = 3.0;
    const double direct = -std::sqrt(nu * nu + 1.0) + nu * std::log(nu + std::sqrt(nu * nu + 1.0)) -
                          0.25 * std::log(nu * nu + 1.0) + 0.5 * std::log(std::numbers::pi / 2.0) -
                          std::log(boost::math::cyl_bessel_k(0.0, 1.0));
    CHECK(exp_a0(nu) == doctest::Approx(direct).epsilon(1e-13));
  }
  SUBCASE("line, cosh nu = 4, 6, 10") {
    for (double nu : {4.0, 6.0, 10.0}) {
      const auto s = sigma_integral_exact(kCosh, 2.0 - nu * nu);
      const double la = log_a_exact(kCosh, nu);
      CHECK(std::abs(la - leading_term(kCosh, nu, {}, log_t12_zero()) + s.value) <= 1e-6);
      // The same relation written with -log pi misses by exactly 2 log pi.
      const double two_nu_kme = leading_term(kCosh, nu, {}, log_t12_zero()) - kLogPi + log_t12_zero();
      const double literal = la + kLogPi + log_t12_zero() - two_nu_kme + s.value;
      CHECK(literal == doctest::Approx(2.0 * kLogPi).epsilon(1e-8));
    }
  }
  SUBCASE("nu = 80 sigma integral is of order c_1 / nu") {
    const double nu = 80.0;
    const auto s = sigma_integral_exact(kCosh, 2.0 - nu * nu);
    const auto c = series_coeffs(kCosh, 1, CoeffRoute::fit, log_grid(6.0, 48.0, 8));
    CHECK(std::abs(s.value) <= 2.0 * std::abs(c[0].value) / nu * 1.5);
  }
  SUBCASE("domain") { CHECK_THROWS_AS(sigma_integral_exact(kCosh, 3.0), DomainError); }
}

TEST_CASE("exp recursion coefficients") {
  const auto r40 = exp_recursion_coeffs(3, 40.0);
  const auto r20 = exp_recursion_coeffs(3, 20.0);
  SUBCASE("c_1 against the closed form") {
    const double oracle = -gk([](double t) { return exp_c1_closed_form(t); }, -std::log(40.0), 60.0);
    CHECK(r40[0].value == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(exp_recursion_coeffs(1, 1e8)[0].value == doctest::Approx(1.0 / 12.0).epsilon(1e-7));
  }
  SUBCASE("nu dependence only through the lower limit") {
    const NuSeries series = exp_sigma_series(3);
    for (int n = 1; n <= 3; ++n) {
      const double oracle = -gk([&](double t) { return series.coeff(n, t); }, -std::log(40.0), -std::log(20.0));
      CHECK(std::abs((r20[n - 1].value - r40[n - 1].value) - (-oracle)) <= 1e-9);
    }
  }
  SUBCASE("alpha_n from the expansion of a_0") {
    const auto alpha = exp_alpha_coeffs(4);
    CHECK(alpha[0] == doctest::Approx(-0.25));
    CHECK(alpha[1] == doctest::Approx(-0.25));
    CHECK(alpha[2] == doctest::Approx(1.0 / 32.0));
    for (double nu : {20.0, 40.0}) {
      double s = 0.0;
      for (int n = 1; n <= 4; ++n) s += alpha[n - 1] * std::pow(nu, -n);
      CHECK(std::abs(exp_a0(nu) - leading_term(kExp, nu) - s) <= 2.0 * std::pow(nu, -5.0));
    }
  }
  SUBCASE("series reproduces log a - a_0 at finite nu") {
    const double nu = 12.0;
    const auto r = exp_recursion_coeffs(4, nu);
    double s = 0.0;
    for (int n = 1; n <= 4; ++n) s += r[n - 1].value * std::pow(nu, -n);
    CHECK(std::abs(log_bessel_ratio(nu) - exp_a0(nu) - s) <= std::pow(nu, -5.0));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(exp_recursion_coeffs(7, 10.0), OrderTooHigh);
    CHECK_THROWS_AS(exp_recursion_coeffs(2, 0.5), DomainError);
  }
}

TEST_CASE("cosh recursion coefficients") {
  SUBCASE("semi-numeric sum reproduces the sigma integral") {
    for (double nu : {10.0, 20.0}) {
      const auto d = cosh_semi_numeric_coeffs(3, nu);
      double s = 0.0;
      for (int n = 1; n <= 3; ++n) s += d[n - 1].value * std::pow(nu, -n);
      const auto exact = sigma_integral_exact(kCosh, 2.0 - nu * nu);
      CHECK(std::abs(-exact.value - s) <= 2.0 * std::pow(nu, -4.0));
    }
  }
  SUBCASE("formal c_1 = 1/6, c_2 = 0") {
    // -int tau_1 / |tanh y| dy = int_0^inf (tanh - (5/4) tanh^3) / cosh dy = 1 - 5/6.
    const auto c = cosh_formal_coeffs(2, 20.0);
    CHECK(std::abs(c[0].value - 1.0 / 6.0) <= c[0].error + 1e-6);
    CHECK(c[0].error < 1e-3);
    CHECK(c[1].value == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("window estimate is carried in the uncertainty at third order") {
    const auto c = cosh_formal_coeffs(3, 40.0);
    const auto d = cosh_semi_numeric_coeffs(3, 320.0);
    // nu^-3 coefficient of the exact-weight sum: 320^2 (d_1 - 1/6) + d_3.
    const double true_c3 = 320.0 * 320.0 * (d[0].value - 1.0 / 6.0) + d[2].value;
    CHECK(std::abs(c[2].value - true_c3) <= 1.05 * c[2].error);
    CHECK(c[2].error > 0.9);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(cosh_formal_coeffs(7, 10.0), OrderTooHigh);
    CHECK_THROWS_AS(cosh_semi_numeric_coeffs(2, 1.5), DomainError);
  }
}

TEST_CASE("least-squares series fit") {
  const auto grid = log_grid(5.0, 80.0, 10);
  SUBCASE("recovers an exact polynomial in 1/nu") {
    std::vector<double> y;
    for (double nu : grid) y.push_back(0.3 + 0.5 / nu - 0.2 / (nu * nu) + 0.7 / std::pow(nu, 3));
    const auto f = fit_series(grid, y, 2);
    CHECK(f.constant.value == doctest::Approx(0.3).epsilon(1e-9));
    CHECK(f.coeffs[0].value == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(f.coeffs[1].value == doctest::Approx(-0.2).epsilon(1e-7));
    CHECK(f.gram_condition > 1.0);
  }
  SUBCASE("a constant shift moves only the constant") {
    std::vector<double> y, z;
    for (double nu : grid) {
      y.push_back(log_bessel_ratio(nu) - leading_term(kExp, nu));
      z.push_back(y.back() + 1.234);
    }
    const auto a = fit_series(grid, y, 2), b = fit_series(grid, z, 2);
    CHECK(b.constant.value - a.constant.value == doctest::Approx(1.234).epsilon(1e-9));
    for (int n = 0; n < 2; ++n) CHECK(std::abs(a.coeffs[n].value - b.coeffs[n].value) <= a.coeffs[n].error);
  }
  SUBCASE("log basis amplitudes") {
    std::vector<double> y;
    for (double nu : grid) y.push_back(0.1 / nu + 0.05 * std::log(nu) / nu);
    FitOptions fo;
    fo.log_basis = true;
    const auto f = fit_series(grid, y, 1, fo);
    REQUIRE(f.log_amplitudes.size() == 1);
    CHECK(f.log_amplitudes[0].value == doctest::Approx(0.05).epsilon(1e-6));
  }
  SUBCASE("ill-conditioned basis") {
    FitOptions fo;
    fo.log_basis = true;
    std::vector<double> y(6, 0.0);
    CHECK_THROWS_AS(fit_series(log_grid(10.0, 20.0, 6), y, 2, fo), IllConditionedFit);
    CHECK_THROWS_AS(fit_series(grid, std::vector<double>(10, 0.0), 5), OrderTooHigh);
  }
}

TEST_CASE("series coefficients by route") {
  SUBCASE("exp fit c_1 matches alpha_1 plus the recursion contribution at nu = 40") {
    const auto fit = series_coeffs(kExp, 2, CoeffRoute::fit, log_grid(5.0, 80.0, 12));
    const auto rec = series_coeffs(kExp, 1, CoeffRoute::recursion, {40.0});
    const double alpha1 = exp_alpha_coeffs(1)[0];
    CHECK(std::abs(fit[0].value - alpha1 - rec[0].value) <= fit[0].error + rec[0].error + 1.0 / (40.0 * 40.0));
    CHECK(fit[0].value == doctest::Approx(-1.0 / 6.0).epsilon(2e-3));
  }
  SUBCASE("cosh fit c_1 is stable under grid perturbation") {
    const std::vector<double> g1{8, 12, 16, 24, 32};
    std::vector<double> g2;
    for (double nu : g1) g2.push_back(nu * 1.05);
    const double c1 = series_coeffs(kCosh, 1, CoeffRoute::fit, g1)[0].value;
    const double c2 = series_coeffs(kCosh, 1, CoeffRoute::fit, g2)[0].value;
    CHECK(std::abs(c1 - c2) <= 5e-4 * std::abs(c1));
    CHECK(c1 == doctest::Approx(1.0 / 6.0).epsilon(1e-2));
  }
  SUBCASE("harmonic fit recovers the Stirling coefficient 1/12") {
    // -1/(12 z), z = (1 + nu^2)/2, contributes -1/6 at order nu^-2.
    const auto c = series_coeffs(kHarm, 2, CoeffRoute::fit, log_grid(5.0, 80.0, 12));
    CHECK(std::abs(-c[1].value / 2.0 - 1.0 / 12.0) <= 0.05 / 12.0);
    CHECK(std::abs(c[0].value) <= 1e-3);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(series_coeffs(kHarm, 1, CoeffRoute::recursion, {10.0}), DomainError);
    CHECK_THROWS_AS(series_coeffs(kExp, 5, CoeffRoute::fit, log_grid(5.0, 80.0, 12)), OrderTooHigh);
  }
}

TEST_CASE("expansion reports") {
  SUBCASE("exp grid 5..80, N = 2") {
    const auto rep = report(kExp, log_grid(5.0, 80.0, 12), 2);
    REQUIRE(rep.residual_orders.size() == 3);
    CHECK(rep.residual_orders[0] <= -0.5);
    CHECK(rep.residual_orders[1] <= -1.5);
    CHECK(rep.residual_orders[2] <= -2.5);
    CHECK(rep.all_certified());
    CHECK(std::abs(rep.constant.value) < 1e-5);
    CHECK(!rep.log_term_amplitudes);
    const auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j["schema"] == 1);
    CHECK(j["coeffs"].size() == 2);
    CHECK(j["log_term_amplitudes"].is_null());
    const std::string csv = rep.to_csv();
    CHECK(csv.rfind("nu,log_a_exact,leading,partial_0,partial_1,partial_2,residual_0", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  }
  SUBCASE("cosh grid 6..48, N = 1, with log basis") {
    ReportOptions ro;
    ro.log_basis = true;
    const auto rep = report(kCosh, log_grid(6.0, 48.0, 8), 1, ro);
    CHECK(rep.residual_orders[0] <= -0.5);
    CHECK(rep.residual_orders[1] <= -1.5);
    REQUIRE(rep.log_term_amplitudes);
    const auto& amp = (*rep.log_term_amplitudes)[0];
    CHECK(std::abs(amp.value) <= 2.0 * amp.error + 1e-3);
    // log a - leading is exactly -int sigma; the fitted constant vanishes.
    CHECK(std::abs(rep.constant.value) < 1e-4);
  }
  SUBCASE("deterministic under threading") {
    ReportOptions a, b;
    a.threads = 1;
    b.threads = 4;
    const auto g = log_grid(6.0, 24.0, 6);
    CHECK(report(kCosh, g, 1, a).to_json() == report(kCosh, g, 1, b).to_json());
  }
  SUBCASE("grid validation") {
    CHECK_THROWS_AS(report(kExp, log_grid(5.0, 80.0, 5), 1), DomainError);
    CHECK_THROWS_AS(report(kExp, log_grid(5.0, 9.0, 8), 1), DomainError);
    CHECK_THROWS_AS(report(kExp, {80, 40, 30, 20, 10, 5}, 1), DomainError);
    CHECK_THROWS_AS(report(kExp, log_grid(5.0, 80.0, 12), 5), OrderTooHigh);
  }
  SUBCASE("log-log slope") {
    std::vector<double> nu{1, 2, 4, 8}, r;
    for (double x : nu) r.push_back(3.0 * std::pow(x, -2.5));
    CHECK(loglog_slope(nu, r) == doctest::Approx(-2.5));
  }
}
