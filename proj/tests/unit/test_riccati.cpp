#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mtrace/errors.hpp"
#include "mtrace/riccati.hpp"

using namespace mtrace;

namespace {

// Least-squares slope of log r against log nu.
double loglog_slope(const std::vector<double>& nu, const std::vector<double>& r) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    const double x = std::log(nu[i]), y = std::log(r[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double residual_slope(const NuSeries& s, const RiccatiForm& f, double point, std::vector<double> nus) {
  std::vector<double> r;
  for (double nu : nus) r.push_back(riccati_residual(s, f, nu, point));
  return loglog_slope(nus, r);
}

}  // namespace

TEST_CASE("exp series: c1") {
  const NuSeries s = exp_sigma_series(3);
  CHECK(s.coeff(1, 0.0) == doctest::Approx(-3.0 / (8.0 * std::pow(2.0, 2.5))).epsilon(1e-15));
  CHECK(s.coeff(1, 0.0) == doctest::Approx(-0.06629126).epsilon(1e-7));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  for (int i = 0; i < 20; ++i) {
    const double t = u(rng);
    CHECK(s.coeff(1, t) == doctest::Approx(exp_c1_closed_form(t)).epsilon(1e-12).scale(1e-300));
  }
  // Decay like e^{-t}/8.
  const double t1 = 12.0, t2 = 16.0;
  const double slope = std::log(s.coeff(1, t2) / s.coeff(1, t1)) / (t2 - t1);
  CHECK(std::abs(slope + 1.0) < 0.05);
  CHECK(s.coeff(1, 20.0) * std::exp(20.0) == doctest::Approx(0.125).epsilon(1e-6));
}

TEST_CASE("exp series: c2 against finite differences of c1") {
  const NuSeries s = exp_sigma_series(2);
  const double h = 1e-4;
  const double d = (exp_c1_closed_form(h) - exp_c1_closed_form(-h)) / (2 * h);
  const double c1 = exp_c1_closed_form(0.0);
  const double expected = (d - 0.5 * c1) / (2.0 * std::sqrt(2.0));
  CHECK(s.coeff(2, 0.0) == doctest::Approx(expected).epsilon(1e-7));
  // Derivative of the c1 jet against the closed form at t = 1.
  const double fd = (exp_c1_closed_form(1.0 + h) - exp_c1_closed_form(1.0 - h)) / (2 * h);
  CHECK(s.coeff_jet(1, 1.0, 1).coeff(1) == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("zero series leaves the source term") {
  const NuSeries z = NuSeries::zero();
  for (const RiccatiForm& f : {RiccatiForm::exp_t_form(), RiccatiForm::cosh_y_form(),
                               RiccatiForm::x_form(PotentialModel(ModelKind::harmonic_line))}) {
    const RiccatiCoefficients c = f.at(12.0, 0.8);
    CHECK(riccati_defect(z, f, 12.0, 0.8) == std::abs(c.v));
  }
}

TEST_CASE("residual orders of the exp series") {
  const std::vector<double> nus = {10, 20, 40, 80};
  const NuSeries s2 = exp_sigma_series(2);
  CHECK(residual_slope(s2, RiccatiForm::exp_t_form(), 0.5, nus) <= -2.5);
  for (int n = 1; n <= 4; ++n) {
    const NuSeries s = exp_sigma_series(n);
    for (double t : {-1.0, 0.0, 0.5, 2.0}) {
      const double slope = residual_slope(s, RiccatiForm::exp_t_form(), t, {20, 28, 40, 56, 80, 113, 160, 226});
      INFO("N=" << n << " t=" << t);
      CHECK(slope <= -(n + 0.5));
    }
  }
  CHECK_THROWS_AS(exp_sigma_series(11), OrderTooHigh);
  CHECK_THROWS_AS(exp_sigma_series(0), OrderTooHigh);
}

TEST_CASE("cosh tau series") {
  const NuSeries s = cosh_tau_series(4);
  CHECK(s.coeff(1, 0.0) == 0.0);
  // tau_1 -> 1/(8 cosh y) for large y.
  CHECK(s.coeff(1, 20.0) * std::cosh(20.0) == doctest::Approx(0.125).epsilon(1e-12));
  for (double y : {0.3, 1.1, 2.5}) {
    CHECK(s.coeff(1, y) == doctest::Approx(s.coeff(1, -y)).epsilon(1e-15));
    const double t = std::tanh(y);
    CHECK(s.coeff(1, y) == doctest::Approx(-(t * t - 1.25 * t * t * t * t) / (2 * std::cosh(y))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(s.coeff(2, 1e-4), EvaluationAtSingularPoint);
  CHECK_NOTHROW(s.coeff(1, 1e-4));
  CHECK_THROWS_AS(cosh_tau_series(9), OrderTooHigh);
  for (int n = 1; n <= 2; ++n) {
    const NuSeries sn = cosh_tau_series(n);
    for (double y : {0.5, 1.0, -0.7, 2.0}) {
      const double slope = residual_slope(sn, RiccatiForm::cosh_y_form(), y, {20, 28, 40, 56, 80, 113, 160});
      INFO("N=" << n << " y=" << y);
      CHECK(slope <= -(n + 0.5));
    }
  }
}

TEST_CASE("cosh tau series in exact-weight mode") {
  for (double nu : {8.0, 30.0}) {
    CoshSeriesOptions o;
    o.mode = WeightMode::exact;
    o.nu = nu;
    const NuSeries s = cosh_tau_series(4, o);
    // Exact mode has no singularity at y = 0.
    CHECK(std::isfinite(s.coeff(4, 0.0)));
    // Truncation error drops by about nu^-1 per term.
    const double r2 = riccati_residual(cosh_tau_series(2, o), RiccatiForm::cosh_y_form(), nu, 0.4);
    const double r4 = riccati_residual(s, RiccatiForm::cosh_y_form(), nu, 0.4);
    CHECK(r4 < r2 / (0.2 * nu * nu));
  }
}

TEST_CASE("generic fixed-x series") {
  const PotentialModel e(ModelKind::exp_half_line);
  const std::vector<double> c = generic_sigma_series(e, 4, 0.3);
  CHECK(c[0] == 0.0);
  CHECK(c[1] == 0.0);
  // c_3 = -q''/8.
  CHECK(c[2] == doctest::Approx(-4.0 * std::exp(0.6) / 8.0).epsilon(1e-14));
  // Partial sums of the fixed-x and the t-variable series agree at nu = 40, x = 0.
  const double nu = 40.0;
  for (int n = 3; n <= 6; ++n) {
    const double fixed_x = generic_sigma_series(e, n).partial_sum(nu, 0.0);
    const double in_t = exp_sigma_series(n).partial_sum(nu, -std::log(nu));
    CHECK(std::abs(fixed_x - in_t) <= 10.0 * std::pow(nu, -(n + 1)));
  }
  for (ModelKind kind : {ModelKind::exp_half_line, ModelKind::cosh_line, ModelKind::harmonic_line}) {
    const PotentialModel m(kind);
    for (int n = 1; n <= 4; ++n) {
      const NuSeries s = generic_sigma_series(m, n);
      std::vector<double> nus, rs;
      for (double nu : {40.0, 57.0, 80.0, 113.0, 160.0, 226.0, 320.0, 453.0, 640.0}) {
        nus.push_back(nu);
        rs.push_back(riccati_residual(s, RiccatiForm::x_form(m), nu, 1.0));
      }
      INFO("model=" << m.name() << " N=" << n);
      CHECK(loglog_slope(nus, rs) <= -(n + 0.5));
    }
  }
}
