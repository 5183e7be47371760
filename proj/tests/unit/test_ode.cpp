#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "mtrace/errors.hpp"
#include "mtrace/ode.hpp"
#include "mtrace/specfun.hpp"

using namespace mtrace;

namespace {

const PotentialModel kExp{ModelKind::exp_half_line};
const PotentialModel kCosh{ModelKind::cosh_line};
const PotentialModel kHarm{ModelKind::harmonic_line};

// log of sqrt(2/pi) e K_nu(e^x), the exp-model psi_1 in the library normalization.
double exp_log_psi_oracle(double nu, double x) {
  return std::log(boost::math::cyl_bessel_k(nu, std::exp(x))) + 0.5 * std::log(2.0 / std::numbers::pi) + 1.0;
}

double exp_dlog_psi_oracle(double nu, double x) {
  const double s = std::exp(x);
  return s * boost::math::cyl_bessel_k_prime(nu, s) / boost::math::cyl_bessel_k(nu, s);
}

std::vector<double> descending(double hi, double lo, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(hi + (lo - hi) * i / (n - 1));
  return v;
}

}  // namespace

TEST_CASE("LG seed matches the leading term and the exact log-derivative") {
  const double x0 = 5.0;
  const LGSeed s = lg_seed(kExp, -25.0, x0);
  const double e10 = std::exp(10.0);
  const double leading = -std::sqrt(e10 + 25.0) - e10 / (2.0 * (e10 + 25.0));
  // The leading term misses sigma(x0) ~ -e^{-x0}/8.
  CHECK(std::abs(s.dlog_psi - leading) <= 1e-5 * std::abs(leading));
  CHECK(std::abs(s.dlog_psi - leading - s.sigma) <= 1e-12 * std::abs(leading));
  CHECK(std::abs(s.dlog_psi - exp_dlog_psi_oracle(5.0, x0)) <= 1e-13 * std::abs(leading));
  CHECK(std::abs(s.log_psi - exp_log_psi_oracle(5.0, x0)) <= 1e-12 * std::abs(s.log_psi));
  CHECK(s.est_error < 1e-10);

  const double xc = 0.5 * std::acosh(5e5);
  const LGSeed c = lg_seed(kCosh, 0.0, xc);
  CHECK(std::abs(c.dlog_psi / -1000.0 - 1.0) < 1e-3);
}

TEST_CASE("seed thresholds are enforced and configurable") {
  CHECK_THROWS_AS(lg_seed(kHarm, -1.0, 40.0), SeedPointTooSmall);
  CHECK_THROWS_AS(lg_seed(kExp, -1e6, 5.0), SeedPointTooSmall);
  OdeOptions o;
  o.q_floor = 1e3;
  const LGSeed s = lg_seed(kHarm, -1.0, 40.0, o);
  CHECK(std::abs(s.dlog_psi / -40.0 - 1.0) < 1e-3);
  const double x0 = seed_abscissa(kExp, -100.0);
  CHECK(kExp.q(x0) >= 1e4 * (1.0 - 1e-12));
}

TEST_CASE("exp model solution equals the Bessel function") {
  for (double nu : {0.5, 3.0, 10.0}) {
    const std::vector<double> xs{2.0, 1.0, 0.5, 0.0};
    const SolutionPath p = integrate_psi1(kExp, -nu * nu, 0.0, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      CAPTURE(nu);
      CAPTURE(xs[i]);
      CHECK(p.sign[i] == 1);
      CHECK(std::abs(p.log_psi[i] - exp_log_psi_oracle(nu, xs[i])) < 1e-10);
      CHECK(std::abs(p.dlog_psi[i] / exp_dlog_psi_oracle(nu, xs[i]) - 1.0) < 1e-10);
    }
  }
  // Ratio psi(0, -9)/psi(0, 0) = K_3(1)/K_0(1).
  const double r = integrate_psi1(kExp, -9.0, 0.0, {0.0}).log_psi[0] - integrate_psi1(kExp, 0.0, 0.0, {0.0}).log_psi[0];
  const double ref = std::log(boost::math::cyl_bessel_k(3.0, 1.0) / boost::math::cyl_bessel_k(0.0, 1.0));
  CHECK(std::abs(r - ref) < 1e-8);
}

TEST_CASE("solver tolerance contract") {
  const SolutionPath fine = integrate_psi1(kCosh, 0.0, 0.0, {0.0});
  CHECK(std::isfinite(fine.dlog_psi[0]));
  CHECK(fine.sign[0] == 1);
  OdeOptions tight;
  tight.rtol = 1e-13;
  const SolutionPath ref = integrate_psi1(kCosh, 0.0, 0.0, {0.0}, tight);
  CHECK(std::abs(fine.log_psi[0] - ref.log_psi[0]) < 1e-9);
  OdeOptions coarse;
  coarse.rtol = 1e-9;
  const SolutionPath c = integrate_psi1(kCosh, 0.0, 0.0, {0.0}, coarse);
  CHECK(std::abs(c.log_psi[0] - ref.log_psi[0]) <= 10.0 * coarse.rtol);
  CHECK(c.steps < fine.steps);
}

TEST_CASE("path satisfies the Riccati equation") {
  const double lambda = -4.0;
  const double h = 1e-3;
  const std::vector<double> xs{1.0 + h, 1.0, 1.0 - h, 0.3 + h, 0.3, 0.3 - h};
  for (const PotentialModel& m : {kExp, kCosh, kHarm}) {
    const SolutionPath p = integrate_psi1(m, lambda, 0.0, xs);
    for (int c : {1, 4}) {
      const double du = (p.dlog_psi[c - 1] - p.dlog_psi[c + 1]) / (2.0 * h);
      const double rhs = m.big_q(xs[c], lambda) - p.dlog_psi[c] * p.dlog_psi[c];
      CAPTURE(m.name());
      CHECK(std::abs(du - rhs) < 1e-5 * (1.0 + std::abs(rhs)));
    }
  }
}

TEST_CASE("Wronskian of psi_1(x) and psi_1(-x) is constant") {
  const double lambda = 1.5;
  const std::vector<double> xs{1.2, 0.5, 0.0, -0.5, -1.2};
  const SolutionPath p = integrate_psi1(kCosh, lambda, 0.0, xs);
  auto wronskian = [&](int i, int j) {
    // W(f, g) at xs[i] with f = psi(x), g = psi(-x): f g' - f' g = -psi(x) psi'(-x) - psi'(x) psi(-x).
    const double a = p.sign[i] * p.dsign[j] * std::exp(p.log_psi[i] + p.log_dpsi[j]);
    const double b = p.dsign[i] * p.sign[j] * std::exp(p.log_dpsi[i] + p.log_psi[j]);
    return -a - b;
  };
  const double w0 = wronskian(2, 2);
  CHECK(std::abs(wronskian(1, 3) / w0 - 1.0) < 1e-9);
  CHECK(std::abs(wronskian(0, 4) / w0 - 1.0) < 1e-9);
  CHECK(std::abs(wronskian(3, 1) / w0 - 1.0) < 1e-9);
}

TEST_CASE("harmonic transmission coefficient against the Gamma formula") {
  auto log_t = [](double lambda) {
    const SolutionPath p = integrate_psi1(kHarm, lambda, 0.0, {0.0});
    return std::log(2.0) + p.log_psi[0] + p.log_dpsi[0];
  };
  const double t0 = log_t(0.0);
  // psi_1(x, 0) = 2^{1/4} U(0, sqrt2 x) and U(0,0) U'(0,0) = -1/sqrt2, so t12(0) = 2 sqrt2.
  CHECK(std::abs(t0 - 1.5 * std::log(2.0)) < 1e-9);
  for (double lambda : {-1.0, -3.0, -7.5, 0.5, 2.0}) {
    const double ref =
        -0.5 * lambda * std::log(2.0) + 0.5 * std::log(std::numbers::pi) - std::lgamma(0.5 * (1.0 - lambda));
    CAPTURE(lambda);
    CHECK(std::abs(log_t(lambda) - t0 - ref) < 1e-8);
  }
}

TEST_CASE("node count through the allowed region") {
  auto zeros = [](double lambda) { return integrate_psi1(kHarm, lambda, 0.0, {0.0}).zeros[0]; };
  CHECK(zeros(2.0) == 0);
  CHECK(zeros(4.0) == 1);
  CHECK(zeros(8.0) == 2);
  CHECK(zeros(12.0) == 3);
}

TEST_CASE("sigma on the grid") {
  const double nu = 10.0;
  const std::vector<double> xs{2.0, 0.0};
  const SolutionPath p = integrate_psi1(kExp, -nu * nu, 0.0, xs);
  const double q = 1.0 + nu * nu;
  const double ref = exp_dlog_psi_oracle(nu, 0.0) + 2.0 / (4.0 * q) + std::sqrt(q);
  CHECK(std::abs(sigma_of_x(kExp, -nu * nu, p, 0.0) - ref) < 1e-8);
  CHECK_THROWS_AS(sigma_of_x(kExp, -nu * nu, p, 0.5), OffGrid);

  // Towards the seed point sigma approaches its asymptotic form.
  const SolutionPath c = integrate_psi1(kCosh, -20.0, 0.0, descending(4.0, 0.0, 5));
  CHECK(std::abs(c.sigma[0] - lg_sigma(kCosh, -20.0, 4.0)) < 1e-9);
  const LGSeed s = lg_seed(kCosh, -20.0, c.x0);
  CHECK(std::abs(s.sigma) < std::abs(c.sigma[0]));
  CHECK(std::abs(c.sigma[0]) < 5e-3);
}

TEST_CASE("successive approximations") {
  const std::vector<double> xs = descending(3.0, 1.0, 9);
  const PicardResult r = picard_psi1(1.0, xs, 5);
  REQUIRE(r.iterates.size() == 6);

  // f_0 is K_{ik}(e^x), returned scaled by e^{e^x}.
  const PicardResult r0 = picard_psi1(1.0, {2.0}, 0);
  const double k2 = specfun::bessel_k(specfun::BesselOrder::imaginary(1.0), std::exp(2.0));
  CHECK(std::abs(r0.iterates[0][0] * std::exp(-std::exp(2.0)) / k2 - 1.0) < 1e-12);

  // Constant of the K and I bounds on the grid, then the n = 1 bound.
  double c = 0.0;
  for (double x : xs) {
    const double s = std::exp(x);
    const specfun::ComplexParts i = specfun::bessel_i_reim_scaled(1.0, s);
    const double i_abs = std::hypot(i.re, i.im * std::exp(-2.0 * s));
    const double kk = std::abs(specfun::bessel_k(specfun::BesselOrder::imaginary(1.0), s)) * std::exp(s);
    c = std::max({c, kk * std::exp(0.5 * x), i_abs * std::exp(0.5 * x)});
  }
  for (std::size_t j = 0; j < xs.size(); ++j)
    CHECK(std::abs(r.iterates[1][j]) <= 2.0 * c * c * c / 3.0 * std::exp(-3.5 * xs[j]));

  // Factorial decay of successive ratios at x = 1 (last grid point).
  const std::size_t last = xs.size() - 1;
  auto ratio = [&](int n) { return std::abs(r.iterates[n + 1][last] / r.iterates[n][last]); };
  CHECK(ratio(3) < ratio(1));

  // |sum - f_0| <= C e^{-e^x} e^{-7x/2} with one C <= 10.
  double fitted = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j)
    fitted = std::max(fitted, std::abs(r.partial[j] - r.iterates[0][j]) * std::exp(3.5 * xs[j]));
  CHECK(fitted <= 10.0);

  // Same function as the shooting construction at lambda = k^2.
  const SolutionPath p = integrate_psi1(kCosh, 1.0, 0.0, xs);
  for (std::size_t j = 0; j < xs.size(); ++j)
    CHECK(std::abs(std::log(r.partial[j]) - std::exp(xs[j]) - p.log_psi[j]) < 1e-7);

  CHECK_THROWS_AS(picard_psi1(1.0, xs, 7), OrderTooHigh);
  CHECK_THROWS_AS(picard_psi1(1.0, {0.2}, 2), DomainError);
}
