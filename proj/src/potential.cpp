#include "mtrace/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mtrace/errors.hpp"
#include "mtrace/quadrature.hpp"
#include "mtrace/specfun.hpp"

namespace mtrace {

PotentialModel PotentialModel::from_name(std::string_view name) {
  if (name == "cosh") return PotentialModel(ModelKind::cosh_line);
  if (name == "exp") return PotentialModel(ModelKind::exp_half_line);
  if (name == "harmonic") return PotentialModel(ModelKind::harmonic_line);
  throw DomainError("unknown model '" + std::string(name) + "'; valid models: cosh, exp, harmonic");
}

std::string PotentialModel::name() const {
  switch (kind_) {
    case ModelKind::cosh_line:
      return "cosh";
    case ModelKind::exp_half_line:
      return "exp";
    case ModelKind::harmonic_line:
      return "harmonic";
  }
  return {};
}

double PotentialModel::q(double x) const {
  switch (kind_) {
    case ModelKind::cosh_line:
      return 2.0 * std::cosh(2.0 * x);
    case ModelKind::exp_half_line:
      return std::exp(2.0 * x);
    case ModelKind::harmonic_line:
      return x * x;
  }
  return 0.0;
}

Jet PotentialModel::q_jet(double x, int order) const {
  const Jet t = Jet::variable(x, order);
  switch (kind_) {
    case ModelKind::cosh_line:
      return 2.0 * cosh(2.0 * t);
    case ModelKind::exp_half_line:
      return exp(2.0 * t);
    case ModelKind::harmonic_line:
      return t * t;
  }
  return t;
}

double PotentialModel::big_q(double x, double lambda) const {
  if (kind_ == ModelKind::cosh_line) {
    const double s = std::sinh(x);
    return 4.0 * s * s + (2.0 - lambda);
  }
  return q(x) - lambda;
}

double PotentialModel::big_q_prime(double x) const {
  switch (kind_) {
    case ModelKind::cosh_line:
      return 4.0 * std::sinh(2.0 * x);
    case ModelKind::exp_half_line:
      return 2.0 * std::exp(2.0 * x);
    case ModelKind::harmonic_line:
      return 2.0 * x;
  }
  return 0.0;
}

double PotentialModel::nu_of_lambda(double lambda) const {
  if (!(lambda < shift())) {
    std::ostringstream os;
    os << "nu is defined only for lambda < " << shift() << ", got " << lambda;
    throw DomainError(os.str());
  }
  return std::sqrt(shift() - lambda);
}

double PotentialModel::x_where_q_reaches(double level) const {
  switch (kind_) {
    case ModelKind::cosh_line:
      return level <= 2.0 ? 0.0 : 0.5 * std::acosh(0.5 * level);
    case ModelKind::exp_half_line:
      return level <= 1.0 ? 0.0 : 0.5 * std::log(level);
    case ModelKind::harmonic_line:
      return level <= 0.0 ? 0.0 : std::sqrt(level);
  }
  return 0.0;
}

Jet q_jet(const PotentialModel& model, double x, int order) { return model.q_jet(x, order); }

namespace {

double exp_closed_form(double nu, double x) {
  // Antiderivative r - nu log(r + nu) + nu s with r = sqrt(e^{2s} + nu^2),
  // arranged so that small x and large nu do not cancel.
  const double r0 = std::sqrt(1.0 + nu * nu);
  const double rx = std::sqrt(std::exp(2.0 * x) + nu * nu);
  const double dr = std::expm1(2.0 * x) / (rx + r0);
  return dr + nu * x - nu * std::log1p(dr / (r0 + nu));
}

double harmonic_closed_form(double nu, double x) {
  if (nu == 0.0) return 0.5 * x * std::abs(x);
  return 0.5 * (x * std::sqrt(x * x + nu * nu) + nu * nu * std::asinh(x / nu));
}

// nu (F - E)(phi, k) + tanh x sqrt(nu^2 + 4 sinh^2 x), sin phi = tanh x, k' = 2/nu.
double cosh_closed_form(double nu, double x) {
  const specfun::Modulus m = specfun::Modulus::from_complement(2.0 / nu);
  const double th = std::tanh(x);
  const double sech = 1.0 / std::cosh(x);
  const double sh = std::sinh(x);
  return nu * specfun::elliptic_f_minus_e(th, sech * sech, m) + th * std::sqrt(nu * nu + 4.0 * sh * sh);
}

}  // namespace

PhaseIntegral::PhaseIntegral(const PotentialModel& model, double nu, PhaseMethod requested)
    : model_(model), nu_(nu), method_(requested) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("phase integral requires nu > 0");
  if (method_ == PhaseMethod::quadrature) return;
  if (model_.kind() == ModelKind::cosh_line && !(nu > 2.0)) {
    method_ = PhaseMethod::quadrature;
    diagnostic_ = "closed form needs nu > 2 (modulus k^2 = 1 - 4/nu^2 in [0,1)); using quadrature";
    return;
  }
  const double samples[] = {-2.0, 0.3, 1.0, 2.5, 4.0};
  for (double x : samples) {
    if (model_.domain() == Domain::half_line && x < 0.0) continue;
    const double cf = closed_form(x);
    const double qd = by_quadrature(x);
    if (!(std::abs(cf - qd) <= 1e-9 * std::max(1.0, std::abs(qd)))) {
      std::ostringstream os;
      os.precision(17);
      os << "closed form disagrees with quadrature at x = " << x << " (" << cf << " vs " << qd
         << "); using quadrature";
      method_ = PhaseMethod::quadrature;
      diagnostic_ = os.str();
      return;
    }
  }
}

double PhaseIntegral::integrand(double x) const { return std::sqrt(model_.big_q(x, model_.lambda_of_nu(nu_))); }

double PhaseIntegral::closed_form(double x) const {
  switch (model_.kind()) {
    case ModelKind::cosh_line:
      return cosh_closed_form(nu_, x);
    case ModelKind::exp_half_line:
      return exp_closed_form(nu_, x);
    case ModelKind::harmonic_line:
      return harmonic_closed_form(nu_, x);
  }
  return 0.0;
}

double PhaseIntegral::by_quadrature(double x) const {
  if (x == 0.0) return 0.0;
  quad::Options opts;
  opts.abs_tol = 1e-12;
  opts.rel_tol = 1e-14;
  auto f = [this](double s) { return integrand(s); };
  // Split at unit scale lengths so each panel sees a mildly varying integrand.
  const double sign = x < 0.0 ? -1.0 : 1.0;
  const double ax = std::abs(x);
  double total = 0.0;
  for (double a = 0.0; a < ax; a += 1.0) {
    const double b = std::min(ax, a + 1.0);
    total += quad::integrate(f, sign * a, sign * b, opts).value;
  }
  return total;
}

double PhaseIntegral::value(double x) const {
  return method_ == PhaseMethod::closed_form ? closed_form(x) : by_quadrature(x);
}

double phase_integral(const PotentialModel& model, double nu, double x) {
  return PhaseIntegral(model, nu).value(x);
}

double phase_integral_limit(const PotentialModel& model, double nu) {
  if (!(nu > 0.0)) throw DomainError("phase_integral_limit requires nu > 0");
  switch (model.kind()) {
    case ModelKind::cosh_line: {
      if (!(nu > 2.0)) throw ModulusOutOfRange("closed form of the cosh phase limit needs nu > 2");
      return nu * specfun::elliptic_k_minus_e(specfun::Modulus::from_complement(2.0 / nu));
    }
    case ModelKind::exp_half_line: {
      const double r = std::sqrt(nu * nu + 1.0);
      return -r + nu * std::log(nu + r);
    }
    case ModelKind::harmonic_line:
      break;
  }
  throw DomainError("the harmonic phase integral has no finite part relative to e^x");
}

double phase_integral_limit_quadrature(const PotentialModel& model, double nu) {
  if (model.kind() == ModelKind::harmonic_line) {
    throw DomainError("the harmonic phase integral has no finite part relative to e^x");
  }
  // Phi(x) - e^x = -1 + int_0^x (sqrt(Q) - e^s) ds, with the difference
  // written as (Q - e^{2s}) / (sqrt(Q) + e^s).
  const double lambda = model.lambda_of_nu(nu);
  auto f = [&](double s) {
    const double es = std::exp(s);
    const double num = model.kind() == ModelKind::cosh_line ? nu * nu - 2.0 + std::exp(-2.0 * s) : nu * nu;
    return num / (std::sqrt(model.big_q(s, lambda)) + es);
  };
  quad::Options opts;
  opts.abs_tol = 1e-13;
  opts.rel_tol = 1e-14;
  // The integrand decays like e^{-s}; beyond s = 40 + log(1 + nu^2) it is negligible.
  const double s_max = 40.0 + std::log1p(nu * nu);
  return -1.0 + quad::integrate_split(f, 0.0, s_max, {1.0, 3.0, 8.0, 16.0}, opts).value;
}

}  // namespace mtrace
