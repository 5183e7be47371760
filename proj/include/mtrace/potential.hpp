#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mtrace/jet.hpp"

namespace mtrace {

enum class ModelKind { cosh_line, exp_half_line, harmonic_line };
enum class Domain { full_line, half_line };

/// One of the three potentials q(x) together with its spectral map
/// lambda = shift - nu^2.
class PotentialModel {
 public:
  explicit PotentialModel(ModelKind kind) : kind_(kind) {}

  /// Parses "cosh", "exp" or "harmonic"; throws DomainError otherwise.
  static PotentialModel from_name(std::string_view name);
  static std::vector<std::string> names() { return {"cosh", "exp", "harmonic"}; }

  ModelKind kind() const { return kind_; }
  std::string name() const;
  Domain domain() const { return kind_ == ModelKind::exp_half_line ? Domain::half_line : Domain::full_line; }
  bool even() const { return domain() == Domain::full_line; }

  double q(double x) const;
  Jet q_jet(double x, int order) const;
  /// Q(x, lambda) = q(x) - lambda, computed without cancellation near the
  /// minimum of q.
  double big_q(double x, double lambda) const;
  /// d/dx Q.
  double big_q_prime(double x) const;

  /// 2 for the cosh model, 0 otherwise.
  double shift() const { return kind_ == ModelKind::cosh_line ? 2.0 : 0.0; }
  double lambda_of_nu(double nu) const { return shift() - nu * nu; }
  /// Requires lambda < shift.
  double nu_of_lambda(double lambda) const;

  /// Smallest x >= 0 with q(x) >= level.
  double x_where_q_reaches(double level) const;

 private:
  ModelKind kind_;
};

Jet q_jet(const PotentialModel& model, double x, int order);

enum class PhaseMethod { closed_form, quadrature };

/// Phi(x) = int_0^x sqrt(q(s) - lambda) ds at lambda = shift - nu^2.
///
/// The closed form (elementary for exp and harmonic, elliptic for cosh) is
/// checked against adaptive quadrature at construction; if the check fails,
/// or no closed form exists (cosh with nu <= 2), the object evaluates by
/// quadrature and diagnostic() says why.
class PhaseIntegral {
 public:
  PhaseIntegral(const PotentialModel& model, double nu, PhaseMethod requested = PhaseMethod::closed_form);

  double operator()(double x) const { return value(x); }
  double value(double x) const;
  double closed_form(double x) const;
  double by_quadrature(double x) const;
  /// sqrt(q(x) - lambda).
  double integrand(double x) const;

  PhaseMethod method() const { return method_; }
  const std::string& diagnostic() const { return diagnostic_; }
  double nu() const { return nu_; }
  const PotentialModel& model() const { return model_; }

 private:
  PotentialModel model_;
  double nu_;
  PhaseMethod method_;
  std::string diagnostic_;
};

double phase_integral(const PotentialModel& model, double nu, double x);

/// lim_{x->inf} (Phi(x) - e^x) for the exp and cosh models:
/// nu (K(k) - E(k)) for cosh (nu > 2), -sqrt(nu^2+1) + nu log(nu + sqrt(nu^2+1)) for exp.
/// Throws DomainError for the harmonic model, whose phase has no such limit.
double phase_integral_limit(const PotentialModel& model, double nu);

/// The same limit by quadrature of sqrt(Q) - e^x; valid for every nu > 0.
double phase_integral_limit_quadrature(const PotentialModel& model, double nu);

}  // namespace mtrace
