#pragma once

#include <functional>
#include <vector>

#include "mtrace/jet.hpp"
#include "mtrace/potential.hpp"

namespace mtrace {

/// Formal series sum_{n=1}^N coeff_n(point) / nu^n.  Coefficients are
/// produced as jets so that derivatives come for free.
class NuSeries {
 public:
  /// Returns the jets of coeff_1..coeff_count at `point`, each of order >= `order`.
  using Generator = std::function<std::vector<Jet>(double point, int order, int count)>;

  NuSeries() = default;
  NuSeries(int truncation, Generator generator);

  /// The empty series (every coefficient zero).
  static NuSeries zero();

  int truncation() const { return n_; }
  std::vector<Jet> jets(double point, int order, int count = -1) const;
  Jet coeff_jet(int n, double point, int order) const;
  double coeff(int n, double point) const;
  std::vector<double> coeffs(double point) const;

  /// sum_{n<=terms} coeff_n(point) nu^-n and its derivative in the point;
  /// terms < 0 means all.
  double partial_sum(double nu, double point, int terms = -1) const;
  double partial_sum_derivative(double nu, double point, int terms = -1) const;

 private:
  int n_ = 0;
  Generator gen_;
};

/// weight * s' = -s^2 + a s + v at a point.
struct RiccatiCoefficients {
  double weight = 1.0;
  double a = 0.0;
  double v = 0.0;
};

/// One of the Riccati equations satisfied by the LG correction:
///  * x_form: s' = -s^2 + (2 sqrt(Q) + Q'/2Q) s + Q''/4Q - (5/16)(Q'/Q)^2 at lambda = shift - nu^2;
///  * exp_t_form: the exp model after t = x - log nu;
///  * cosh_y_form: the cosh model after sinh x = (nu/2) sinh y, with weight
///    w = sqrt(tanh^2 y + 4 nu^-2 sech^2 y).
class RiccatiForm {
 public:
  enum class Kind { x_form, exp_t_form, cosh_y_form };

  static RiccatiForm x_form(const PotentialModel& model) { return {Kind::x_form, model}; }
  static RiccatiForm exp_t_form() { return {Kind::exp_t_form, PotentialModel(ModelKind::exp_half_line)}; }
  static RiccatiForm cosh_y_form() { return {Kind::cosh_y_form, PotentialModel(ModelKind::cosh_line)}; }

  Kind kind() const { return kind_; }
  const PotentialModel& model() const { return model_; }
  RiccatiCoefficients at(double nu, double point) const;

 private:
  RiccatiForm(Kind kind, PotentialModel model) : kind_(kind), model_(model) {}
  Kind kind_;
  PotentialModel model_;
};

/// |weight s' + s^2 - a s - v| with s the partial sum of `series` at nu.
double riccati_defect(const NuSeries& series, const RiccatiForm& form, double nu, double point);
/// riccati_defect divided by |a| (~ 2 nu): the relative size of the equation
/// error compared with its dominant term.  A series truncated after N terms
/// leaves a residual of order nu^-(N+1).
double riccati_residual(const NuSeries& series, const RiccatiForm& form, double nu, double point);

/// Coefficients c_n(t) of the exp model in t = x - log nu (1 <= N <= 10).
NuSeries exp_sigma_series(int n_terms);

/// Closed form of c_1(t) = (e^{4t} - 4 e^{2t}) / (8 (1 + e^{2t})^{5/2}).
double exp_c1_closed_form(double t);

enum class WeightMode { formal, exact };

struct CoshSeriesOptions {
  WeightMode mode = WeightMode::formal;
  /// Used only in exact mode.
  double nu = 0.0;
  /// Formal coefficients with n >= 2 are not evaluated for |y| < delta.
  double delta = 1e-3;
};

/// Coefficients tau_n(y) of the cosh model in the y variable (1 <= N <= 8).
/// tau_1 = -(tanh^2 y - (5/4) tanh^4 y) / (2 cosh y).  In formal mode the
/// weight is expanded in powers of nu^-2 (the expansion is singular at y = 0);
/// in exact mode it is kept at the given nu and the tau_n depend on nu.
/// Construction verifies the parity law tau_n(-y) = (-1)^(n+1) tau_n(y) and
/// throws ParityViolation if a coefficient breaks it.
NuSeries cosh_tau_series(int n_terms, const CoshSeriesOptions& opts = {});

/// Pointwise coefficients c_n(x) of sigma for fixed x, from
/// sqrt(Q) = nu sqrt(1 + (q - shift)/nu^2) expanded in nu^-2 (1 <= N <= 10).
NuSeries generic_sigma_series(const PotentialModel& model, int n_terms);
std::vector<double> generic_sigma_series(const PotentialModel& model, int n_terms, double x);

}  // namespace mtrace
