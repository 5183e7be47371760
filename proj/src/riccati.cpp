#include "mtrace/riccati.hpp"

#include <cmath>
#include <sstream>

#include "mtrace/errors.hpp"

namespace mtrace {

namespace {

void require_terms(int n, int max_n, const char* who) {
  if (n < 1 || n > max_n) {
    std::ostringstream os;
    os << who << " supports 1 <= N <= " << max_n << ", got " << n;
    throw OrderTooHigh(os.str());
  }
}

int jet_order(int needed) {
  if (needed > Jet::kMaxOrder) {
    throw OrderTooHigh("recursion needs jets of order " + std::to_string(needed) + " (max " +
                       std::to_string(Jet::kMaxOrder) + ")");
  }
  return needed;
}

double binomial(double a, int j) {
  double r = 1.0;
  for (int i = 0; i < j; ++i) r *= (a - i) / (i + 1);
  return r;
}

Jet power(const Jet& x, int n) {
  Jet r(x.base(), x.order(), 1.0);
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// sum_{k=1}^{m-1} c_k c_{m-k}, with c stored 0-based (c[0] is c_1).
Jet convolution(const std::vector<Jet>& c, int m, const Jet& zero) {
  Jet s = zero;
  for (int k = 1; k <= m - 1; ++k) s += c[static_cast<std::size_t>(k - 1)] * c[static_cast<std::size_t>(m - k - 1)];
  return s;
}

}  // namespace

NuSeries::NuSeries(int truncation, Generator generator) : n_(truncation), gen_(std::move(generator)) {}

NuSeries NuSeries::zero() {
  return NuSeries(0, [](double, int, int) { return std::vector<Jet>{}; });
}

std::vector<Jet> NuSeries::jets(double point, int order, int count) const {
  if (count < 0 || count > n_) count = n_;
  if (count == 0) return {};
  return gen_(point, order, count);
}

Jet NuSeries::coeff_jet(int n, double point, int order) const {
  if (n < 1 || n > n_) throw DomainError("series coefficient index out of range");
  return jets(point, order, n)[static_cast<std::size_t>(n - 1)];
}

double NuSeries::coeff(int n, double point) const { return coeff_jet(n, point, 0).value(); }

std::vector<double> NuSeries::coeffs(double point) const {
  std::vector<double> out;
  for (const Jet& j : jets(point, 0)) out.push_back(j.value());
  return out;
}

double NuSeries::partial_sum(double nu, double point, int terms) const {
  const std::vector<Jet> c = jets(point, 0, terms);
  double s = 0.0;
  for (std::size_t n = c.size(); n-- > 0;) s = (s + c[n].value()) / nu;
  return s;
}

double NuSeries::partial_sum_derivative(double nu, double point, int terms) const {
  const std::vector<Jet> c = jets(point, 1, terms);
  double s = 0.0;
  for (std::size_t n = c.size(); n-- > 0;) s = (s + c[n].coeff(1)) / nu;
  return s;
}

RiccatiCoefficients RiccatiForm::at(double nu, double point) const {
  switch (kind_) {
    case Kind::x_form: {
      const double lambda = model_.lambda_of_nu(nu);
      const double q = model_.big_q(point, lambda);
      const double q1 = model_.big_q_prime(point);
      const double q2 = 2.0 * model_.q_jet(point, 2).coeff(2);
      const double r = q1 / q;
      return {1.0, 2.0 * std::sqrt(q) + 0.5 * r, 0.25 * q2 / q - 5.0 / 16.0 * r * r};
    }
    case Kind::exp_t_form: {
      // g = e^{2t} / (1 + e^{2t}); the source term is g (1 - g) - g^2 / 4.
      const double g = 1.0 / (1.0 + std::exp(-2.0 * point));
      const double root = std::sqrt(1.0 + std::exp(2.0 * point));
      return {1.0, 2.0 * nu * root + g, g * (1.0 - g) - 0.25 * g * g};
    }
    case Kind::cosh_y_form: {
      const double t = std::tanh(point);
      const double s = 1.0 / std::cosh(point);
      const double w = std::sqrt(t * t + 4.0 * s * s / (nu * nu));
      const double v = t * t - 1.25 * t * t * t * t + s * s * (2.0 - 5.0 * t * t) / (nu * nu);
      return {w, 2.0 * nu * std::cosh(point) + t * w, v};
    }
  }
  return {};
}

double riccati_defect(const NuSeries& series, const RiccatiForm& form, double nu, double point) {
  const RiccatiCoefficients c = form.at(nu, point);
  const double s = series.partial_sum(nu, point);
  const double ds = series.partial_sum_derivative(nu, point);
  return std::abs(c.weight * ds + s * s - c.a * s - c.v);
}

double riccati_residual(const NuSeries& series, const RiccatiForm& form, double nu, double point) {
  return riccati_defect(series, form, nu, point) / std::abs(form.at(nu, point).a);
}

double exp_c1_closed_form(double t) {
  const double e2 = std::exp(2.0 * t);
  return (e2 * e2 - 4.0 * e2) / (8.0 * std::pow(1.0 + e2, 2.5));
}

NuSeries exp_sigma_series(int n_terms) {
  require_terms(n_terms, 10, "exp_sigma_series");
  auto gen = [](double t, int order, int count) {
    const int big_j = jet_order(order + count - 1);
    const Jet s = Jet::variable(t, big_j);
    const Jet e2 = exp(2.0 * s);
    const Jet one_plus = 1.0 + e2;
    const Jet root = sqrt(one_plus);
    const Jet g = e2 / one_plus;
    std::vector<Jet> c;
    c.reserve(static_cast<std::size_t>(count));
    c.push_back((e2 * e2 - 4.0 * e2) / (8.0 * pow(one_plus, 2.5)));
    const Jet zero(t, big_j, 0.0);
    for (int n = 1; n < count; ++n) {
      const Jet& cn = c.back();
      Jet rhs = cn.derivative() - g * cn + convolution(c, n, zero);
      c.push_back(rhs / (2.0 * root));
    }
    return c;
  };
  return NuSeries(n_terms, gen);
}

namespace {

void check_parity(const NuSeries& series, double delta) {
  for (double y : {0.6, 1.4, 2.7}) {
    if (y < delta) continue;
    const std::vector<double> plus = series.coeffs(y);
    const std::vector<double> minus = series.coeffs(-y);
    for (std::size_t i = 0; i < plus.size(); ++i) {
      const int n = static_cast<int>(i) + 1;
      const double expected = (n % 2 == 1 ? 1.0 : -1.0) * plus[i];
      if (std::abs(minus[i] - expected) > 1e-10 * std::max(1e-12, std::abs(plus[i]))) {
        std::ostringstream os;
        os.precision(17);
        os << "tau_" << n << "(" << -y << ") = " << minus[i] << " but the parity law requires " << expected;
        throw ParityViolation(os.str());
      }
    }
  }
}

}  // namespace

NuSeries cosh_tau_series(int n_terms, const CoshSeriesOptions& opts) {
  require_terms(n_terms, 8, "cosh_tau_series");
  if (opts.mode == WeightMode::exact && !(opts.nu > 0.0)) throw DomainError("exact weight mode needs nu > 0");
  const CoshSeriesOptions o = opts;
  auto gen = [o](double y, int order, int count) {
    if (o.mode == WeightMode::formal && count >= 2 && std::abs(y) < o.delta) {
      std::ostringstream os;
      os << "formal tau_n, n >= 2, is singular at y = 0; |y| = " << std::abs(y) << " < delta = " << o.delta;
      throw EvaluationAtSingularPoint(os.str());
    }
    const int big_j = jet_order(order + count - 1);
    const Jet v = Jet::variable(y, big_j);
    const Jet th = tanh(v);
    const Jet ch = cosh(v);
    const Jet sech2 = 1.0 / (ch * ch);
    const Jet th2 = th * th;
    const Jet two_cosh = 2.0 * ch;
    const Jet v0 = th2 - 1.25 * th2 * th2;
    const Jet v2 = sech2 * (2.0 - 5.0 * th2);
    const Jet zero(y, big_j, 0.0);
    std::vector<Jet> tau;
    tau.reserve(static_cast<std::size_t>(count));
    if (o.mode == WeightMode::exact) {
      const double inv_nu2 = 1.0 / (o.nu * o.nu);
      const Jet w = sqrt(th2 + 4.0 * inv_nu2 * sech2);
      tau.push_back(-(v0 + inv_nu2 * v2) / two_cosh);
      for (int n = 1; n < count; ++n) {
        const Jet& tn = tau.back();
        tau.push_back((w * (tn.derivative() - th * tn) + convolution(tau, n, zero)) / two_cosh);
      }
      return tau;
    }
    // Formal weight: w = sum_j 4^j binom(1/2, j) sech^{2j} |tanh|^{1-2j} nu^{-2j}.
    if (count >= 2 && y == 0.0) throw EvaluationAtSingularPoint("formal weight needs y != 0");
    const Jet abs_th = y < 0.0 ? -th : th;
    std::vector<Jet> w;
    for (int j = 0; 2 * j <= count; ++j) {
      w.push_back(std::pow(4.0, j) * binomial(0.5, j) * power(sech2, j) * abs_th / power(th2, j));
    }
    tau.push_back(-v0 / two_cosh);
    for (int m = 1; m < count; ++m) {
      Jet rhs = convolution(tau, m, zero);
      for (int j = 0; m - 2 * j >= 1; ++j) {
        const Jet& t = tau[static_cast<std::size_t>(m - 2 * j - 1)];
        rhs += w[static_cast<std::size_t>(j)] * (t.derivative() - th * t);
      }
      if (m == 2) rhs -= v2;
      tau.push_back(rhs / two_cosh);
    }
    return tau;
  };
  NuSeries series(n_terms, gen);
  check_parity(series, opts.delta);
  return series;
}

NuSeries generic_sigma_series(const PotentialModel& model, int n_terms) {
  require_terms(n_terms, 10, "generic_sigma_series");
  auto gen = [model](double x, int order, int count) {
    const int big_j = jet_order(order + count + 1);
    const Jet p = model.q_jet(x, big_j) - model.shift();
    const Jet p1 = p.derivative();
    const Jet p2 = p1.derivative();
    const Jet zero(x, big_j, 0.0);
    const int jmax = count / 2 + 1;
    std::vector<Jet> a, b, v;
    Jet minus_p_pow(x, big_j, 1.0);  // (-p)^j
    for (int j = 0; j <= jmax; ++j) {
      a.push_back(binomial(0.5, j) * power(p, j));
      b.push_back(0.5 * p1 * minus_p_pow);
      Jet vj = 0.25 * p2 * minus_p_pow;
      if (j >= 1) vj -= (5.0 / 16.0) * static_cast<double>(j) * p1 * p1 * power(-p, j - 1);
      v.push_back(vj);
      minus_p_pow *= -p;
    }
    std::vector<Jet> c;
    c.reserve(static_cast<std::size_t>(count));
    auto cc = [&](int n) -> Jet { return n >= 1 ? c[static_cast<std::size_t>(n - 1)] : zero; };
    c.push_back(zero);  // c_1 = 0
    for (int m = 1; m < count; ++m) {
      Jet rhs = cc(m).derivative() + convolution(c, m, zero);
      for (int j = 1; m + 1 - 2 * j >= 1; ++j) rhs -= 2.0 * a[static_cast<std::size_t>(j)] * cc(m + 1 - 2 * j);
      for (int j = 0; m - 2 - 2 * j >= 1; ++j) rhs -= b[static_cast<std::size_t>(j)] * cc(m - 2 - 2 * j);
      if (m >= 2 && m % 2 == 0) rhs -= v[static_cast<std::size_t>((m - 2) / 2)];
      c.push_back(0.5 * rhs);
    }
    return c;
  };
  return NuSeries(n_terms, gen);
}

std::vector<double> generic_sigma_series(const PotentialModel& model, int n_terms, double x) {
  return generic_sigma_series(model, n_terms).coeffs(x);
}

}  // namespace mtrace
