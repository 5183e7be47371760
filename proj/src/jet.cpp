#include "mtrace/jet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtrace/errors.hpp"

namespace mtrace {

namespace {

void check_order(int order) {
  if (order < 0 || order > Jet::kMaxOrder) {
    throw OrderTooHigh("jet order " + std::to_string(order) + " outside [0, " +
                       std::to_string(Jet::kMaxOrder) + "]");
  }
}

void check_compatible(const Jet& a, const Jet& b) {
  if (a.base() != b.base()) {
    throw BasePointMismatch("jets expanded at " + std::to_string(a.base()) + " and " +
                            std::to_string(b.base()));
  }
}

double factorial(int m) {
  double f = 1.0;
  for (int j = 2; j <= m; ++j) f *= j;
  return f;
}

}  // namespace

Jet::Jet(double base, int order, double c) : base_(base), order_(order) {
  check_order(order);
  c_[0] = c;
}

Jet::Jet(double base, int order, std::initializer_list<double> coeffs)
    : Jet(base, order, std::span<const double>(coeffs.begin(), coeffs.size())) {}

Jet::Jet(double base, int order, std::span<const double> coeffs) : base_(base), order_(order) {
  check_order(order);
  const std::size_t n = std::min<std::size_t>(coeffs.size(), static_cast<std::size_t>(order) + 1);
  std::copy_n(coeffs.begin(), n, c_.begin());
}

Jet Jet::variable(double base, int order) {
  Jet j(base, order, base);
  if (order >= 1) j.c_[1] = 1.0;
  return j;
}

double Jet::derivative_value(int m) const { return c_[static_cast<std::size_t>(m)] * factorial(m); }

double Jet::eval(double h) const {
  double s = 0.0;
  for (int m = order_; m >= 0; --m) s = s * h + c_[static_cast<std::size_t>(m)];
  return s;
}

Jet Jet::derivative() const {
  if (order_ == 0) throw ZeroOrder("cannot differentiate an order-0 jet");
  Jet d(base_, order_ - 1, 0.0);
  for (int m = 0; m < order_; ++m) d.c_[m] = (m + 1) * c_[m + 1];
  return d;
}

Jet Jet::truncated(int order) const {
  check_order(order);
  Jet t(base_, std::min(order, order_), 0.0);
  for (int m = 0; m <= t.order_; ++m) t.c_[m] = c_[m];
  return t;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (int m = 0; m <= order_; ++m) r.c_[m] = -r.c_[m];
  return r;
}

Jet& Jet::operator+=(const Jet& b) {
  check_compatible(*this, b);
  order_ = std::min(order_, b.order_);
  for (int m = 0; m <= order_; ++m) c_[m] += b.c_[m];
  for (int m = order_ + 1; m <= kMaxOrder; ++m) c_[m] = 0.0;
  return *this;
}

Jet& Jet::operator-=(const Jet& b) {
  check_compatible(*this, b);
  order_ = std::min(order_, b.order_);
  for (int m = 0; m <= order_; ++m) c_[m] -= b.c_[m];
  for (int m = order_ + 1; m <= kMaxOrder; ++m) c_[m] = 0.0;
  return *this;
}

Jet& Jet::operator*=(const Jet& b) {
  check_compatible(*this, b);
  const int n = std::min(order_, b.order_);
  std::array<double, kMaxOrder + 1> r{};
  for (int m = 0; m <= n; ++m) {
    double s = 0.0;
    for (int j = 0; j <= m; ++j) s += c_[j] * b.c_[m - j];
    r[m] = s;
  }
  c_ = r;
  order_ = n;
  return *this;
}

Jet& Jet::operator/=(const Jet& b) {
  check_compatible(*this, b);
  if (b.c_[0] == 0.0) throw DivisionBySingularJet("divisor has zero constant term");
  const int n = std::min(order_, b.order_);
  std::array<double, kMaxOrder + 1> r{};
  for (int m = 0; m <= n; ++m) {
    double s = c_[m];
    for (int j = 1; j <= m; ++j) s -= b.c_[j] * r[m - j];
    r[m] = s / b.c_[0];
  }
  c_ = r;
  order_ = n;
  return *this;
}

Jet& Jet::operator+=(double s) {
  c_[0] += s;
  return *this;
}
Jet& Jet::operator-=(double s) {
  c_[0] -= s;
  return *this;
}
Jet& Jet::operator*=(double s) {
  for (int m = 0; m <= order_; ++m) c_[m] *= s;
  return *this;
}
Jet& Jet::operator/=(double s) {
  for (int m = 0; m <= order_; ++m) c_[m] /= s;
  return *this;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator*(Jet a, const Jet& b) { return a *= b; }
Jet operator/(Jet a, const Jet& b) { return a /= b; }
Jet operator+(Jet a, double s) { return a += s; }
Jet operator+(double s, Jet a) { return a += s; }
Jet operator-(Jet a, double s) { return a -= s; }
Jet operator-(double s, const Jet& a) { return (-a) += s; }
Jet operator*(Jet a, double s) { return a *= s; }
Jet operator*(double s, Jet a) { return a *= s; }
Jet operator/(Jet a, double s) { return a /= s; }
Jet operator/(double s, const Jet& a) { return Jet(a.base(), a.order(), s) / a; }

Jet jet_arith(const Jet& a, const Jet& b, JetOp op) {
  switch (op) {
    case JetOp::add: return a + b;
    case JetOp::sub: return a - b;
    case JetOp::mul: return a * b;
    case JetOp::div: return a / b;
  }
  return a;
}

// The elementary functions below use the standard recurrences obtained from
// b' = F(a) a' with F known in terms of b.

Jet exp(const Jet& a) {
  const int n = a.order();
  Jet b(a.base(), n, std::exp(a.coeff(0)));
  for (int m = 1; m <= n; ++m) {
    double s = 0.0;
    for (int j = 1; j <= m; ++j) s += j * a.coeff(j) * b.coeff(m - j);
    b.coeff(m) = s / m;
  }
  return b;
}

Jet log(const Jet& a) {
  const double a0 = a.coeff(0);
  if (!(a0 > 0.0)) throw SingularComposition("log of a jet with non-positive value");
  const int n = a.order();
  Jet b(a.base(), n, std::log(a0));
  for (int m = 1; m <= n; ++m) {
    double s = 0.0;
    for (int j = 1; j < m; ++j) s += j * b.coeff(j) * a.coeff(m - j);
    b.coeff(m) = (a.coeff(m) - s / m) / a0;
  }
  return b;
}

Jet pow(const Jet& a, double r) {
  const double a0 = a.coeff(0);
  if (!(a0 > 0.0)) throw SingularComposition("pow of a jet with non-positive value");
  const int n = a.order();
  Jet b(a.base(), n, std::pow(a0, r));
  for (int m = 1; m <= n; ++m) {
    double s = 0.0;
    for (int j = 1; j <= m; ++j) s += ((r + 1.0) * j - m) * a.coeff(j) * b.coeff(m - j);
    b.coeff(m) = s / (m * a0);
  }
  return b;
}

Jet sqrt(const Jet& a) {
  const double a0 = a.coeff(0);
  if (!(a0 > 0.0)) throw SingularComposition("sqrt of a jet with non-positive value");
  const int n = a.order();
  Jet b(a.base(), n, std::sqrt(a0));
  // b*b = a
  for (int m = 1; m <= n; ++m) {
    double s = a.coeff(m);
    for (int j = 1; j < m; ++j) s -= b.coeff(j) * b.coeff(m - j);
    b.coeff(m) = s / (2.0 * b.coeff(0));
  }
  return b;
}

namespace {

void sinh_cosh(const Jet& a, Jet& s, Jet& c) {
  const int n = a.order();
  s = Jet(a.base(), n, std::sinh(a.coeff(0)));
  c = Jet(a.base(), n, std::cosh(a.coeff(0)));
  for (int m = 1; m <= n; ++m) {
    double ss = 0.0, cc = 0.0;
    for (int j = 1; j <= m; ++j) {
      ss += j * a.coeff(j) * c.coeff(m - j);
      cc += j * a.coeff(j) * s.coeff(m - j);
    }
    s.coeff(m) = ss / m;
    c.coeff(m) = cc / m;
  }
}

}  // namespace

Jet sinh(const Jet& a) {
  Jet s, c;
  sinh_cosh(a, s, c);
  return s;
}

Jet cosh(const Jet& a) {
  Jet s, c;
  sinh_cosh(a, s, c);
  return c;
}

Jet tanh(const Jet& a) {
  // t' = (1 - t^2) a'
  const int n = a.order();
  Jet t(a.base(), n, std::tanh(a.coeff(0)));
  std::array<double, Jet::kMaxOrder + 1> w{};  // coefficients of 1 - t^2
  w[0] = 1.0 - t.coeff(0) * t.coeff(0);
  for (int m = 1; m <= n; ++m) {
    double s = 0.0;
    for (int j = 1; j <= m; ++j) s += j * a.coeff(j) * w[m - j];
    t.coeff(m) = s / m;
    double tt = 0.0;
    for (int j = 0; j <= m; ++j) tt += t.coeff(j) * t.coeff(m - j);
    w[m] = -tt;
  }
  return t;
}

Jet square(const Jet& a) { return a * a; }

Jet jet_elementary(const Jet& a, JetFn fn, double r) {
  switch (fn) {
    case JetFn::exp: return exp(a);
    case JetFn::sqrt: return sqrt(a);
    case JetFn::log: return log(a);
    case JetFn::cosh: return cosh(a);
    case JetFn::sinh: return sinh(a);
    case JetFn::tanh: return tanh(a);
    case JetFn::pow: return pow(a, r);
  }
  return a;
}

}  // namespace mtrace
