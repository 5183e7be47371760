#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace mtrace {

/// Truncated Taylor polynomial of a scalar function around a base point.
///
/// coeff(m) holds f^(m)(base)/m!, for m = 0..order().  All arithmetic is
/// exact truncated power-series arithmetic: products are Cauchy products cut
/// at the common order.  Storage is inline, so a Jet is a cheap value type.
class Jet {
 public:
  static constexpr int kMaxOrder = 24;

  Jet() = default;
  /// Constant function c.
  Jet(double base, int order, double c);
  Jet(double base, int order, std::initializer_list<double> coeffs);
  Jet(double base, int order, std::span<const double> coeffs);

  /// The identity function t -> t at `base`, i.e. coefficients [base, 1, 0...].
  static Jet variable(double base, int order);
  static Jet constant(double base, int order, double c) { return Jet(base, order, c); }

  double base() const { return base_; }
  int order() const { return order_; }
  double value() const { return c_[0]; }
  double coeff(int m) const { return c_[static_cast<std::size_t>(m)]; }
  double& coeff(int m) { return c_[static_cast<std::size_t>(m)]; }
  /// m-th derivative at the base point.
  double derivative_value(int m) const;
  std::span<const double> coeffs() const { return {c_.data(), static_cast<std::size_t>(order_ + 1)}; }

  /// Evaluates the polynomial at base + h.
  double eval(double h) const;

  /// Jet of f' (order reduced by one).  Throws ZeroOrder for order 0.
  Jet derivative() const;
  /// Drops coefficients above `order`.
  Jet truncated(int order) const;

  Jet operator-() const;
  Jet& operator+=(const Jet& b);
  Jet& operator-=(const Jet& b);
  Jet& operator*=(const Jet& b);
  Jet& operator/=(const Jet& b);
  Jet& operator+=(double s);
  Jet& operator-=(double s);
  Jet& operator*=(double s);
  Jet& operator/=(double s);

 private:
  double base_ = 0.0;
  int order_ = 0;
  std::array<double, kMaxOrder + 1> c_{};
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(Jet a, const Jet& b);
Jet operator/(Jet a, const Jet& b);
Jet operator+(Jet a, double s);
Jet operator+(double s, Jet a);
Jet operator-(Jet a, double s);
Jet operator-(double s, const Jet& a);
Jet operator*(Jet a, double s);
Jet operator*(double s, Jet a);
Jet operator/(Jet a, double s);
Jet operator/(double s, const Jet& a);

enum class JetOp { add, sub, mul, div };
Jet jet_arith(const Jet& a, const Jet& b, JetOp op);

Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet sqrt(const Jet& a);
Jet pow(const Jet& a, double r);
Jet sinh(const Jet& a);
Jet cosh(const Jet& a);
Jet tanh(const Jet& a);
Jet square(const Jet& a);

enum class JetFn { exp, sqrt, log, cosh, sinh, tanh, pow };
/// Dispatching form; `r` is only read for JetFn::pow.
Jet jet_elementary(const Jet& a, JetFn fn, double r = 0.0);

}  // namespace mtrace
