#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "mtrace/errors.hpp"
#include "mtrace/quadrature.hpp"
#include "mtrace/specfun.hpp"

namespace mtrace::specfun {

namespace {

using std::numbers::pi;

// Integrand magnitudes below exp(-kCut) relative to the peak are dropped
// (1e-18 of the peak).
constexpr double kCut = 41.5;

void require_positive(double y, const char* who) {
  if (!(y > 0.0)) {
    std::ostringstream os;
    os << who << " requires y > 0, got " << y;
    throw NonPositiveArgument(os.str());
  }
}

// Trapezoidal sum h * (g(0)/2 + sum_{j>=1} g(jh)) of an even analytic
// integrand, refined by halving h until two successive sums agree.  `term`
// returns g(t) * exp(-shift); `log_bound` returns an upper bound of
// log|g(t)| - shift, used to truncate the sum.
template <class Term, class LogBound>
double even_trapezoid(Term term, LogBound log_bound, double t_peak, double h0) {
  auto tail_sum = [&](double h, int start, int stride) {
    double s = 0.0;
    double abs_s = 0.0;
    for (int j = start;; j += stride) {
      const double t = j * h;
      const double g = term(t);
      s += g;
      abs_s += std::abs(g);
      if (t > t_peak && log_bound(t) < -kCut) break;
      if (j > 4000000) throw AccuracyLoss("Bessel trapezoid did not terminate");
    }
    return std::pair{s, abs_s};
  };
  double h = h0;
  auto [s, abs_s] = tail_sum(h, 1, 1);
  s += 0.5 * term(0.0);
  double prev = h * s;
  for (int level = 0; level < 30; ++level) {
    h *= 0.5;
    // Odd multiples of the new step are the only new nodes.
    auto [odd, abs_odd] = tail_sum(h, 1, 2);
    s += odd;
    abs_s += abs_odd;
    const double cur = h * s;
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * h * abs_s;
    if (level >= 1 && std::abs(cur - prev) <= std::max(2e-15 * std::abs(cur), noise)) return cur;
    prev = cur;
  }
  throw AccuracyLoss("Bessel trapezoid failed to converge");
}

LogValue to_log_value(double scaled, double shift) {
  if (scaled == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
  return {shift + std::log(std::abs(scaled)), scaled > 0.0 ? 1 : -1};
}

LogValue bessel_k_real_order(double nu, double y) {
  nu = std::abs(nu);
  // Peak of -y cosh t + nu t.
  const double t_peak = std::asinh(nu / y);
  const double shift = -y * std::cosh(t_peak) + nu * t_peak;
  const double width = 1.0 / std::sqrt(std::hypot(y, nu));
  auto term = [&](double t) {
    const double c = -y * std::cosh(t);
    return 0.5 * (std::exp(c + nu * t - shift) + std::exp(c - nu * t - shift));
  };
  auto bound = [&](double t) { return -y * std::cosh(t) + nu * t - shift; };
  const double sum = even_trapezoid(term, bound, t_peak, std::min(0.25, 0.5 * width));
  return to_log_value(sum, shift);
}

LogValue bessel_k_imaginary_order(double k, double y, double alpha) {
  k = std::abs(k);
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  // Integrand Re exp(-y cosh(t + i alpha) + i k (t + i alpha)).
  const double shift = -y * ca - k * alpha;
  const double width = 1.0 / std::sqrt(std::max(y * ca, 1e-300));
  const double strip = alpha > 0.0 ? std::min(alpha, 0.5 * pi - alpha) : 0.5 * pi;
  auto term = [&](double t) {
    const double re = -y * std::cosh(t) * ca - k * alpha - shift;
    const double im = -y * std::sinh(t) * sa + k * t;
    return std::exp(re) * std::cos(im);
  };
  auto bound = [&](double t) { return -y * ca * (std::cosh(t) - 1.0); };
  const double h0 = std::min({0.25, 0.5 * width, 0.25 * strip});
  const double sum = even_trapezoid(term, bound, 0.0, h0);
  return to_log_value(sum, shift);
}

// Contour height that passes near the saddle of exp(-y cosh t + i k t).
double saddle_height(double k, double y) {
  k = std::abs(k);
  if (k == 0.0) return 0.0;
  const double delta = std::min(0.25 * pi, 1.5 / k);
  return std::min(std::asin(std::min(1.0, k / y)), 0.5 * pi - delta);
}

}  // namespace

double LogValue::value() const {
  if (sign == 0) return 0.0;
  return sign * std::exp(log_abs);
}

LogValue bessel_k_log(BesselOrder order, double y) {
  require_positive(y, "bessel_k");
  if (!std::isfinite(order.value)) throw DomainError("bessel_k: order must be finite");
  if (order.kind == OrderKind::real) return bessel_k_real_order(order.value, y);
  return bessel_k_imaginary_order(order.value, y, saddle_height(order.value, y));
}

double bessel_k(BesselOrder order, double y) {
  const LogValue lv = bessel_k_log(order, y);
  const double v = lv.value();
  if (!std::isfinite(v) || (v == 0.0 && lv.sign != 0)) {
    std::ostringstream os;
    os << "K at y = " << y << " has log magnitude " << lv.log_abs << "; use bessel_k_log";
    throw Overflow(os.str());
  }
  return v;
}

namespace {

// Ascending series sum_m (y/2)^(2m - ik) / (m! Gamma(m + 1 - ik)).
std::complex<double> i_minus_ik_series(double k, double y) {
  const std::complex<double> minus_ik(0.0, -k);
  const double half = 0.5 * y;
  std::complex<double> term = std::exp(minus_ik * std::log(half) - log_gamma(1.0 + minus_ik));
  std::complex<double> sum = term;
  const double q = half * half;
  for (int m = 1; m < 500; ++m) {
    term *= q / (static_cast<double>(m) * (static_cast<double>(m) + minus_ik));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

quad::Options tight() {
  quad::Options o;
  o.abs_tol = 1e-300;
  o.rel_tol = 1e-14;
  o.max_intervals = 2000;
  return o;
}

// exp(-y) * (1/pi) int_0^pi exp(y cos th) cosh(k th) dth.
double schlaefli_first_scaled(double k, double y) {
  k = std::abs(k);
  // Beyond th_max the integrand is below exp(-kCut) of its value at 0.
  double th_max = pi;
  if (y > 1.0) {
    // y (1 - cos th) - k th > kCut  <=>  th large enough; solve crudely by bisection.
    double lo = 0.0, hi = pi;
    auto g = [&](double th) { return y * (1.0 - std::cos(th)) - k * th - kCut; };
    if (g(pi) > 0.0) {
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? hi : lo) = mid;
      }
      th_max = hi;
    }
  }
  auto f = [&](double th) { return std::exp(-y * (1.0 - std::cos(th))) * std::cosh(k * th); };
  return quad::integrate(f, 0.0, th_max, tight()).value / pi;
}

// exp(y) * int_0^inf exp(-y cosh t) {cos, sin}(k t) dt on the real contour.
std::pair<double, double> cos_sin_transform_scaled(double k, double y) {
  const double t_max = std::acosh(1.0 + (kCut + 5.0) / y);
  auto fc = [&](double t) { return std::exp(-y * (std::cosh(t) - 1.0)) * std::cos(k * t); };
  auto fs = [&](double t) { return std::exp(-y * (std::cosh(t) - 1.0)) * std::sin(k * t); };
  quad::Options o = tight();
  o.abs_tol = 1e-17;
  return {quad::integrate(fc, 0.0, t_max, o).value, quad::integrate(fs, 0.0, t_max, o).value};
}

constexpr double kSeriesLimit = 2.0;

// e^{-y} Re, e^{+y} Im, each from its primary route.
ComplexParts primary_scaled(double k, double y) {
  if (y <= kSeriesLimit) {
    const std::complex<double> v = i_minus_ik_series(k, y);
    return {v.real() * std::exp(-y), v.imag() * std::exp(y)};
  }
  const double sinh_pik = std::sinh(pi * k);
  const auto [c, s] = cos_sin_transform_scaled(k, y);
  const double re = schlaefli_first_scaled(k, y) - sinh_pik / pi * s * std::exp(-2.0 * y);
  return {re, sinh_pik / pi * c};
}

void connection_check(double k, double y, double im_scaled) {
  // Im I_{-ik}(y) = sinh(pi k)/pi K_{ik}(y), with K from the lifted contour.
  const LogValue kv = bessel_k_log(BesselOrder::imaginary(k), y);
  const double expected = std::sinh(pi * k) / pi * kv.sign * std::exp(kv.log_abs + y);
  const double scale = std::max(std::abs(expected), std::abs(im_scaled));
  if (scale == 0.0) return;
  // Near a zero of K_{ik} the relative test is meaningless; compare against the
  // size of the oscillation envelope instead.
  const double envelope = std::abs(std::sinh(pi * k)) / pi * std::exp(-0.5 * pi * std::abs(k)) *
                          std::exp(y) * std::sqrt(pi / (2.0 * std::max(y, std::abs(k)) + 1.0));
  const double denom = std::max(scale, 1e-3 * envelope);
  if (std::abs(im_scaled - expected) > 1e-10 * denom) {
    std::ostringstream os;
    os.precision(17);
    os << "connection identity violated at k = " << k << ", y = " << y << ": " << im_scaled << " vs "
       << expected;
    throw AccuracyLoss(os.str());
  }
}

}  // namespace

ComplexParts bessel_i_reim_scaled(double k, double y) {
  require_positive(y, "bessel_i_reim");
  const ComplexParts p = primary_scaled(k, y);
  connection_check(k, y, p.im);
  return p;
}

ComplexParts bessel_i_reim(double k, double y) {
  const ComplexParts p = bessel_i_reim_scaled(k, y);
  const ComplexParts out{p.re * std::exp(y), p.im * std::exp(-y)};
  if (!std::isfinite(out.re)) throw Overflow("I_{-ik}(y) overflows; use bessel_i_reim_scaled");
  return out;
}

}  // namespace mtrace::specfun
