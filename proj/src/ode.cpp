#include "mtrace/ode.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <tuple>

#include "mtrace/errors.hpp"
#include "mtrace/jet.hpp"
#include "mtrace/quadrature.hpp"
#include "mtrace/specfun.hpp"

namespace mtrace {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct QValues {
  double q, qp, qpp;
};

QValues q_values(const PotentialModel& model, double lambda, double x) {
  switch (model.kind()) {
    case ModelKind::cosh_line:
      return {model.big_q(x, lambda), 4.0 * std::sinh(2.0 * x), 8.0 * std::cosh(2.0 * x)};
    case ModelKind::exp_half_line: {
      const double e2 = std::exp(2.0 * x);
      return {e2 - lambda, 2.0 * e2, 4.0 * e2};
    }
    case ModelKind::harmonic_line:
      return {x * x - lambda, 2.0 * x, 2.0};
  }
  return {kNaN, kNaN, kNaN};
}

double log_norm(const PotentialModel& model, double lambda, double x) {
  switch (model.kind()) {
    case ModelKind::exp_half_line:
      return -0.5 * x - std::expm1(x);
    case ModelKind::cosh_line:
      return 0.5 * std::log(0.5 * std::numbers::pi) - 0.5 * x - std::exp(x);
    case ModelKind::harmonic_line:
      return 0.5 * (lambda - 1.0) * std::log(x) - 0.5 * x * x;
  }
  return kNaN;
}

// N'/N + Q'/4Q + sqrt(Q), rearranged so that nothing cancels at large x.
double norm_integrand(const PotentialModel& model, double lambda, double x) {
  const double q = model.big_q(x, lambda);
  if (!std::isfinite(q)) return 0.0;
  const double r = std::sqrt(q);
  switch (model.kind()) {
    case ModelKind::exp_half_line: {
      const double e = std::exp(x);
      return lambda / (2.0 * q) - lambda / (r + e);
    }
    case ModelKind::cosh_line: {
      const double c = 2.0 - lambda;
      const double em2 = std::exp(-2.0 * x);
      return (1.0 - em2 - 0.5 * c) / q + (c - 2.0 + em2) / (r + std::exp(x));
    }
    case ModelKind::harmonic_line:
      return 0.5 * (lambda - 1.0) / x + 0.5 * x / q - lambda / (r + x);
  }
  return kNaN;
}

quad::Options tail_options() {
  quad::Options o;
  o.abs_tol = 1e-15;
  o.rel_tol = 1e-12;
  o.max_intervals = 4000;
  o.throw_on_failure = false;
  return o;
}

double seed_level(const PotentialModel& model, double lambda, const OdeOptions& opts) {
  (void)model;
  return std::max(opts.q_ratio * std::abs(lambda), opts.q_floor);
}

// Fixed-size Dormand-Prince 5(4) stepper.
using State = std::array<double, 3>;

struct DopriStep {
  State y;
  double err;
};

template <class F>
DopriStep dopri_step(F& f, double x, const State& y, double h, const OdeOptions& opts, int n) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  State k1 = f(x, y), k2, k3, k4, k5, k6, k7, t;
  auto comb = [&](std::initializer_list<std::pair<double, const State*>> terms) {
    for (int i = 0; i < n; ++i) {
      double s = y[i];
      for (auto& [c, k] : terms) s += h * c * (*k)[i];
      t[i] = s;
    }
    return t;
  };
  k2 = f(x + c2 * h, comb({{a21, &k1}}));
  k3 = f(x + c3 * h, comb({{a31, &k1}, {a32, &k2}}));
  k4 = f(x + c4 * h, comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
  k5 = f(x + c5 * h, comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
  k6 = f(x + h, comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
  State y5 = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
  k7 = f(x + h, y5);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double sc = opts.atol + opts.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
    acc += (e / sc) * (e / sc);
  }
  double err = std::sqrt(acc / n);
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(y5[i])) err = kNaN;
  return {y5, err};
}

class Integrator {
 public:
  Integrator(const PotentialModel& model, double lambda, const OdeOptions& opts)
      : model_(model), lambda_(lambda), opts_(opts) {}

  // Advances y from x to x_end (< x) in the given mode; returns false if the
  // sigma form broke down first, leaving x at the breakdown point.
  template <class F, class Accept>
  bool advance(F& f, double& x, State& y, double x_end, int n, Accept on_accept, bool check_breakdown) {
    while (x > x_end) {
      double h = -std::min(std::abs(h_), x - x_end);
      const bool last = (x + h <= x_end);
      if (last) h = x_end - x;
      const DopriStep s = dopri_step(f, x, y, h, opts_, n);
      if (++steps_ > opts_.max_steps) throw StepSizeUnderflow("step budget exhausted");
      if (!(s.err <= 1.0)) {
        const double fac = std::isfinite(s.err) ? std::max(0.2, 0.9 * std::pow(s.err, -0.2)) : 0.25;
        h_ = std::abs(h) * fac;
        if (h_ < 1e-13 * std::max(1.0, std::abs(x))) {
          std::ostringstream os;
          os << "step size " << h_ << " at x = " << x << ", lambda = " << lambda_;
          throw StepSizeUnderflow(os.str());
        }
        continue;
      }
      x = last ? x_end : x + h;
      y = s.y;
      on_accept(x, y);
      const double fac = s.err > 0.0 ? std::min(5.0, 0.9 * std::pow(s.err, -0.2)) : 5.0;
      if (!last) h_ = std::abs(h) * fac;
      else h_ = std::max(h_, std::abs(h));
      if (check_breakdown && broken(x)) return false;
    }
    return true;
  }

  bool broken(double x) const {
    const QValues v = q_values(model_, lambda_, x);
    return !(v.q > 0.0) || std::abs(v.qp) > opts_.lg_breakdown * std::pow(v.q, 1.5);
  }

  void set_step(double h) { h_ = h; }
  long steps() const { return steps_; }

 private:
  PotentialModel model_;
  double lambda_;
  OdeOptions opts_;
  double h_ = 1e-3;
  long steps_ = 0;
};

}  // namespace

namespace {

double lg_sigma_order(const PotentialModel& model, double lambda, double x, int order, double* change) {
  const int kOrder = order;
  Jet q = model.q_jet(x, kOrder);
  q.coeff(0) = model.big_q(x, lambda);
  const Jet qp = q.derivative();
  const Jet qpp = qp.derivative();
  const Jet half_ratio = qp / (2.0 * q);
  const Jet v = qpp / (4.0 * q) - (5.0 / 16.0) * square(qp / q);
  const Jet two_r = 2.0 * sqrt(q);
  Jet sigma = Jet::constant(x, kOrder, 0.0);
  double last_change = 0.0;
  for (int it = 0; it < 10 && sigma.order() > 0; ++it) {
    const Jet next = (sigma.derivative() + square(sigma) - half_ratio * sigma - v) / two_r;
    last_change = std::abs(next.value() - sigma.value());
    sigma = next;
    // Converged to rounding; further sweeps change nothing.
    if (it > 0 && last_change <= 1e-17 * std::abs(sigma.value())) break;
  }
  if (change != nullptr) *change = last_change;
  return sigma.value();
}

}  // namespace

double lg_sigma(const PotentialModel& model, double lambda, double x, double* change) {
  return lg_sigma_order(model, lambda, x, 14, change);
}

double lg_sigma_tail(const PotentialModel& model, double lambda, double x, bool upper, double* error) {
  auto f = [&](double s) {
    const double q = model.big_q(s, lambda);
    if (!std::isfinite(q) || q > 1e250) return 0.0;
    // The tail starts where Q is large; a shorter jet suffices there.
    return lg_sigma_order(model, lambda, s, 9, nullptr);
  };
  // sigma is itself O(1/sqrt Q) here, so a relative 1e-10 is ample.
  quad::Options o = tail_options();
  o.rel_tol = 1e-10;
  const quad::Result r = upper ? quad::integrate_to_infinity(f, x, o) : quad::integrate_from_minus_infinity(f, x, o);
  if (error != nullptr) *error = r.error;
  return r.value;
}

LGSeed lg_seed(const PotentialModel& model, double lambda, double x0, const OdeOptions& opts) {
  const double level = seed_level(model, lambda, opts);
  if (!(x0 > 0.0) || !(model.q(x0) >= level * (1.0 - 1e-12))) {
    std::ostringstream os;
    os << "q(" << x0 << ") = " << model.q(x0) << " is below the seed threshold " << level;
    throw SeedPointTooSmall(os.str());
  }
  LGSeed s;
  s.x0 = x0;
  double change = 0.0;
  s.sigma = lg_sigma(model, lambda, x0, &change);
  double tail_err = 0.0;
  s.chi = -lg_sigma_tail(model, lambda, x0, true, &tail_err);
  const quad::Result d = quad::integrate_to_infinity(
      [&](double x) { return norm_integrand(model, lambda, x); }, x0, tail_options());
  s.log_psi = log_norm(model, lambda, x0) + d.value + s.chi;
  const QValues v = q_values(model, lambda, x0);
  s.dlog_psi = s.sigma - v.qp / (4.0 * v.q) - std::sqrt(v.q);
  s.est_error = change + tail_err + d.error;
  return s;
}

namespace {

LGSeed auto_seed(const PotentialModel& model, double lambda, const OdeOptions& opts) {
  double level = seed_level(model, lambda, opts);
  for (int attempt = 0; attempt < 12; ++attempt, level *= 4.0) {
    const double x0 = model.x_where_q_reaches(level);
    OdeOptions o = opts;
    o.q_floor = level;
    o.q_ratio = 0.0;
    const LGSeed s = lg_seed(model, lambda, x0, o);
    if (s.est_error <= opts.seed_tol) return s;
  }
  throw AccuracyLoss("no seed point meets the LG error tolerance");
}

}  // namespace

double seed_abscissa(const PotentialModel& model, double lambda, const OdeOptions& opts) {
  return auto_seed(model, lambda, opts).x0;
}

SolutionPath integrate_psi1(const PotentialModel& model, double lambda, double x0, const std::vector<double>& targets,
                            const OdeOptions& opts) {
  const LGSeed seed = x0 > 0.0 ? lg_seed(model, lambda, x0, [&] {
    OdeOptions o = opts;
    o.q_ratio = 0.0;
    o.q_floor = std::min(opts.q_floor, model.q(x0));
    return o;
  }())
                                : auto_seed(model, lambda, opts);
  x0 = seed.x0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!(targets[i] < x0) || (i > 0 && !(targets[i] < targets[i - 1])))
      throw DomainError("integrate_psi1: targets must be strictly descending and below x0");
    if (model.domain() == Domain::half_line && targets[i] < 0.0)
      throw DomainError("integrate_psi1: half-line targets must be >= 0");
  }

  SolutionPath path;
  path.lambda = lambda;
  path.x0 = x0;
  path.seed_error = seed.est_error;

  const QValues v0 = q_values(model, lambda, x0);
  const double log_q0 = std::log(v0.q);

  // Sigma form: (sigma, chi, int_x^{x0} sqrt Q).
  auto f_sigma = [&](double x, const State& y) -> State {
    const QValues v = q_values(model, lambda, x);
    if (!(v.q > 0.0)) return {kNaN, kNaN, kNaN};
    const double r = std::sqrt(v.q);
    const double a = 2.0 * r + v.qp / (2.0 * v.q);
    const double vv = v.qpp / (4.0 * v.q) - (5.0 / 16.0) * (v.qp / v.q) * (v.qp / v.q);
    return {-y[0] * y[0] + a * y[0] + vv, y[0], -r};
  };
  // Linear form: (p, p'), psi = e^L p.
  auto f_linear = [&](double x, const State& y) -> State {
    return {y[1], model.big_q(x, lambda) * y[0], 0.0};
  };

  Integrator integ(model, lambda, opts);
  integ.set_step(std::min(0.05, 0.5 / std::sqrt(v0.q)));
  double x = x0;
  State y{seed.sigma, seed.chi, 0.0};
  bool linear = false;
  double log_scale = 0.0;
  int zeros = 0;

  auto sigma_log_psi = [&](double xx, const State& s) {
    const QValues v = q_values(model, lambda, xx);
    return seed.log_psi - 0.25 * (std::log(v.q) - log_q0) + s[2] + (s[1] - seed.chi);
  };

  auto record = [&](double xx) {
    path.grid.push_back(xx);
    path.zeros.push_back(zeros);
    const QValues v = q_values(model, lambda, xx);
    if (!linear) {
      const double lp = sigma_log_psi(xx, y);
      const double u = y[0] - v.qp / (4.0 * v.q) - std::sqrt(v.q);
      path.log_psi.push_back(lp);
      path.sign.push_back(1);
      path.dlog_psi.push_back(u);
      path.log_dpsi.push_back(lp + std::log(std::abs(u)));
      path.dsign.push_back(u > 0 ? 1 : (u < 0 ? -1 : 0));
      path.sigma.push_back(y[0]);
      path.chi.push_back(y[1]);
    } else {
      const double p = y[0], dp = y[1];
      path.log_psi.push_back(log_scale + std::log(std::abs(p)));
      path.sign.push_back(p > 0 ? 1 : (p < 0 ? -1 : 0));
      const double u = dp / p;
      path.dlog_psi.push_back(u);
      path.log_dpsi.push_back(log_scale + std::log(std::abs(dp)));
      path.dsign.push_back(dp > 0 ? 1 : (dp < 0 ? -1 : 0));
      path.sigma.push_back(v.q > 0.0 ? u + v.qp / (4.0 * v.q) + std::sqrt(v.q) : kNaN);
      path.chi.push_back(kNaN);
    }
  };

  auto on_sigma = [](double, const State&) {};
  double prev_p = 1.0;
  auto on_linear_step = [&](double, const State& s) {
    if ((s[0] < 0.0) != (prev_p < 0.0) && s[0] != 0.0) ++zeros;
    if (s[0] != 0.0) prev_p = s[0];
  };

  for (double target : targets) {
    while (x > target) {
      if (!linear) {
        const bool done = integ.advance(f_sigma, x, y, target, 3, on_sigma, true);
        if (!done || integ.broken(x)) {
          // Leave the LG form: psi = e^{log psi} (1, u).
          const QValues v = q_values(model, lambda, x);
          const double lp = sigma_log_psi(x, y);
          const double u = y[0] - v.qp / (4.0 * v.q) - std::sqrt(v.q);
          log_scale = lp;
          y = {1.0, u, 0.0};
          prev_p = 1.0;
          linear = true;
          integ.set_step(std::min(0.05, 0.2 / std::sqrt(std::abs(v.q) + std::abs(u) + 1.0)));
        }
      } else {
        // Renormalize in chunks so p stays representable.
        State& s = y;
        const double chunk_end = std::max(target, x - 0.5);
        integ.advance(f_linear, x, s, chunk_end, 2, on_linear_step, false);
        const double m = std::abs(s[0]) + std::abs(s[1]);
        if (m > 0.0 && (m > 1e50 || m < 1e-50)) {
          s[0] /= m;
          s[1] /= m;
          log_scale += std::log(m);
        }
      }
    }
    record(target);
  }
  path.steps = integ.steps();
  return path;
}

double sigma_of_x(const PotentialModel& model, double lambda, const SolutionPath& path, double x) {
  (void)model;
  (void)lambda;
  for (std::size_t i = 0; i < path.grid.size(); ++i)
    if (std::abs(path.grid[i] - x) <= 1e-12 * std::max(1.0, std::abs(x))) return path.sigma[i];
  std::ostringstream os;
  os << "x = " << x << " is not on the solution grid";
  throw OffGrid(os.str());
}

// ---------------------------------------------------------------------------
// Successive approximations.

namespace {

constexpr int kNodes = 16;
constexpr int kGauss = 16;
constexpr double kPanelWidth = 0.25;

struct GaussRule {
  std::array<double, kGauss> t, w;
  GaussRule() {
    for (int i = 0; i < kGauss; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (kGauss + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int j = 2; j <= kGauss; ++j) {
          const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        dp = kGauss * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      t[i] = z;
      w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

const GaussRule& gauss() {
  static const GaussRule rule;
  return rule;
}

// Panels of Chebyshev points of the second kind with barycentric interpolation.
class PanelGrid {
 public:
  PanelGrid(double a, double b) : a_(a) {
    panels_ = std::max(1, static_cast<int>(std::ceil((b - a) / kPanelWidth)));
    h_ = (b - a) / panels_;
    for (int j = 0; j < kNodes; ++j) {
      ref_[j] = -std::cos(std::numbers::pi * j / (kNodes - 1));
      weight_[j] = (j % 2 == 0 ? 1.0 : -1.0) * ((j == 0 || j == kNodes - 1) ? 0.5 : 1.0);
    }
  }
  int panels() const { return panels_; }
  int size() const { return panels_ * kNodes; }
  double left(int p) const { return a_ + p * h_; }
  double right(int p) const { return a_ + (p + 1) * h_; }
  double node(int p, int j) const { return left(p) + 0.5 * h_ * (ref_[j] + 1.0); }
  int panel_of(double x) const {
    return std::clamp(static_cast<int>(std::floor((x - a_) / h_)), 0, panels_ - 1);
  }
  double interpolate(const std::vector<double>& f, int p, double x) const {
    const double t = 2.0 * (x - left(p)) / h_ - 1.0;
    double num = 0.0, den = 0.0;
    for (int j = 0; j < kNodes; ++j) {
      const double d = t - ref_[j];
      if (d == 0.0) return f[p * kNodes + j];
      const double c = weight_[j] / d;
      num += c * f[p * kNodes + j];
      den += c;
    }
    return num / den;
  }
  double interpolate(const std::vector<double>& f, double x) const { return interpolate(f, panel_of(x), x); }

 private:
  double a_, h_;
  int panels_;
  std::array<double, kNodes> ref_{}, weight_{};
};

// int_x^inf h(y) e^{-2 (e^y - e^x)} dy at every node for h given on the grid;
// with damped = false the weight is 1.
std::vector<double> tail_integrals(const PanelGrid& grid, const std::vector<double>& h, bool damped) {
  const GaussRule& g = gauss();
  std::vector<double> out(grid.size());
  double carry = 0.0;  // integral from the right end of the current panel
  for (int p = grid.panels() - 1; p >= 0; --p) {
    const double xr = grid.right(p);
    auto piece = [&](double lo, double hi, double ex) {
      // int_lo^hi h(y) w(y) dy where w = e^{-2(e^y - ex)}; split so that e^y
      // moves by at most 1/2 per piece when damped.
      double span = hi - lo;
      int pieces = 1;
      if (damped) {
        const double ds = std::exp(hi) - std::exp(lo);
        pieces = std::clamp(static_cast<int>(std::ceil(ds / 0.5)), 1, 64);
        const double cut = std::log(std::exp(ex) + 21.0);
        if (cut < hi) {
          span = std::max(0.0, cut - lo);
          pieces = std::clamp(static_cast<int>(std::ceil((std::exp(lo + span) - std::exp(lo)) / 0.5)), 1, 64);
        }
      }
      double s = 0.0;
      const double w = span / pieces;
      for (int k = 0; k < pieces; ++k) {
        const double c = lo + (k + 0.5) * w;
        for (int i = 0; i < kGauss; ++i) {
          const double y = c + 0.5 * w * g.t[i];
          double val = grid.interpolate(h, p, y);
          if (damped) val *= std::exp(-2.0 * (std::exp(y) - std::exp(ex)));
          s += 0.5 * w * g.w[i] * val;
        }
      }
      return s;
    };
    for (int j = 0; j < kNodes; ++j) {
      const double x = grid.node(p, j);
      const double factor = damped ? std::exp(-2.0 * (std::exp(xr) - std::exp(x))) : 1.0;
      out[p * kNodes + j] = (x < xr ? piece(x, xr, x) : 0.0) + factor * carry;
    }
    // Carry to the left end of this panel (node 0 is the left end).
    carry = out[p * kNodes];
  }
  return out;
}

// Hankel expansions of e^s K_{ik}(s) and e^{-s} Re I_{-ik}(s) for large s;
// with 4 nu^2 = -4 k^2 every coefficient is real.
std::pair<double, double> scaled_pair_asymptotic(double k, double s) {
  double term = 1.0, sk = 1.0, sg = 1.0;
  for (int m = 1; m < 200; ++m) {
    const double odd = 2.0 * m - 1.0;
    term *= (-4.0 * k * k - odd * odd) / (8.0 * m * s);
    sk += term;
    sg += (m % 2 == 0 ? term : -term);
    if (std::abs(term) < 1e-18) break;
  }
  return {std::sqrt(std::numbers::pi / (2.0 * s)) * sk, sg / std::sqrt(2.0 * std::numbers::pi * s)};
}

constexpr double kHankelLimit = 40.0;

}  // namespace

PicardResult picard_psi1(double k, const std::vector<double>& x_eval, int n_max) {
  if (n_max < 0 || n_max > 6) throw OrderTooHigh("picard_psi1 supports n_max in [0, 6]");
  if (x_eval.empty()) throw DomainError("picard_psi1: empty evaluation grid");
  for (double x : x_eval)
    if (!(x >= 0.5 && x <= 6.0)) throw DomainError("picard_psi1: evaluation points must lie in [0.5, 6]");
  const double a = *std::min_element(x_eval.begin(), x_eval.end());
  const double b = *std::max_element(x_eval.begin(), x_eval.end());
  // Every integrand carries at least e^{-3y}; 14 units beyond b reach 1e-18.
  const PanelGrid grid(a, b + 14.0);

  // Scaled solutions: K~ = e^{e^x} K_{ik}(e^x), g~ = e^{-e^x} Re I_{-ik}(e^x).
  std::vector<double> kt(grid.size()), gt(grid.size()), e2(grid.size());
  for (int p = 0; p < grid.panels(); ++p)
    for (int j = 0; j < kNodes; ++j) {
      const double x = grid.node(p, j), s = std::exp(x);
      if (s > kHankelLimit) {
        std::tie(kt[p * kNodes + j], gt[p * kNodes + j]) = scaled_pair_asymptotic(k, s);
      } else {
        const specfun::LogValue kl = specfun::bessel_k_log(specfun::BesselOrder::imaginary(k), s);
        kt[p * kNodes + j] = kl.sign * std::exp(kl.log_abs + s);
        gt[p * kNodes + j] = specfun::bessel_i_reim_scaled(k, s).re;
      }
      e2[p * kNodes + j] = std::exp(-2.0 * x);
    }

  PicardResult out;
  out.k = k;
  out.grid = x_eval;
  std::vector<double> f = kt;
  std::vector<double> sum = f;
  auto sample = [&](const std::vector<double>& v) {
    std::vector<double> r;
    r.reserve(x_eval.size());
    for (double x : x_eval) r.push_back(grid.interpolate(v, x));
    return r;
  };
  out.iterates.push_back(sample(f));
  for (int n = 1; n <= n_max; ++n) {
    std::vector<double> hg(grid.size()), hk(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
      hg[i] = gt[i] * f[i] * e2[i];
      hk[i] = kt[i] * f[i] * e2[i];
    }
    const std::vector<double> ig = tail_integrals(grid, hg, false);
    const std::vector<double> ik = tail_integrals(grid, hk, true);
    // f_n'' - (e^{2x} - k^2) f_n = e^{-2x} f_{n-1} with W(K, g) = 1.
    for (int i = 0; i < grid.size(); ++i) f[i] = kt[i] * ig[i] - gt[i] * ik[i];
    for (int i = 0; i < grid.size(); ++i) sum[i] += f[i];
    out.iterates.push_back(sample(f));
  }
  out.partial = sample(sum);
  return out;
}

}  // namespace mtrace
