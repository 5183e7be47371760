#include "mtrace/quadrature.hpp"

#include <array>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include "mtrace/errors.hpp"

namespace mtrace::quad {

namespace {

// Kronrod 15-point nodes (positive half) and weights; Gauss 7-point weights on
// the odd-indexed nodes.
constexpr std::array<double, 8> kXk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const Integrand& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double rk = fc * kWk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXk[static_cast<std::size_t>(j)];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    rk += kWk[static_cast<std::size_t>(j)] * (f1 + f2);
    if (j % 2 == 1) rg += kWg[static_cast<std::size_t>(j / 2)] * (f1 + f2);
  }
  const double value = rk * h;
  // The raw Kronrod-Gauss difference: pessimistic for smooth integrands, which
  // only costs a few extra panels.
  const double err = std::abs((rk - rg) * h);
  return {a, b, value, err};
}

}  // namespace

Result integrate(const Integrand& f, double a, double b, const Options& opts) {
  if (a == b) return {};
  if (a > b) {
    Result r = integrate(f, b, a, opts);
    r.value = -r.value;
    return r;
  }
  std::priority_queue<Panel> heap;
  Panel first = gk15(f, a, b);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  int evals = 15;
  int intervals = 1;
  auto done = [&] {
    return total_err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
  };
  while (!done() && intervals < opts.max_intervals) {
    Panel p = heap.top();
    heap.pop();
    const double mid = 0.5 * (p.a + p.b);
    if (mid <= p.a || mid >= p.b) {
      heap.push(p);
      break;  // cannot subdivide further
    }
    Panel l = gk15(f, p.a, mid);
    Panel r = gk15(f, mid, p.b);
    evals += 30;
    ++intervals;
    total += l.value + r.value - p.value;
    total_err += l.error + r.error - p.error;
    heap.push(l);
    heap.push(r);
  }
  // Re-sum to avoid drift from the incremental updates.
  double sum = 0.0, err = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  Result res{sum, err, evals, err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(sum))};
  if (!res.converged && opts.throw_on_failure) {
    std::ostringstream os;
    os << "adaptive quadrature on [" << a << ", " << b << "] reached error " << err
       << " after " << intervals << " panels";
    throw QuadratureFailure(os.str());
  }
  return res;
}

Result integrate_to_infinity(const Integrand& f, double a, const Options& opts) {
  auto g = [&](double s) {
    const double one_minus = 1.0 - s;
    const double x = a + s / one_minus;
    const double fx = f(x);
    if (fx == 0.0) return 0.0;
    return fx / (one_minus * one_minus);
  };
  return integrate(g, 0.0, 1.0, opts);
}

Result integrate_from_minus_infinity(const Integrand& f, double b, const Options& opts) {
  return integrate_to_infinity([&](double x) { return f(-x); }, -b, opts);
}

Result integrate_split(const Integrand& f, double a, double b, std::initializer_list<double> breaks,
                       const Options& opts) {
  Result total;
  double left = a;
  std::vector<double> pts(breaks);
  pts.push_back(b);
  for (double right : pts) {
    if (right <= left) continue;
    Result r = integrate(f, left, right, opts);
    total.value += r.value;
    total.error += r.error;
    total.evaluations += r.evaluations;
    total.converged = total.converged && r.converged;
    left = right;
  }
  return total;
}

}  // namespace mtrace::quad
