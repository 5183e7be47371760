#include "mtrace/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "mtrace/errors.hpp"
#include "mtrace/parallel.hpp"
#include "mtrace/quadrature.hpp"

namespace mtrace {

using specfun::LogValue;

namespace {

bool is_line(const PotentialModel& m) { return m.domain() == Domain::full_line; }

double multiplicity(const PotentialModel& m) { return is_line(m) ? 2.0 : 1.0; }

// psi(0)/psi'(0) measured against the local length scale, and its inverse.
double dirichlet_measure(const PotentialModel& m, const ShootResult& r) {
  if (r.psi0.sign == 0) return 0.0;
  return std::exp(r.psi0.log_abs - r.dpsi0.log_abs) * std::sqrt(std::abs(m.big_q(0.0, r.lambda)) + 1.0);
}

double neumann_measure(const PotentialModel& m, const ShootResult& r) {
  if (r.dpsi0.sign == 0) return 0.0;
  return std::exp(r.dpsi0.log_abs - r.psi0.log_abs) / std::sqrt(std::abs(m.big_q(0.0, r.lambda)) + 1.0);
}

quad::Options weyl_options() {
  quad::Options o;
  o.abs_tol = 1e-13;
  o.rel_tol = 1e-10;
  o.throw_on_failure = false;
  return o;
}

// Sum over eigenvalues beyond `from` of mu^{-k}, from the Weyl density.
double weyl_tail(const PotentialModel& m, double from, int k) {
  if (m.kind() == ModelKind::harmonic_line) {
    if (k < 2) throw DomainError("harmonic tail of order 1 diverges");
    return std::pow(from, 1.0 - k) / (2.0 * (k - 1));
  }
  auto f = [&](double mu) { return weyl_density(m, mu) * std::pow(mu, -k); };
  return quad::integrate_to_infinity(f, from, weyl_options()).value;
}

}  // namespace

ShootResult shoot(const PotentialModel& model, double lambda, const OdeOptions& opts) {
  const SolutionPath p = integrate_psi1(model, lambda, 0.0, {0.0}, opts);
  ShootResult r;
  r.lambda = lambda;
  r.psi0 = {p.log_psi[0], p.sign[0]};
  r.dpsi0 = {p.log_dpsi[0], p.dsign[0]};
  const int z = p.zeros[0];
  if (is_line(model)) {
    r.t12 = {std::log(2.0) + p.log_psi[0] + p.log_dpsi[0], -p.sign[0] * p.dsign[0]};
    const bool same = p.sign[0] != 0 && p.sign[0] == p.dsign[0];
    r.count_below = 2 * z + (same ? 1 : 0);
  } else {
    r.count_below = z;
  }
  return r;
}

LogValue fredholm_log_a(const PotentialModel& model, double lambda, double lambda_ref, const OdeOptions& opts) {
  const ShootResult ref = shoot(model, lambda_ref, opts);
  const bool at_eig = is_line(model)
                          ? std::min(dirichlet_measure(model, ref), neumann_measure(model, ref)) < 1e-8
                          : dirichlet_measure(model, ref) < 1e-8;
  if (at_eig) {
    std::ostringstream os;
    os << "reference point lambda = " << lambda_ref << " is an eigenvalue of the " << model.name() << " model";
    throw ReferenceAtEigenvalue(os.str());
  }
  if (lambda == lambda_ref) return {0.0, 1};
  const ShootResult r = shoot(model, lambda, opts);
  const LogValue& num = is_line(model) ? r.t12 : r.psi0;
  const LogValue& den = is_line(model) ? ref.t12 : ref.psi0;
  if (num.sign == 0) return {-std::numeric_limits<double>::infinity(), 0};
  return {num.log_abs - den.log_abs, num.sign * den.sign};
}

double fredholm_a(const PotentialModel& model, double lambda, double lambda_ref, const OdeOptions& opts) {
  const LogValue v = fredholm_log_a(model, lambda, lambda_ref, opts);
  const double a = v.value();
  if (!std::isfinite(a)) throw Overflow("a(lambda) is not representable; use fredholm_log_a");
  return a;
}

std::string parity_name(Parity p) {
  switch (p) {
    case Parity::even:
      return "even";
    case Parity::odd:
      return "odd";
    case Parity::none:
      return "none";
  }
  return "none";
}

Parity parity_from_name(const std::string& s) {
  if (s == "even") return Parity::even;
  if (s == "odd") return Parity::odd;
  if (s == "none") return Parity::none;
  throw DomainError("unknown parity '" + s + "'");
}

double weyl_count(const PotentialModel& model, double mu) {
  if (!(mu > model.q(0.0))) return 0.0;
  const double xt = model.x_where_q_reaches(mu);
  auto f = [&](double t) {
    const double x = xt * (1.0 - t * t);
    return std::sqrt(std::max(0.0, -model.big_q(x, mu))) * 2.0 * xt * t;
  };
  return multiplicity(model) / std::numbers::pi * quad::integrate(f, 0.0, 1.0, weyl_options()).value;
}

double weyl_density(const PotentialModel& model, double mu) {
  if (!(mu > model.q(0.0))) return 0.0;
  if (model.kind() == ModelKind::harmonic_line) return 0.5;
  const double xt = model.x_where_q_reaches(mu);
  auto f = [&](double t) {
    const double x = xt * (1.0 - t * t);
    const double d = -model.big_q(x, mu);
    return d > 0.0 ? 2.0 * xt * t / std::sqrt(d) : 0.0;
  };
  return multiplicity(model) / (2.0 * std::numbers::pi) * quad::integrate(f, 0.0, 1.0, weyl_options()).value;
}

double exp_counting_estimate(double lambda) {
  if (!(lambda > 0.0)) return 0.0;
  const double s = std::sqrt(lambda);
  return s / std::numbers::pi * std::log(2.0 * s / std::numbers::e);
}

double exp_lambert_eigenvalue(int n) {
  if (n < 1) throw DomainError("eigenvalue index must be >= 1");
  const double w = specfun::lambert_w(2.0 * std::numbers::pi * n / std::numbers::e);
  const double s = std::numbers::pi * n / w;
  return s * s;
}

namespace {

struct Bracket {
  double a, b;
  ShootResult ra, rb;
};

Parity parity_of(const PotentialModel& m, int index) {
  if (!is_line(m)) return Parity::none;
  return index % 2 == 1 ? Parity::even : Parity::odd;
}

// Relative value of the function whose zero defines an eigenvalue of the given parity.
const LogValue& defining(const ShootResult& r, Parity p) { return p == Parity::even ? r.dpsi0 : r.psi0; }

EigRecord refine(const PotentialModel& m, Bracket br, int index, const EigenOptions& opts) {
  const Parity parity = parity_of(m, index);
  while (br.b - br.a > opts.rel_width * std::max(1.0, std::abs(0.5 * (br.a + br.b)))) {
    const double mid = 0.5 * (br.a + br.b);
    if (mid <= br.a || mid >= br.b) break;
    ShootResult r = shoot(m, mid, opts.ode);
    if (r.count_below >= index) {
      br.b = mid;
      br.rb = std::move(r);
    } else {
      br.a = mid;
      br.ra = std::move(r);
    }
  }
  // One secant step on the defining function, kept only if it stays inside.
  double lambda = 0.5 * (br.a + br.b);
  const LogValue& fa = defining(br.ra, parity);
  const LogValue& fb = defining(br.rb, parity);
  if (fa.sign != 0 && fb.sign != 0 && fa.sign != fb.sign) {
    const double ref = std::max(fa.log_abs, fb.log_abs);
    const double va = fa.sign * std::exp(fa.log_abs - ref);
    const double vb = fb.sign * std::exp(fb.log_abs - ref);
    const double s = br.a - va * (br.b - br.a) / (vb - va);
    if (s >= br.a && s <= br.b) lambda = s;
  }
  const ShootResult r = shoot(m, lambda, opts.ode);
  EigRecord rec;
  rec.index = index;
  rec.parity = parity;
  rec.lambda = lambda;
  rec.residual = parity == Parity::even ? neumann_measure(m, r) : dirichlet_measure(m, r);
  return rec;
}

}  // namespace

std::vector<EigRecord> eigenvalues(const PotentialModel& model, int count, const EigenOptions& opts) {
  if (count < 1 || count > 60) throw DomainError("eigenvalue count must lie in [1, 60]");
  auto shoot_at = [&](double l) { return shoot(model, l, opts.ode); };

  const double lo = model.q(0.0) - 1.0;
  double hi = lo + 2.0;
  while (weyl_count(model, hi) < count + 1.0) hi = lo + 2.0 * (hi - lo);
  ShootResult rhi = shoot_at(hi);
  for (int it = 0; rhi.count_below < count; ++it) {
    if (it > 20) throw BracketNotFound("could not reach the requested number of eigenvalues");
    hi = lo + 1.5 * (hi - lo);
    rhi = shoot_at(hi);
  }

  // Grid with about four points per expected eigenvalue.
  std::vector<double> grid{lo};
  const double max_step = (hi - lo) / (2.0 * count);
  while (grid.back() < hi) {
    const double rho = weyl_density(model, grid.back());
    const double step = rho > 0.0 ? std::min(0.25 / rho, max_step) : max_step;
    grid.push_back(std::min(hi, grid.back() + step));
  }
  std::vector<ShootResult> shots(grid.size());
  parallel_for(grid.size(), opts.threads, [&](std::size_t i) { shots[i] = shoot_at(grid[i]); });
  if (shots.front().count_below != 0) throw BracketNotFound("eigenvalue below the bottom of the potential");

  // Isolate single-eigenvalue brackets; intervals holding several are split,
  // at most three times.
  std::vector<Bracket> brackets;
  auto isolate = [&](auto&& self, double a, const ShootResult& ra, double b, const ShootResult& rb,
                     int depth) -> void {
    const int jump = rb.count_below - ra.count_below;
    if (jump <= 0 || ra.count_below >= count) return;
    if (jump == 1) {
      brackets.push_back({a, b, ra, rb});
      return;
    }
    if (depth >= 3) {
      std::ostringstream os;
      os << jump << " eigenvalues remain in [" << a << ", " << b << "] after refinement";
      throw BracketNotFound(os.str());
    }
    constexpr int kSplit = 4;
    std::vector<double> xs(kSplit + 1);
    std::vector<ShootResult> rs(kSplit + 1);
    for (int i = 0; i <= kSplit; ++i) xs[i] = a + (b - a) * i / kSplit;
    rs.front() = ra;
    rs.back() = rb;
    parallel_for(kSplit - 1, opts.threads, [&](std::size_t i) { rs[i + 1] = shoot_at(xs[i + 1]); });
    for (int i = 0; i < kSplit; ++i) self(self, xs[i], rs[i], xs[i + 1], rs[i + 1], depth + 1);
  };
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (shots[i + 1].count_below < shots[i].count_below)
      throw BracketNotFound("eigenvalue count decreased along the grid");
    isolate(isolate, grid[i], shots[i], grid[i + 1], shots[i + 1], 0);
  }
  if (static_cast<int>(brackets.size()) < count) throw BracketNotFound("too few brackets found");
  brackets.resize(static_cast<std::size_t>(count));

  std::vector<EigRecord> out(brackets.size());
  parallel_for(brackets.size(), opts.threads, [&](std::size_t i) {
    out[i] = refine(model, brackets[i], static_cast<int>(i) + 1, opts);
  });
  return out;
}

ProductEstimate product_crosscheck(const PotentialModel& model, double lambda, const std::vector<EigRecord>& eigs,
                                   int tail_order, const OdeOptions& opts) {
  if (tail_order < 1 || tail_order > 2) throw DomainError("tail_order must be 1 or 2");
  if (eigs.size() < 3) throw InsufficientEigenvalues("need at least three eigenvalues");
  for (std::size_t i = 0; i < eigs.size(); ++i) {
    if (eigs[i].index != static_cast<int>(i) + 1 || (i > 0 && !(eigs[i].lambda > eigs[i - 1].lambda)))
      throw InsufficientEigenvalues("eigenvalues must be the lowest ones, contiguous and increasing");
  }
  if (!(lambda < eigs.front().lambda)) throw DomainError("product formula requires lambda below the spectrum");

  const double last = eigs.back().lambda;
  const double rho = weyl_density(model, last);
  const double from = last + 0.5 / rho;
  const double shift = 0.1 / rho;
  const bool genus_one = model.kind() == ModelKind::harmonic_line;

  double log_p = 0.0;
  for (const EigRecord& e : eigs) {
    log_p += std::log1p(-lambda / e.lambda);
    if (genus_one) log_p += lambda / e.lambda;
  }
  const int first = genus_one ? 2 : 1;
  const int last_order = genus_one ? tail_order + 1 : tail_order;
  double error = 0.0;
  for (int k = first; k <= last_order; ++k) log_p -= std::pow(lambda, k) / k * weyl_tail(model, from, k);
  // Next tail order, plus the sensitivity of the leading tail term to where the
  // Weyl integral starts.
  error += std::abs(std::pow(lambda, last_order + 1)) / (last_order + 1) * weyl_tail(model, from, last_order + 1);
  error += std::abs(std::pow(lambda, first)) / first *
           std::abs(weyl_tail(model, from - shift, first) - weyl_tail(model, from + shift, first));
  if (genus_one) {
    const double h = 1e-3;
    const double c = (fredholm_log_a(model, h, 0.0, opts).log_abs - fredholm_log_a(model, -h, 0.0, opts).log_abs) /
                     (2.0 * h);
    log_p += c * lambda;
    error += std::abs(lambda) * 1e-6;
  }
  ProductEstimate out;
  out.log_value = log_p;
  out.value = std::exp(log_p);
  out.error = out.value * std::expm1(error);
  return out;
}

// ---------------------------------------------------------------------------

std::optional<std::vector<EigRecord>> EigenCache::load(const std::string& path, const PotentialModel& model,
                                                        double solver_tol, int count, std::string* why) {
  auto fail = [&](const std::string& msg) -> std::optional<std::vector<EigRecord>> {
    if (why != nullptr) *why = msg;
    return std::nullopt;
  };
  std::ifstream in(path);
  if (!in) return fail("no cache file");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    return fail(std::string("cache is corrupt: ") + e.what());
  }
  try {
    if (j.at("schema").get<int>() != 1) return fail("unsupported cache schema");
    if (j.at("model").get<std::string>() != model.name()) return fail("cache is for another model");
    if (j.at("solver_tol").get<double>() != solver_tol) return fail("cache solver tolerance differs");
    std::vector<EigRecord> recs;
    for (const auto& r : j.at("records")) {
      EigRecord e;
      e.index = r.at("index").get<int>();
      e.parity = parity_from_name(r.at("parity").get<std::string>());
      e.lambda = r.at("lambda").get<double>();
      e.residual = r.at("residual").get<double>();
      const std::size_t i = recs.size();
      if (e.index != static_cast<int>(i) + 1 || !std::isfinite(e.lambda) || !std::isfinite(e.residual) ||
          (i > 0 && !(e.lambda > recs.back().lambda)) || e.parity != parity_of(model, e.index))
        return fail("cache records are inconsistent");
      recs.push_back(e);
    }
    if (static_cast<int>(recs.size()) < count) return fail("cache holds too few records");
    recs.resize(static_cast<std::size_t>(count));
    return recs;
  } catch (const std::exception& e) {
    return fail(std::string("cache is corrupt: ") + e.what());
  }
}

void EigenCache::save(const std::string& path, const PotentialModel& model, double solver_tol,
                      const std::vector<EigRecord>& records) {
  nlohmann::json j;
  j["schema"] = 1;
  j["model"] = model.name();
  j["solver_tol"] = solver_tol;
  j["records"] = nlohmann::json::array();
  for (const EigRecord& r : records)
    j["records"].push_back(
        {{"index", r.index}, {"parity", parity_name(r.parity)}, {"lambda", r.lambda}, {"residual", r.residual}});
  // Write a sibling file and rename it so readers never see a partial cache.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DomainError("cannot write cache file " + tmp);
    out << j.dump(2) << '\n';
    if (!out) throw DomainError("failed writing cache file " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace mtrace
