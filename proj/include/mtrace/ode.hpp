#pragma once

#include <vector>

#include "mtrace/potential.hpp"

namespace mtrace {

struct OdeOptions {
  double rtol = 1e-11;
  double atol = 1e-14;
  /// Seed thresholds: q(x0) >= max(q_ratio |lambda|, q_floor).
  double q_ratio = 10.0;
  double q_floor = 1e4;
  /// Largest acceptable LG seed error.
  double seed_tol = 1e-10;
  /// Integration leaves the sigma form once |Q'| / Q^{3/2} exceeds this.
  double lg_breakdown = 2.0;
  long max_steps = 5'000'000;
};

/// Liouville-Green seed of the decaying solution at x0.
///
/// psi is normalized by a fixed, model-specific asymptotic form N(x):
/// exp: N = e^{-x/2} e^{-(e^x - 1)} (q^{-1/4} e^{-int_0^x sqrt(q)});
/// cosh: N = sqrt(pi/2) e^{-x/2} e^{-e^x} (the K-Bessel tail);
/// harmonic: N = x^{(lambda-1)/2} e^{-x^2/2} (parabolic cylinder tail).
/// log_psi includes the tail integral of the LG correction sigma beyond x0.
struct LGSeed {
  double x0 = 0.0;
  double log_psi = 0.0;
  double dlog_psi = 0.0;
  /// sigma(x0) and the tail -int_{x0}^inf sigma dx.
  double sigma = 0.0;
  double chi = 0.0;
  double est_error = 0.0;
};

/// Asymptotic sigma at x from the fixed-point iteration
/// sigma = (sigma' + sigma^2 - (Q'/2Q) sigma - V) / (2 sqrt Q); `change`
/// receives the size of the last correction.
double lg_sigma(const PotentialModel& model, double lambda, double x, double* change = nullptr);

/// int_x^inf sigma (upper = true) or int_{-inf}^x sigma (upper = false) of the
/// asymptotic sigma; valid where Q is large.
double lg_sigma_tail(const PotentialModel& model, double lambda, double x, bool upper, double* error = nullptr);

/// Smallest admissible seed abscissa (see OdeOptions).
double seed_abscissa(const PotentialModel& model, double lambda, const OdeOptions& opts = {});

/// Throws SeedPointTooSmall if x0 violates the thresholds in `opts`.
LGSeed lg_seed(const PotentialModel& model, double lambda, double x0, const OdeOptions& opts = {});

struct SolutionPath {
  double lambda = 0.0;
  double x0 = 0.0;
  double seed_error = 0.0;
  std::vector<double> grid;
  /// log|psi|, sign of psi, psi'/psi at each grid point.
  std::vector<double> log_psi;
  std::vector<int> sign;
  std::vector<double> dlog_psi;
  /// psi' as (log|psi'|, sign); finite even where psi vanishes.
  std::vector<double> log_dpsi;
  std::vector<int> dsign;
  /// sigma and chi = -int_x^inf sigma where the LG form is in use, NaN after
  /// the switch to the linear form.
  std::vector<double> sigma;
  std::vector<double> chi;
  /// Zeros of psi in [x, x0].
  std::vector<int> zeros;
  long steps = 0;
};

/// Integrates the decaying solution downward from the seed at x0 and records
/// it at `targets` (strictly descending, all < x0).  With x0 <= 0 the seed
/// abscissa is chosen automatically.
SolutionPath integrate_psi1(const PotentialModel& model, double lambda, double x0, const std::vector<double>& targets,
                            const OdeOptions& opts = {});

/// sigma = psi'/psi + Q'/4Q + sqrt(Q) at a grid point of `path`; throws
/// OffGrid if x is not on the grid.
double sigma_of_x(const PotentialModel& model, double lambda, const SolutionPath& path, double x);

/// Result of the successive-approximation construction of psi_1 for the cosh
/// model at lambda = k^2 (perturbation e^{-2x} of q = e^{2x}).
struct PicardResult {
  double k = 0.0;
  std::vector<double> grid;
  /// iterates[n][i] = f_n(grid[i]) scaled by e^{e^x}; partial[i] = sum_n f_n scaled likewise.
  std::vector<std::vector<double>> iterates;
  std::vector<double> partial;
};

/// f_0 = K_{ik}(e^x), f_n(x) = int_x^inf G(x,y) e^{-2y} f_{n-1}(y) dy with
/// G(x,y) = g(x) K(y) - K(x) g(y), g = Re I_{-ik}(e^x).  Evaluation grid in
/// [0.5, 6], n_max <= 6.
PicardResult picard_psi1(double k, const std::vector<double>& x_eval, int n_max);

}  // namespace mtrace
