#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mtrace/ode.hpp"
#include "mtrace/potential.hpp"
#include "mtrace/specfun.hpp"

namespace mtrace {

/// psi_1 and its derivative at x = 0 for one value of lambda.
struct ShootResult {
  double lambda = 0.0;
  specfun::LogValue psi0;
  specfun::LogValue dpsi0;
  /// -2 psi0 dpsi0 for line models; absent (sign 0) on the half line.
  specfun::LogValue t12{0.0, 0};
  /// Eigenvalues strictly below lambda (Sturm count: both parities on the line).
  int count_below = 0;
};

ShootResult shoot(const PotentialModel& model, double lambda, const OdeOptions& opts = {});

/// a(lambda) = psi(0,lambda)/psi(0,ref) (half line) or t12(lambda)/t12(ref)
/// (line), in log form.  Throws ReferenceAtEigenvalue if ref is (numerically)
/// an eigenvalue.
specfun::LogValue fredholm_log_a(const PotentialModel& model, double lambda, double lambda_ref = 0.0,
                                 const OdeOptions& opts = {});
double fredholm_a(const PotentialModel& model, double lambda, double lambda_ref = 0.0, const OdeOptions& opts = {});

enum class Parity { even, odd, none };
std::string parity_name(Parity p);
Parity parity_from_name(const std::string& s);

struct EigRecord {
  int index = 0;
  Parity parity = Parity::none;
  double lambda = 0.0;
  double residual = 0.0;
};

struct EigenOptions {
  OdeOptions ode;
  unsigned threads = 0;
  double rel_width = 1e-10;
};

/// The lowest `count` eigenvalues (count <= 60), both parities merged for line
/// models.  Throws BracketNotFound if refinement fails to isolate a root.
std::vector<EigRecord> eigenvalues(const PotentialModel& model, int count, const EigenOptions& opts = {});

/// Weyl counting function (1/pi) int sqrt(mu - q)_+ dx and its derivative.
double weyl_count(const PotentialModel& model, double mu);
double weyl_density(const PotentialModel& model, double mu);

/// (sqrt(lambda)/pi) log(2 sqrt(lambda)/e): leading count for the exp model.
double exp_counting_estimate(double lambda);
/// Inverse of the count above: lambda_n = (pi n / W(2 pi n / e))^2.
double exp_lambert_eigenvalue(int n);

struct ProductEstimate {
  double value = 0.0;
  double log_value = 0.0;
  /// Error bar on value.
  double error = 0.0;
};

/// Product formula for a(lambda) from known eigenvalues with a Weyl-density
/// tail of order `tail_order` (1 or 2).  The harmonic determinant has order 1,
/// so its product carries the genus-one factors e^{lambda/lambda_n} and
/// e^{c lambda}, c = (log a)'(0) from shooting.
ProductEstimate product_crosscheck(const PotentialModel& model, double lambda, const std::vector<EigRecord>& eigs,
                                   int tail_order = 2, const OdeOptions& opts = {});

/// JSON eigenvalue cache {schema, model, solver_tol, records}.
struct EigenCache {
  /// Records if the file exists, parses, matches model and tolerance and holds
  /// at least `count` consistent records; otherwise nullopt with `why` set.
  static std::optional<std::vector<EigRecord>> load(const std::string& path, const PotentialModel& model,
                                                    double solver_tol, int count, std::string* why = nullptr);
  static void save(const std::string& path, const PotentialModel& model, double solver_tol,
                   const std::vector<EigRecord>& records);
};

}  // namespace mtrace
