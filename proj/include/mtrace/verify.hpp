#pragma once

#include <string>
#include <vector>

#include "mtrace/ode.hpp"

namespace mtrace {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  OdeOptions ode;
  /// Tolerance of the reference quadratures in the specfun suite.
  double quad_tol = 1e-12;
  unsigned threads = 0;
};

/// Suites: "specfun", "identities", "picard" or "all".  Each check compares
/// two independent internal pipelines; throws DomainError for unknown suites.
std::vector<CheckResult> run_verify(const std::string& suite, const VerifyOptions& opts = {});

std::vector<std::string> verify_suites();

}  // namespace mtrace
