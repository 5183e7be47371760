#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mtrace::cli {

enum ExitCode : int { ok = 0, usage = 1, numerical = 2, uncertified = 3 };

/// Environment variable naming the eigenvalue cache directory.
inline constexpr const char* kCacheEnv = "MTRACE_CACHE_DIR";

/// Effective settings of one invocation.  Sources in increasing priority:
/// defaults, --config JSON file, MTRACE_CACHE_DIR (cache only), flags.
struct RunConfig {
  std::string model;
  double solver_tol = 1e-11;
  double quad_tol = 1e-12;
  /// "csv" or "json"; empty selects the command's default.
  std::string format;
  /// Directory for eigenvalue caches; empty disables caching.
  std::string cache;
  unsigned threads = 0;

  int count = 10;
  double lambda = 0.0;
  std::string method = "shoot";
  int product_count = 40;
  std::string nu_grid;
  int order = 2;
  bool log_basis = false;
  std::string out;
  std::string suite = "all";
};

/// Parses "a:b:n" into n logarithmically spaced points; throws DomainError.
std::vector<double> parse_nu_grid(const std::string& spec);

/// Runs the command line `args` (without the program name).  Results go to
/// `out` (or the --out file), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mtrace::cli
