#include "mtrace/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mtrace/errors.hpp"
#include "mtrace/potential.hpp"
#include "mtrace/spectrum.hpp"
#include "mtrace/traceid.hpp"
#include "mtrace/verify.hpp"

namespace mtrace::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string valid_models() {
  std::string s;
  for (const auto& n : PotentialModel::names()) s += (s.empty() ? "" : ", ") + n;
  return s;
}

PotentialModel parse_model(const std::string& name) {
  try {
    return PotentialModel::from_name(name);
  } catch (const DomainError&) {
    throw UsageError("unknown model '" + name + "'; valid models: " + valid_models());
  }
}

OdeOptions ode_options(const RunConfig& cfg) {
  OdeOptions o;
  o.rtol = cfg.solver_tol;
  o.atol = cfg.solver_tol * 1e-3;
  return o;
}

std::string fmt_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

void emit(const RunConfig& cfg, const std::string& text, std::ostream& out) {
  if (cfg.out.empty()) {
    out << text;
    return;
  }
  const fs::path path(cfg.out);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw UsageError("cannot write " + tmp.string());
    f << text;
    if (!f) throw NumericalError("write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path);
}

std::vector<EigRecord> eigen_records(const PotentialModel& model, int count, const RunConfig& cfg, std::ostream& err) {
  std::string path;
  if (!cfg.cache.empty()) path = (fs::path(cfg.cache) / ("eigen_" + model.name() + ".json")).string();
  if (!path.empty()) {
    std::string why;
    if (auto cached = EigenCache::load(path, model, cfg.solver_tol, count, &why)) {
      cached->resize(static_cast<std::size_t>(count));
      return *cached;
    }
    if (fs::exists(path)) err << "eigenvalue cache " << path << " not used (" << why << "); rebuilding\n";
  }
  EigenOptions eo;
  eo.ode = ode_options(cfg);
  eo.threads = cfg.threads;
  auto records = eigenvalues(model, count, eo);
  if (!path.empty()) {
    fs::create_directories(cfg.cache);
    EigenCache::save(path, model, cfg.solver_tol, records);
  }
  return records;
}

int cmd_eig(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const PotentialModel model = parse_model(cfg.model);
  if (cfg.count < 1 || cfg.count > 60) throw UsageError("--count must lie in [1, 60]");
  const auto records = eigen_records(model, cfg.count, cfg, err);
  std::ostringstream s;
  if (cfg.format == "json") {
    json j{{"schema", 1}, {"model", model.name()}, {"solver_tol", cfg.solver_tol}};
    j["records"] = json::array();
    for (const auto& r : records)
      j["records"].push_back(
          {{"index", r.index}, {"parity", parity_name(r.parity)}, {"lambda", r.lambda}, {"residual", r.residual}});
    s << j.dump(2) << "\n";
  } else {
    s << "index,parity,lambda,residual\n";
    for (const auto& r : records)
      s << r.index << ',' << parity_name(r.parity) << ',' << fmt_double(r.lambda) << ',' << fmt_double(r.residual)
        << "\n";
  }
  emit(cfg, s.str(), out);
  return ok;
}

int cmd_det(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const PotentialModel model = parse_model(cfg.model);
  if (cfg.method != "shoot" && cfg.method != "product") throw UsageError("--method must be shoot or product");
  double log_abs = 0.0, error = std::nan("");
  int sign = 1;
  if (cfg.method == "shoot") {
    const auto la = fredholm_log_a(model, cfg.lambda, 0.0, ode_options(cfg));
    log_abs = la.log_abs;
    sign = la.sign;
  } else {
    if (cfg.product_count < 3 || cfg.product_count > 60) throw UsageError("--count must lie in [3, 60]");
    const auto eigs = eigen_records(model, cfg.product_count, cfg, err);
    const auto p = product_crosscheck(model, cfg.lambda, eigs, 2, ode_options(cfg));
    log_abs = p.log_value;
    sign = p.value < 0 ? -1 : 1;
    error = p.error;
  }
  const double value = sign * std::exp(log_abs);
  std::ostringstream s;
  if (cfg.format == "json") {
    json j{{"schema", 1},   {"model", model.name()}, {"lambda", cfg.lambda}, {"method", cfg.method},
           {"log_abs_a", log_abs}, {"sign", sign}};
    j["a"] = std::isfinite(value) ? json(value) : json(nullptr);
    j["error"] = std::isfinite(error) ? json(error) : json(nullptr);
    s << j.dump(2) << "\n";
  } else {
    s << "model,lambda,method,a,log_abs_a,sign,error\n";
    s << model.name() << ',' << fmt_double(cfg.lambda) << ',' << cfg.method << ',' << fmt_double(value) << ','
      << fmt_double(log_abs) << ',' << sign << ',' << (std::isfinite(error) ? fmt_double(error) : "") << "\n";
  }
  emit(cfg, s.str(), out);
  return ok;
}

int cmd_trace(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const PotentialModel model = parse_model(cfg.model);
  if (cfg.order < 0 || cfg.order > 4) throw UsageError("--order must lie in [0, 4]");
  std::string grid_spec = cfg.nu_grid;
  if (grid_spec.empty()) grid_spec = model.kind() == ModelKind::cosh_line ? "6:48:8" : "5:80:12";
  ReportOptions ro;
  ro.ode = ode_options(cfg);
  ro.threads = cfg.threads;
  ro.log_basis = cfg.log_basis;
  const auto rep = report(model, parse_nu_grid(grid_spec), cfg.order, ro);
  emit(cfg, cfg.format == "csv" ? rep.to_csv() : rep.to_json() + "\n", out);
  return rep.all_certified() ? ok : uncertified;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto suites = verify_suites();
  if (std::find(suites.begin(), suites.end(), cfg.suite) == suites.end())
    throw UsageError("unknown suite '" + cfg.suite + "' (specfun, identities, picard, all)");
  VerifyOptions vo;
  vo.ode = ode_options(cfg);
  vo.quad_tol = cfg.quad_tol;
  vo.threads = cfg.threads;
  const auto results = run_verify(cfg.suite, vo);
  const bool all_pass = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  std::ostringstream s;
  if (cfg.format == "json") {
    json j{{"schema", 1}, {"suite", cfg.suite}, {"passed", all_pass}};
    j["checks"] = json::array();
    for (const auto& r : results)
      j["checks"].push_back({{"suite", r.suite}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    s << j.dump(2) << "\n";
  } else {
    for (const auto& r : results)
      s << (r.passed ? "PASS " : "FAIL ") << r.suite << '/' << r.name << ": " << r.detail << "\n";
  }
  emit(cfg, s.str(), out);
  return all_pass ? ok : numerical;
}

// Applies keys of a JSON config file to fields whose flags were not given.
void apply_config(const std::string& path, RunConfig& cfg, const std::map<std::string, bool>& given) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold a JSON object");
  using Setter = std::function<void(const json&)>;
  const std::map<std::string, Setter> setters{
      {"model", [&](const json& v) { cfg.model = v.get<std::string>(); }},
      {"solver_tol", [&](const json& v) { cfg.solver_tol = v.get<double>(); }},
      {"quad_tol", [&](const json& v) { cfg.quad_tol = v.get<double>(); }},
      {"format", [&](const json& v) { cfg.format = v.get<std::string>(); }},
      {"cache", [&](const json& v) { cfg.cache = v.get<std::string>(); }},
      {"threads", [&](const json& v) { cfg.threads = v.get<unsigned>(); }},
      {"count", [&](const json& v) { cfg.count = cfg.product_count = v.get<int>(); }},
      {"lambda", [&](const json& v) { cfg.lambda = v.get<double>(); }},
      {"method", [&](const json& v) { cfg.method = v.get<std::string>(); }},
      {"nu_grid", [&](const json& v) { cfg.nu_grid = v.get<std::string>(); }},
      {"order", [&](const json& v) { cfg.order = v.get<int>(); }},
      {"log_basis", [&](const json& v) { cfg.log_basis = v.get<bool>(); }},
      {"out", [&](const json& v) { cfg.out = v.get<std::string>(); }},
      {"suite", [&](const json& v) { cfg.suite = v.get<std::string>(); }},
  };
  for (const auto& [key, value] : j.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw UsageError("unknown config key '" + key + "'");
    if (given.count(key) && given.at(key)) continue;
    try {
      it->second(value);
    } catch (const json::exception&) {
      throw UsageError("config key '" + key + "' has the wrong type");
    }
  }
}

void validate(const RunConfig& cfg) {
  auto tol_ok = [](double t) { return t >= 1e-14 && t <= 1e-6; };
  if (!tol_ok(cfg.solver_tol)) throw UsageError("solver_tol must lie in [1e-14, 1e-6]");
  if (!tol_ok(cfg.quad_tol)) throw UsageError("quad_tol must lie in [1e-14, 1e-6]");
  if (!cfg.format.empty() && cfg.format != "csv" && cfg.format != "json")
    throw UsageError("format must be csv or json");
}

}  // namespace

std::vector<double> parse_nu_grid(const std::string& spec) {
  const auto first = spec.find(':');
  const auto second = spec.find(':', first == std::string::npos ? first : first + 1);
  if (first == std::string::npos || second == std::string::npos)
    throw DomainError("nu grid must have the form a:b:n");
  double a = 0, b = 0;
  long n = 0;
  try {
    std::size_t pa = 0, pb = 0, pn = 0;
    const std::string sa = spec.substr(0, first), sb = spec.substr(first + 1, second - first - 1),
                      sn = spec.substr(second + 1);
    a = std::stod(sa, &pa);
    b = std::stod(sb, &pb);
    n = std::stol(sn, &pn);
    if (pa != sa.size() || pb != sb.size() || pn != sn.size()) throw std::invalid_argument("trailing");
  } catch (const std::logic_error&) {
    throw DomainError("nu grid must have the form a:b:n");
  }
  if (!(a > 0.0) || !(b > a) || n < 2 || n > 1000) throw DomainError("nu grid needs 0 < a < b and 2 <= n <= 1000");
  std::vector<double> g;
  for (long i = 0; i < n; ++i) g.push_back(a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(n - 1)));
  g.back() = b;
  return g;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::string config_path;
  CLI::App app{"Spectral determinants and trace identities for 1D Schrodinger operators", "mtrace"};
  app.require_subcommand(1);
  std::vector<std::pair<std::string, CLI::Option*>> flags;
  auto track = [&](const std::string& key, CLI::Option* o) { flags.emplace_back(key, o); };

  app.add_option("--config", config_path, "JSON file with default settings")->check(CLI::ExistingFile);
  track("solver_tol", app.add_option("--solver-tol", cfg.solver_tol, "ODE relative tolerance"));
  track("quad_tol", app.add_option("--quad-tol", cfg.quad_tol, "Reference quadrature tolerance"));
  track("format", app.add_option("--format", cfg.format, "Output format (csv or json)"));
  track("cache", app.add_option("--cache", cfg.cache, std::string("Eigenvalue cache directory (env ") + kCacheEnv + ")"));
  track("threads", app.add_option("--threads", cfg.threads, "Worker threads (0 = hardware)"));
  track("out", app.add_option("--out", cfg.out, "Write results to this file"));

  auto* eig = app.add_subcommand("eig", "Lowest eigenvalues");
  eig->fallthrough();
  track("model", eig->add_option("model", cfg.model, "cosh, exp or harmonic"));
  track("count", eig->add_option("--count", cfg.count, "Number of eigenvalues (<= 60)"));

  auto* det = app.add_subcommand("det", "Normalized determinant a(lambda)");
  det->fallthrough();
  track("model", det->add_option("model", cfg.model, "cosh, exp or harmonic"));
  track("lambda", det->add_option("--lambda", cfg.lambda, "Spectral parameter"));
  track("method", det->add_option("--method", cfg.method, "shoot or product"));
  track("count", det->add_option("--count", cfg.product_count, "Eigenvalues used by the product"));

  auto* trace = app.add_subcommand("trace", "Asymptotic expansion report of log a");
  trace->fallthrough();
  track("model", trace->add_option("model", cfg.model, "cosh, exp or harmonic"));
  track("nu_grid", trace->add_option("--nu-grid", cfg.nu_grid, "a:b:n, n log-spaced points"));
  track("order", trace->add_option("--order", cfg.order, "Highest coefficient N (<= 4)"));
  track("log_basis", trace->add_flag("--log-basis", cfg.log_basis, "Fit nu^-n log nu amplitudes"));

  auto* verify = app.add_subcommand("verify", "Run internal consistency suites");
  verify->fallthrough();
  track("suite", verify->add_option("suite", cfg.suite, "specfun, identities, picard or all"));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? ok : usage;
  }

  try {
    std::map<std::string, bool> given;
    for (const auto& [key, opt] : flags) given[key] = given[key] || opt->count() > 0;
    if (!config_path.empty()) apply_config(config_path, cfg, given);
    if (!given["cache"])
      if (const char* env = std::getenv(kCacheEnv)) cfg.cache = env;
    validate(cfg);
    if (eig->parsed() || det->parsed() || trace->parsed()) {
      if (cfg.model.empty()) throw UsageError("a model is required; valid models: " + valid_models());
    }
    if (eig->parsed()) return cmd_eig(cfg, out, err);
    if (det->parsed()) return cmd_det(cfg, out, err);
    if (trace->parsed()) return cmd_trace(cfg, out, err);
    return cmd_verify(cfg, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return numerical;
  }
}

}  // namespace mtrace::cli
