#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mtrace/cli.hpp"
#include "mtrace/errors.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = mtrace::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mtrace_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("eig command") {
  ::unsetenv(mtrace::cli::kCacheEnv);
  SUBCASE("harmonic table") {
    const Run r = run({"eig", "harmonic", "--count", "5"});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0][2] == "lambda");
    for (int n = 1; n <= 5; ++n) CHECK(std::stod(rows[n][2]) == doctest::Approx(2 * n - 1).epsilon(1e-9));
  }
  SUBCASE("cosh records to a file") {
    const fs::path dir = scratch_dir("eig");
    const std::string file = (dir / "eigs.json").string();
    const Run r = run({"eig", "cosh", "--count", "10", "--out", file, "--format", "json"});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream f(file);
    const json j = json::parse(f);
    CHECK(j["schema"] == 1);
    REQUIRE(j["records"].size() == 10);
    for (int i = 0; i < 10; ++i) CHECK(j["records"][i]["parity"] == (i % 2 == 0 ? "even" : "odd"));
    CHECK(!fs::exists(file + ".tmp"));
  }
  SUBCASE("unknown model") {
    const Run r = run({"eig", "bogus"});
    CHECK(r.code == 1);
    CHECK(r.err.find("cosh, exp, harmonic") != std::string::npos);
  }
  SUBCASE("usage errors") {
    CHECK(run({"eig", "exp", "--count", "61"}).code == 1);
    CHECK(run({"eig"}).code == 1);
    CHECK(run({}).code == 1);
    CHECK(run({"eig", "exp", "--no-such-flag"}).code == 1);
  }
}

TEST_CASE("det command") {
  ::unsetenv(mtrace::cli::kCacheEnv);
  auto value = [](const Run& r) { return std::stod(csv_rows(r.out)[1][3]); };
  const Run h = run({"det", "harmonic", "--lambda", "-3"});
  REQUIRE(h.code == 0);
  CHECK(value(h) == doctest::Approx(5.0133).epsilon(1e-4));
  const Run e = run({"det", "exp", "--lambda", "-25"});
  REQUIRE(e.code == 0);
  CHECK(value(e) ==
        doctest::Approx(boost::math::cyl_bessel_k(5.0, 1.0) / boost::math::cyl_bessel_k(0.0, 1.0)).epsilon(1e-9));
  const Run c = run({"det", "cosh", "--lambda", "0"});
  REQUIRE(c.code == 0);
  CHECK(value(c) == doctest::Approx(1.0).epsilon(1e-12));

  const Run p = run({"det", "harmonic", "--lambda", "-1", "--method", "product", "--format", "json"});
  REQUIRE(p.code == 0);
  const json j = json::parse(p.out);
  CHECK(j["method"] == "product");
  CHECK(j["error"].get<double>() > 0.0);
  CHECK(std::abs(j["a"].get<double>() - std::sqrt(2.0) * std::sqrt(M_PI) / std::tgamma(1.0)) <=
        j["error"].get<double>() + 1e-6);

  CHECK(run({"det", "exp", "--lambda", "-1", "--method", "magic"}).code == 1);
  // Reference level 0 is fine, but an eigenvalue as lambda gives a = 0, not an error.
  CHECK(run({"det", "harmonic", "--lambda", "1"}).code == 0);
}

TEST_CASE("trace command") {
  SUBCASE("exp report certifies orders") {
    const Run r = run({"trace", "exp", "--nu-grid", "5:80:12", "--order", "2"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["schema"] == 1);
    CHECK(j["residual_orders"][1].get<double>() <= -1.5);
    CHECK(j["residual_orders"][2].get<double>() <= -2.5);
  }
  SUBCASE("cosh with log basis") {
    const Run r = run({"trace", "cosh", "--nu-grid", "6:48:8", "--order", "1", "--log-basis"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j["log_term_amplitudes"].is_array());
    CHECK(j["log_term_amplitudes"].size() == 1);
  }
  SUBCASE("csv output") {
    const Run r = run({"trace", "harmonic", "--order", "1", "--format", "csv"});
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    CHECK(rows.size() == 13);
    CHECK(rows[0].size() == 7);
  }
  SUBCASE("uncertified orders exit 3") {
    // At nu ~ 10^3 the third-order residual sinks to the rounding level of log a.
    const Run r = run({"trace", "exp", "--nu-grid", "200:1600:8", "--order", "3"});
    CHECK(r.code == 3);
    const json j = json::parse(r.out);
    CHECK(j["certified"][2] == true);
    CHECK(j["certified"][3] == false);
  }
  SUBCASE("validation") {
    CHECK(run({"trace", "cosh", "--order", "99"}).code == 1);
    CHECK(run({"trace", "cosh", "--nu-grid", "6:8:8"}).code == 1);
    CHECK(run({"trace", "cosh", "--nu-grid", "6-48-8"}).code == 1);
  }
  SUBCASE("deterministic output") {
    const Run a = run({"--threads", "1", "trace", "cosh", "--nu-grid", "6:24:6", "--order", "1"});
    const Run b = run({"--threads", "3", "trace", "cosh", "--nu-grid", "6:24:6", "--order", "1"});
    CHECK(a.out == b.out);
  }
}

TEST_CASE("verify command") {
  const Run r = run({"verify", "picard"});
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS picard/remainder_bound") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
  const Run s = run({"verify", "specfun", "--format", "json"});
  CHECK(s.code == 0);
  CHECK(json::parse(s.out)["passed"] == true);
  CHECK(run({"verify", "nonsense"}).code == 1);
}

TEST_CASE("configuration") {
  ::unsetenv(mtrace::cli::kCacheEnv);
  const fs::path dir = scratch_dir("config");
  auto write = [&](const std::string& name, const std::string& text) {
    const std::string p = (dir / name).string();
    std::ofstream(p) << text;
    return p;
  };
  SUBCASE("values from file, flags win") {
    const std::string cfg = write("a.json", R"({"model": "harmonic", "count": 3, "format": "json"})");
    const Run r = run({"--config", cfg, "eig"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["records"].size() == 3);
    const Run r2 = run({"--config", cfg, "eig", "--count", "2", "--format", "csv"});
    REQUIRE(r2.code == 0);
    CHECK(csv_rows(r2.out).size() == 3);
  }
  SUBCASE("unknown keys are rejected") {
    const std::string cfg = write("b.json", R"({"model": "exp", "colour": "red"})");
    const Run r = run({"--config", cfg, "eig"});
    CHECK(r.code == 1);
    CHECK(r.err.find("colour") != std::string::npos);
  }
  SUBCASE("tolerance range") {
    CHECK(run({"--solver-tol", "1e-3", "det", "exp", "--lambda", "-1"}).code == 1);
    CHECK(run({"--quad-tol", "1e-16", "det", "exp", "--lambda", "-1"}).code == 1);
    const std::string cfg = write("c.json", R"({"solver_tol": 1e-15})");
    CHECK(run({"--config", cfg, "det", "exp", "--lambda", "-1"}).code == 1);
    CHECK(run({"--solver-tol", "1e-9", "det", "exp", "--lambda", "-1"}).code == 0);
  }
  SUBCASE("malformed file") {
    const std::string cfg = write("d.json", "{ not json");
    CHECK(run({"--config", cfg, "eig", "exp"}).code == 1);
    CHECK(run({"--config", (dir / "missing.json").string(), "eig", "exp"}).code == 1);
  }
}

TEST_CASE("eigenvalue cache") {
  const fs::path dir = scratch_dir("cache");
  ::setenv(mtrace::cli::kCacheEnv, dir.string().c_str(), 1);
  const Run first = run({"eig", "exp", "--count", "4"});
  REQUIRE(first.code == 0);
  const fs::path file = dir / "eigen_exp.json";
  REQUIRE(fs::exists(file));

  SUBCASE("reused") {
    const Run again = run({"eig", "exp", "--count", "3"});
    CHECK(again.code == 0);
    CHECK(again.err.empty());
    CHECK(csv_rows(again.out).size() == 4);
  }
  SUBCASE("truncated file is rebuilt") {
    const auto size = fs::file_size(file);
    fs::resize_file(file, size / 2);
    const Run again = run({"eig", "exp", "--count", "4"});
    CHECK(again.code == 0);
    CHECK(again.err.find("rebuilding") != std::string::npos);
    CHECK(again.out == first.out);
    CHECK(fs::file_size(file) == size);
  }
  SUBCASE("the flag overrides the environment") {
    const fs::path other = scratch_dir("cache_flag");
    CHECK(run({"--cache", other.string(), "eig", "exp", "--count", "2"}).code == 0);
    CHECK(fs::exists(other / "eigen_exp.json"));
  }
  ::unsetenv(mtrace::cli::kCacheEnv);
}

TEST_CASE("nu grid syntax") {
  const auto g = mtrace::cli::parse_nu_grid("5:80:5");
  REQUIRE(g.size() == 5);
  CHECK(g[0] == 5.0);
  CHECK(g[4] == 80.0);
  CHECK(g[2] == doctest::Approx(20.0));
  CHECK_THROWS_AS(mtrace::cli::parse_nu_grid("5:80"), mtrace::DomainError);
  CHECK_THROWS_AS(mtrace::cli::parse_nu_grid("80:5:4"), mtrace::DomainError);
  CHECK_THROWS_AS(mtrace::cli::parse_nu_grid("5:80:1"), mtrace::DomainError);
  CHECK_THROWS_AS(mtrace::cli::parse_nu_grid("5:80:4x"), mtrace::DomainError);
}
