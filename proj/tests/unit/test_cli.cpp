#include "doctest.h"

#include "qedcoh/cli.hpp"
#include "qedcoh/csv.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

using namespace qedcoh::cli;

namespace {

struct Run
{
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args)
{
  args.insert(args.begin(), "qedcoh");
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text)
{
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) {
    out.push_back(l);
  }
  return out;
}

std::vector<double> fields(const std::string& row)
{
  std::vector<double> out;
  std::istringstream is(row);
  for (std::string cell; std::getline(is, cell, ',');) {
    out.push_back(std::stod(cell));
  }
  return out;
}

/// Value of a "key = value" report line.
double report_value(const std::string& report, const std::string& key)
{
  for (const auto& l : lines(report)) {
    if (l.rfind(key + " = ", 0) == 0) {
      return std::stod(l.substr(key.size() + 3));
    }
  }
  FAIL("missing report key " << key);
  return 0.0;
}

std::filesystem::path temp_file(const std::string& name)
{
  return std::filesystem::temp_directory_path() / ("qedcoh_test_" + name);
}

std::string slurp(const std::filesystem::path& p)
{
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

} // namespace

TEST_CASE("csv formatting")
{
  CHECK(format_number(-1.5) == "-1.5");
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(2.0e-15) == "2e-15");
  std::ostringstream os;
  CsvWriter csv(os, {"a", "b"});
  csv.row(std::vector<double>{1.0, 2.5});
  CHECK(os.str() == "a,b\n1,2.5\n");
  CHECK_THROWS_AS(csv.row(std::vector<double>{1.0}), std::logic_error);
}

TEST_CASE("kappa-sweep: sphere and smoke grid")
{
  const auto sphere = run({"kappa-sweep", "--shape", "sphere"});
  CHECK(sphere.code == 0);
  CHECK(sphere.out == "beta,kappa,error_estimate\n-,-1.5,0\n");

  const auto two = run({"kappa-sweep", "--beta-min", "1", "--beta-max", "4", "--steps", "2"});
  CHECK(two.code == 0);
  const auto rows = lines(two.out);
  // beta = 2 is bracketed and joins the grid.
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "beta,kappa,error_estimate");
  CHECK(fields(rows[1])[0] == 1.0);
  CHECK(fields(rows[2])[0] == 2.0);
  CHECK(fields(rows[3])[0] == 4.0);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::isfinite(fields(rows[i])[1]));
  }

  const auto no_cusp = run({"kappa-sweep", "--beta-min", "3", "--beta-max", "4", "--steps", "2", "--linear"});
  CHECK(lines(no_cusp.out).size() == 3);
}

TEST_CASE("kappa-sweep: cusp at beta = 2")
{
  const auto r = run({"kappa-sweep", "--beta-min", "1.9", "--beta-max", "2.1", "--steps", "3", "--linear"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 4);
  const auto lo = fields(rows[1]);
  const auto mid = fields(rows[2]);
  const auto hi = fields(rows[3]);
  CHECK(mid[0] == 2.0);
  const double h = 0.1;
  const double left = (mid[1] - lo[1]) / h;
  const double right = (hi[1] - mid[1]) / h;
  CHECK(std::abs(left - right) > 5.0 * (lo[2] + 2.0 * mid[2] + hi[2]) / h);
}

TEST_CASE("kappa-sweep: input errors")
{
  CHECK(run({"kappa-sweep", "--beta-min", "2", "--beta-max", "1"}).code == 2);
  CHECK(run({"kappa-sweep", "--steps", "1"}).code == 2);
  CHECK(run({"kappa-sweep", "--shape", "cube"}).code == 2);
}

TEST_CASE("parallel: defaults reproduce the plateau")
{
  const auto r = run({"parallel"});
  REQUIRE(r.code == 0);
  const double w = report_value(r.out, "W");
  CHECK(w == doctest::Approx(0.0248781871011).epsilon(1e-4));
  CHECK(w == doctest::Approx(report_value(r.out, "W_plateau")).epsilon(1e-4));
  CHECK(report_value(r.out, "W_V") + report_value(r.out, "W_gamma") == doctest::Approx(w).epsilon(1e-11));
  CHECK(report_value(r.out, "contrast") == doctest::Approx(std::exp(w)).epsilon(1e-11));
  CHECK(r.out.find("kernel = exact") != std::string::npos);
}

TEST_CASE("parallel: T sweep plateaus")
{
  const auto r = run({"parallel", "--sweep", "T", "--sweep-min", "1e4", "--sweep-max", "1e7", "--sweep-steps", "4"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "T,w_vacuum,w_photon,w_total");
  const double last = fields(rows[4])[3];
  const double previous = fields(rows[3])[3];
  CHECK(std::abs(last - previous) < 1e-3 * std::abs(last));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    CHECK(f[1] + f[2] == doctest::Approx(f[3]).epsilon(1e-11));
  }
}

TEST_CASE("parallel: validation exits with code 2 and names the invariant")
{
  const auto r = run({"parallel", "--r0", "0"});
  CHECK(r.code == 2);
  CHECK(r.err.find("r0 must be positive") != std::string::npos);
  CHECK(run({"parallel", "--v", "1.5"}).code == 2);
  CHECK(run({"parallel", "--kernel", "fancy"}).code == 2);
  CHECK(run({"parallel", "--sweep", "T"}).code == 2);
  CHECK(run({"parallel", "--no-such-flag"}).code == 2);
  CHECK(run({}).code == 2);
}

TEST_CASE("parallel: spreading and regime warnings")
{
  // v T = 1e7 um = 10 m, far beyond the 1 m bound of a 10 keV, 1 um packet.
  const auto r = run({"parallel", "--T", "1e9", "--energy", "1e4", "--dx0", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("warning[spreading]") != std::string::npos);
  CHECK(run({"parallel", "--energy", "1e4"}).code == 2);
}

TEST_CASE("intersect: closed defaults")
{
  const auto r = run({"intersect"});
  REQUIRE(r.code == 0);
  CHECK(report_value(r.out, "W") == doctest::Approx(0.0221790174444).epsilon(1e-9));
  CHECK(report_value(r.out, "W") == doctest::Approx(report_value(r.out, "W_closed_form")).epsilon(1e-11));
  for (const char* key : {"J_aa", "J_bb", "J_ab", "I_aa", "I_bb", "I_ab", "W_V", "W_gamma", "contrast"}) {
    CHECK(std::isfinite(report_value(r.out, key)));
  }
}

TEST_CASE("intersect: assembled agrees with closed within the printed budget")
{
  const auto closed = run({"intersect", "--v", "0.01", "--theta", "0.5"});
  const auto assembled = run({"intersect", "--v", "0.01", "--theta", "0.5", "--branch", "assembled"});
  REQUIRE(closed.code == 0);
  REQUIRE(assembled.code == 0);
  const double budget = report_value(assembled.out, "asymptotic_budget") + report_value(assembled.out, "error_estimate");
  CHECK(std::abs(report_value(assembled.out, "W") - report_value(closed.out, "W")) <= budget);
}

TEST_CASE("intersect: ell and L2 sweeps are flat")
{
  const auto r = run({"intersect", "--sweep", "ell", "--sweep-min", "0.1", "--sweep-max", "10", "--sweep-steps", "5"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == "ell,w_vacuum,w_photon,w_total");
  const double first = fields(rows[1])[3];
  for (std::size_t i = 2; i < rows.size(); ++i) {
    CHECK(fields(rows[i])[3] == doctest::Approx(first).epsilon(1e-11));
  }

  const auto l2 = run({"intersect", "--sweep", "L2", "--sweep-min", "1e3", "--sweep-max", "1e6", "--sweep-steps", "3"});
  REQUIRE(l2.code == 0);
  const auto l2_rows = lines(l2.out);
  CHECK(l2_rows[0] == "L2,w_vacuum,w_photon,w_total");
  CHECK(fields(l2_rows[3])[3] == doctest::Approx(fields(l2_rows[1])[3]).epsilon(1e-11));
}

TEST_CASE("verify")
{
  const auto kernels = run({"verify", "kernels"});
  CHECK(kernels.code == 0);
  CHECK(kernels.out.find("FAIL") == std::string::npos);
  for (const char* name : {"K closed vs PV", "J_ab", "I_aa", "I_ab", "I_bb"}) {
    CHECK(kernels.out.find(name) != std::string::npos);
  }

  const auto kap = run({"verify", "kappa", "--samples", "200000"});
  CHECK(kap.code == 0);
  CHECK(kap.out.find("kappa sphere") != std::string::npos);
  CHECK(kap.out.find("FAIL") == std::string::npos);

  CHECK(run({"verify", "everything"}).code == 2);
}

TEST_CASE("validity")
{
  const auto one = run({"validity", "--energy", "1e4", "--dx0", "1"});
  REQUIRE(one.code == 0);
  CHECK(report_value(one.out, "max_flight_distance_m") == doctest::Approx(1.0246334442).epsilon(1e-9));
  CHECK(one.out.find("≈ 1 m") != std::string::npos);

  const auto small = run({"validity", "--energy", "1e4", "--dx0", "10", "--unit", "nm"});
  REQUIRE(small.code == 0);
  CHECK(report_value(small.out, "max_flight_distance_m") == doctest::Approx(1e-4).epsilon(0.05));

  CHECK(run({"validity", "--energy", "-1", "--dx0", "1"}).code == 2);
  CHECK(run({"validity", "--energy", "1e4"}).code == 2);
}

TEST_CASE("config file and --out")
{
  const auto cfg = temp_file("parallel.cfg");
  {
    std::ofstream os(cfg);
    os << "# parallel run\nr0 = 50\nkernel = asymptotic\nrel-tol = 1e-9\n";
  }
  const auto from_file = run({"parallel", "--config", cfg.string()});
  REQUIRE(from_file.code == 0);
  CHECK(report_value(from_file.out, "r0") == 50.0);
  CHECK(from_file.out.find("kernel = asymptotic") != std::string::npos);

  // Flags override the file.
  const auto overridden = run({"parallel", "--config", cfg.string(), "--r0", "70"});
  CHECK(report_value(overridden.out, "r0") == 70.0);

  {
    std::ofstream os(cfg);
    os << "bogus = 1\n";
  }
  CHECK(run({"parallel", "--config", cfg.string()}).code == 2);
  CHECK(run({"parallel", "--config", temp_file("missing.cfg").string()}).code == 2);

  const auto out = temp_file("sphere.csv");
  const auto r = run({"kappa-sweep", "--shape", "sphere", "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  CHECK(slurp(out) == "beta,kappa,error_estimate\n-,-1.5,0\n");
  std::filesystem::remove(cfg);
  std::filesystem::remove(out);
}

TEST_CASE("help documents the CSV columns")
{
  const auto r = run({"kappa-sweep", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("error_estimate") != std::string::npos);
  const auto p = run({"parallel", "--help"});
  CHECK(p.out.find("w_total") != std::string::npos);
}

TEST_CASE("binary: exit codes and byte-identical CSV")
{
  const char* bin = std::getenv("QEDCOH_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "QEDCOH_BIN not set");
  const std::string exe = bin;
  const auto status = [](const std::string& cmd) {
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status(exe + " parallel --r0 -1 2>/dev/null") == 2);
  CHECK(status(exe + " verify nothing 2>/dev/null") == 2);
  CHECK(status(exe + " validity --energy -1 --dx0 1 2>/dev/null") == 2);

  const auto a = temp_file("a.csv");
  const auto b = temp_file("b.csv");
  const std::string args = " kappa-sweep --beta-min 0.5 --beta-max 3 --steps 3 --out ";
  REQUIRE(status(exe + args + a.string()) == 0);
  REQUIRE(status(exe + args + b.string() + " --threads 1") == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).find('\r') == std::string::npos);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}
