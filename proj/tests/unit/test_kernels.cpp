#include "doctest.h"

#include "qedcoh/errors.hpp"
#include "qedcoh/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

using namespace qedcoh;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLn2 = std::numbers::ln2;

SegmentPairInput pair(double L1, double L2, double v, double theta, double ell = 1.0)
{
  SegmentPairInput inp;
  inp.L1 = L1;
  inp.L2 = L2;
  inp.ell = ell;
  inp.v = v;
  inp.theta = theta;
  return inp;
}

bool has_code(const std::vector<RegimeWarning>& w, const std::string& code)
{
  for (const auto& x : w) {
    if (x.code == code) {
      return true;
    }
  }
  return false;
}

} // namespace

TEST_CASE("K: closed form matches the principal-value oracle")
{
  // mpmath values of the corrected closed form at rho = 1.
  const double ratios[] = {1.5, 2.0, 5.0, 10.0, 100.0};
  const double frozen[] = {-2.63730041996536, -3.29583686600433, -5.20537937088877, -6.6018268047561,
                           -11.2103070376428};
  for (int i = 0; i < 5; ++i) {
    const double T = ratios[i];
    const double closed = kernel_K_closed(T, 1.0);
    CHECK(closed == doctest::Approx(frozen[i]).epsilon(1e-13));
    const auto num = kernel_K_numeric(T, 1.0);
    CHECK(num.converged);
    CHECK(std::abs(num.value - closed) <= 1e-8 * std::abs(closed));
  }
}

TEST_CASE("K: pole outside the flight time takes the plain path")
{
  for (double T : {0.1, 0.5, 0.9}) {
    const auto num = kernel_K_numeric(T, 1.0);
    CHECK(num.converged);
    CHECK(num.value == doctest::Approx(kernel_K_closed(T, 1.0)).epsilon(1e-9));
  }
  // T << rho: K ~ -T^2/rho^2 (both terms of order y^2 combine).
  CHECK(kernel_K_closed(1e-6, 1.0) == doctest::Approx(-1e-12).epsilon(1e-6));
}

TEST_CASE("K: coincident limit")
{
  CHECK_THROWS_AS(kernel_K_closed(2.0, 2.0), DegenerateInput);
  CHECK_THROWS_AS(kernel_K_numeric(2.0, 2.0), PoleOnBoundary);
  CHECK(std::abs(kernel_K_coincident_limit() + 2.0 * kLn2) <= 1e-15);
  // Both sides of T = rho approach the limit.
  for (double d : {1e-5, -1e-5}) {
    CHECK(std::abs(kernel_K_closed(1.0 + d, 1.0) - kernel_K_coincident_limit()) < 1e-3);
  }
}

TEST_CASE("K: validation")
{
  CHECK_THROWS_AS(kernel_K_closed(0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(kernel_K_closed(1.0, -1.0), ValidationError);
  CHECK_THROWS_AS(kernel_K_numeric(std::nan(""), 1.0), ValidationError);
  CHECK_THROWS_AS(kernel_K_asymptotic(1.0, 0.0), ValidationError);
}

TEST_CASE("property: K is scale invariant")
{
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> log_ratio(std::log(0.05), std::log(1e4));
  for (int i = 0; i < 200; ++i) {
    const double r = std::exp(log_ratio(rng));
    if (std::abs(r - 1.0) < 1e-3) {
      continue;
    }
    const double base = kernel_K_closed(r, 1.0);
    for (double lambda : {0.1, 3.0, 42.0}) {
      CHECK(kernel_K_closed(lambda * r, lambda) == doctest::Approx(base).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: K approaches its large-T asymptote within 3 rho/T")
{
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> log_ratio(std::log(10.0), std::log(1e6));
  for (int i = 0; i < 500; ++i) {
    const double r = std::exp(log_ratio(rng));
    const double rho = std::exp(log_ratio(rng) - 5.0);
    const double T = r * rho;
    CHECK(std::abs(kernel_K_closed(T, rho) - kernel_K_asymptotic(T, rho)) <= 3.0 / r);
  }
  const double K = kernel_K_closed(100.0, 1.0);
  CHECK(std::abs(K - kernel_K_asymptotic(100.0, 1.0)) / std::abs(K) < 0.01);
}

TEST_CASE("J_ab: exact and asymptotic forms")
{
  CHECK(segment_J_ab_closed(pair(1.0, 100.0, 0.1, 0.5), true) == 0.0);
  CHECK(segment_J_ab_closed(pair(50.0, 100.0, 0.1, 0.5), true) == doctest::Approx(std::log(50.0)));

  // L2 -> infinity: ln(L1/ell + 1/2).
  const double far = segment_J_ab_closed(pair(100.0, 1e14, 0.1, 0.5));
  CHECK(far == doctest::Approx(std::log(100.5)).epsilon(1e-11));

  // v cancels out of the exact form.
  CHECK(segment_J_ab_closed(pair(100.0, 1e4, 0.01, 0.5)) ==
        doctest::Approx(segment_J_ab_closed(pair(100.0, 1e4, 0.5, 1.2))).epsilon(1e-15));

  auto tight = pair(1.0, 10.0, 0.1, 0.5);
  tight.junction_gap_factor = 2.0;
  CHECK_THROWS_AS(segment_J_ab_closed(tight), DomainError);
  CHECK_THROWS_AS(segment_J_ab_numeric(tight), DomainError);
}

TEST_CASE("J_ab: double-integral oracle")
{
  for (const auto& inp : {pair(1e3, 1e5, 0.01, kPi / 6.0), pair(20.0, 300.0, 0.3, 1.0), pair(1e2, 1e4, 0.1, 0.2)}) {
    const double exact = segment_J_ab_closed(inp);
    const auto num = segment_J_ab_numeric(inp);
    CHECK(num.converged);
    CHECK(std::abs(num.value - exact) <= 1e-8 * std::abs(exact));
  }
}

TEST_CASE("I_aa: closed form")
{
  // ell v^2 sin^2 theta = L1: v^2 sin^2 theta = 0.0025 at v = 0.1, theta = pi/6.
  const auto unit = pair(0.0025, 1.0, 0.1, kPi / 6.0);
  CHECK(segment_I_aa_closed(unit) == doctest::Approx(2.0 * (kLn2 - 1.0)).epsilon(1e-14));
  CHECK(segment_I_aa_closed(unit) == doctest::Approx(-0.613706).epsilon(1e-6));
}

TEST_CASE("I_aa: nested principal value against frozen oracles")
{
  struct Case
  {
    double v, theta, L1, oracle;
  };
  // mpmath, 30 digits.
  const Case cases[] = {{0.01, kPi / 6.0, 1e3, -18.1162261417780685},
                        {0.01, kPi / 4.0, 1e3, -17.423198903657656342},
                        {0.01, kPi / 6.0, 1e4, -20.4206314590110348226}};
  for (const auto& c : cases) {
    const auto inp = pair(c.L1, 100.0 * c.L1, c.v, c.theta);
    const auto num = segment_I_aa_numeric(inp);
    CHECK(num.converged);
    CHECK(std::isfinite(num.error_estimate));
    CHECK(std::abs(num.value - c.oracle) <= 1e-7 * std::abs(c.oracle));
    CHECK(std::abs(num.value - segment_I_aa_closed(inp)) <= 0.01 * std::abs(num.value));
  }

  // Smaller v: the pole pair cancels more strongly; looser tolerance.
  auto cfg = segment_quadrature_defaults();
  cfg.rel_tol = 1e-7;
  const auto slow = segment_I_aa_numeric(pair(1e3, 1e5, 0.001, kPi / 6.0), cfg);
  CHECK(slow.converged);
  CHECK(std::abs(slow.value + 22.7212665349397801239) <= 1e-7 * 22.72);
}

TEST_CASE("property: I_aa is negative below the unit log argument")
{
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double v = 0.001 + 0.3 * unit(rng);
    const double theta = 0.01 + 1.5 * unit(rng);
    const double L1 = std::exp(std::log(10.0) + unit(rng) * std::log(1e5));
    const auto inp = pair(L1, 10.0 * L1, v, theta);
    CHECK(segment_I_aa_closed(inp) < 0.0);
  }
  for (double v : {0.003, 0.03}) {
    CHECK(segment_I_aa_numeric(pair(200.0, 2e4, v, 0.7)).value < 0.0);
  }
}

TEST_CASE("I_ab: closed form")
{
  CHECK(segment_I_ab_closed(pair(1.0, 100.0, 0.5, kPi / 2.0 - 1e-12)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(segment_I_ab_closed(pair(1.0, 100.0, std::sqrt(0.5), kPi / 4.0)) == doctest::Approx(1.0).epsilon(1e-14));
  double previous = std::numeric_limits<double>::infinity();
  for (double v = 0.001; v < 0.9; v *= 1.5) {
    const double now = segment_I_ab_closed(pair(1.0, 100.0, v, 0.6));
    CHECK(now < previous);
    previous = now;
  }
}

TEST_CASE("I_ab: principal value against frozen oracles")
{
  const double thetas[] = {kPi / 4.0, kPi / 6.0, kPi / 2.0 - 1e-9};
  const double oracles[] = {5.24861292945574694, 5.59520318793539286894, 4.90200599977542744936982864099};
  for (int i = 0; i < 3; ++i) {
    const auto inp = pair(1e3, 1e5, 0.01, thetas[i]);
    const auto num = segment_I_ab_numeric(inp);
    CHECK(num.converged);
    CHECK(std::abs(num.value - oracles[i]) <= 1e-7 * oracles[i]);
    CHECK(std::abs(num.value - segment_I_ab_closed(inp)) <= 0.02 * std::abs(num.value));
  }
}

TEST_CASE("I_bb: asymptote of the straight kernel")
{
  // L2 = 2 L1 v sin theta.
  const auto unit = pair(10.0, 2.0 * 10.0 * 0.1 * std::sin(0.8), 0.1, 0.8);
  CHECK(segment_I_bb_closed(unit) == doctest::Approx(-2.0).epsilon(1e-14));

  // L2 / (2 L1 v sin theta) = 100.
  const double s = std::sin(0.4);
  const auto inp = pair(10.0, 100.0 * 2.0 * 10.0 * 0.05 * s, 0.05, 0.4);
  const double K = segment_I_bb_kernel(inp);
  CHECK(K == doctest::Approx(kernel_K_closed(inp.L2 / inp.v, 2.0 * inp.L1 * s)).epsilon(1e-15));
  CHECK(std::abs(segment_I_bb_closed(inp) - K) <= 3.0 / 100.0);
  CHECK(segment_I_bb_closed(inp) == doctest::Approx(kernel_K_asymptotic(inp.L2 / inp.v, 2.0 * inp.L1 * s)));
}

TEST_CASE("J_straight")
{
  CHECK(segment_J_straight(0.3, 3.0, 0.1, -1.5) == doctest::Approx(-3.5).epsilon(1e-15));
  const double L1 = 40.0;
  const double L2 = 7000.0;
  const double jaa = segment_J_straight(L1, 1.0, 0.02, -1.5);
  const double jbb = segment_J_straight(L2, 1.0, 0.02, -1.5);
  CHECK(jbb - jaa == doctest::Approx(-2.0 * std::log(L2 / L1)).epsilon(1e-13));
  CHECK_THROWS_AS(segment_J_straight(0.0, 1.0, 0.1, 0.0), ValidationError);
  CHECK_THROWS_AS(segment_J_straight(1.0, 1.0, 1.0, 0.0), ValidationError);
}

TEST_CASE("property: segment integrals stay finite")
{
  std::mt19937 rng(2026);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 12; ++i) {
    const double v = 0.005 + 0.1 * unit(rng);
    const double theta = 0.1 + 1.4 * unit(rng);
    const double L1 = 50.0 + 1000.0 * unit(rng);
    const auto inp = pair(L1, L1 * (10.0 + 100.0 * unit(rng)), v, theta);
    for (const auto& r : {segment_I_aa_numeric(inp), segment_I_ab_numeric(inp), segment_J_ab_numeric(inp)}) {
      CHECK(std::isfinite(r.value));
      CHECK(std::isfinite(r.error_estimate));
    }
    CHECK(std::isfinite(segment_I_bb_kernel(inp)));
  }
}

TEST_CASE("segment input validation and regime warnings")
{
  CHECK_THROWS_AS(pair(0.0, 1.0, 0.1, 0.5).validate(), ValidationError);
  CHECK_THROWS_AS(pair(1.0, 1.0, 1.0, 0.5).validate(), ValidationError);
  CHECK_THROWS_AS(pair(1.0, 1.0, 0.1, kPi / 2.0).validate(), ValidationError);
  CHECK_THROWS_AS(pair(1.0, 1.0, 0.1, 0.5, -1.0).validate(), ValidationError);
  CHECK_THROWS_AS(segment_I_aa_closed(pair(1.0, 1.0, 0.1, 0.0)), ValidationError);
  CHECK_THROWS_AS(segment_I_aa_numeric(pair(0.5, 100.0, 0.1, 0.5)), DomainError);

  CHECK(segment_regime_warnings(pair(100.0, 1e4, 0.01, 0.5)).empty());
  const auto w = segment_regime_warnings(pair(2.0, 1e4, 0.01, 0.5));
  REQUIRE(w.size() == 1);
  CHECK(w[0].code == "scale_ell_L1");
  CHECK(w[0].message.find("ℓ ≪ L₁ violated") != std::string::npos);
  CHECK(has_code(segment_regime_warnings(pair(100.0, 500.0, 0.01, 0.5)), "scale_L1_L2"));
  CHECK(has_code(segment_regime_warnings(pair(100.0, 1e4, 0.5, 1.0)), "small_v"));
}
