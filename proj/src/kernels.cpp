#include "qedcoh/kernels.hpp"

#include "qedcoh/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace qedcoh {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_positive(double value, const char* name)
{
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ValidationError(std::string(name) + " must be positive");
  }
}

void require_speed(double v)
{
  if (!(v > 0.0 && v < 1.0)) {
    throw ValidationError("v must lie in (0, 1)");
  }
}

/// Poles that sit numerically on an interval end carry no PV weight; the
/// outer rule only gets that close at a measure-zero set of nodes.
std::vector<double> interior_poles(std::initializer_list<double> poles, double lo, double hi)
{
  const auto clear_of = [](double p, double end) {
    return std::abs(p - end) > 256.0 * kEps * std::max(std::abs(p), std::abs(end));
  };
  std::vector<double> kept;
  for (double p : poles) {
    if (p > lo && p < hi && clear_of(p, lo) && clear_of(p, hi)) {
      kept.push_back(p);
    }
  }
  return kept;
}

/// Outer integral of an inner principal value, with inner tolerances ten
/// times tighter than the outer ones. The outer integrand is log-singular
/// wherever an inner pole crosses an inner boundary; each segment between
/// such breakpoints is mapped by x = lo + h (3t^2 - 2t^3), which turns the
/// end singularities into t ln t and keeps outer nodes (and hence inner
/// poles) away from the ulp-scale neighbourhood of the boundaries.
template <class Inner>
quad::IntegrationResult nested_pv(const Inner& inner, double lo, double hi,
                                  std::initializer_list<double> breakpoints, const quad::QuadratureConfig& cfg)
{
  std::vector<double> edges{lo, hi};
  for (double p : breakpoints) {
    if (p > lo && p < hi) {
      edges.push_back(p);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const auto inner_cfg = cfg.tightened(0.1);
  quad::QuadratureConfig segment_cfg = cfg;
  segment_cfg.abs_tol = cfg.abs_tol / static_cast<double>(edges.size() - 1);

  quad::IntegrationResult total;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i];
    const double h = edges[i + 1] - a;
    const auto mapped = [&](double t) {
      const double jac = 6.0 * h * t * (1.0 - t);
      auto r = inner(a + h * t * t * (3.0 - 2.0 * t), inner_cfg);
      r.value *= jac;
      r.error_estimate *= jac;
      return r;
    };
    const auto part = quad::integrate_1d_nested(mapped, 0.0, 1.0, {}, segment_cfg);
    total.value += part.value;
    total.error_estimate += part.error_estimate;
    total.evaluations += part.evaluations;
  }
  total.converged = std::isfinite(total.value) &&
                    total.error_estimate <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total.value));
  return total;
}

} // namespace

double kernel_K_closed(double T, double rho)
{
  require_positive(T, "T");
  require_positive(rho, "rho");
  if (T == rho) {
    throw DegenerateInput("K(T, rho) at T = rho: use the limit -2 ln 2");
  }
  if (T > rho) {
    // x = rho/T < 1: (1/x) ln((1-x)/(1+x)) - ln((1-x^2)/x^2)
    const double x = rho / T;
    return -2.0 * std::atanh(x) / x - std::log1p(-x * x) + 2.0 * std::log(x);
  }
  // y = T/rho < 1: y ln((1-y)/(1+y)) - ln(1-y^2)
  const double y = T / rho;
  return -2.0 * y * std::atanh(y) - std::log1p(-y * y);
}

double kernel_K_coincident_limit() { return -2.0 * std::numbers::ln2; }

double kernel_K_asymptotic(double T, double rho)
{
  require_positive(T, "T");
  require_positive(rho, "rho");
  return -2.0 - 2.0 * std::log(T / rho);
}

quad::IntegrationResult kernel_K_numeric(double T, double rho, const quad::QuadratureConfig& cfg)
{
  require_positive(T, "T");
  require_positive(rho, "rho");
  // tau = T u: K = 2 PV int_0^1 du (1 - u) / ((u - r)(u + r)), r = rho/T.
  const double r = rho / T;
  const auto f = [r](double u) { return 2.0 * (1.0 - u) / ((u - r) * (u + r)); };
  const double poles[] = {r};
  return quad::pv_integrate_1d(f, 0.0, 1.0, poles, cfg);
}

void SegmentPairInput::validate() const
{
  require_positive(L1, "L1");
  require_positive(L2, "L2");
  require_positive(ell, "ell");
  require_speed(v);
  if (!(theta > 0.0 && theta < 0.5 * std::numbers::pi)) {
    throw ValidationError("theta must lie in (0, pi/2)");
  }
  require_positive(vertex_cutoff_factor, "vertex_cutoff_factor");
  require_positive(junction_gap_factor, "junction_gap_factor");
}

std::vector<RegimeWarning> segment_regime_warnings(const SegmentPairInput& inp)
{
  inp.validate();
  std::vector<RegimeWarning> out;
  if (inp.L1 < 10.0 * inp.ell) {
    out.push_back({"scale_ell_L1", "ℓ ≪ L₁ violated (L₁/ℓ = " + std::to_string(inp.L1 / inp.ell) + ")"});
  }
  if (inp.L2 < 10.0 * inp.L1) {
    out.push_back({"scale_L1_L2", "L₁ ≪ L₂ violated (L₂/L₁ = " + std::to_string(inp.L2 / inp.L1) + ")"});
  }
  const double k = inp.v * std::sin(inp.theta);
  if (k > 0.2) {
    out.push_back({"small_v", "v sinθ = " + std::to_string(k) + " > 0.2: small-velocity forms unreliable"});
  }
  return out;
}

quad::QuadratureConfig segment_quadrature_defaults()
{
  quad::QuadratureConfig cfg;
  cfg.rel_tol = 1e-8;
  return cfg;
}

double segment_J_ab_closed(const SegmentPairInput& inp, bool asymptotic)
{
  inp.validate();
  if (asymptotic) {
    return std::log(inp.L1 / inp.ell);
  }
  const double gap = inp.junction_gap_factor * inp.ell;
  if (gap >= inp.L1) {
    throw DomainError("junction gap exceeds segment a");
  }
  // Every time is a length over v, so v cancels.
  return std::log((inp.L1 + gap) * (inp.L2 + gap) / (2.0 * gap * (inp.L1 + inp.L2)));
}

quad::IntegrationResult segment_J_ab_numeric(const SegmentPairInput& inp, const quad::QuadratureConfig& cfg)
{
  inp.validate();
  const double g = inp.junction_gap_factor * inp.ell / inp.L1;
  if (g >= 1.0) {
    throw DomainError("junction gap exceeds segment a");
  }
  // Times in units of T1.
  const quad::Axis box[] = {{0.0, 1.0 - g, false, std::nullopt},
                            {1.0 + g, 1.0 + inp.L2 / inp.L1, false, std::nullopt}};
  const auto f = [](std::span<const double> x) {
    const double d = x[0] - x[1];
    return 1.0 / (d * d);
  };
  return quad::integrate_nd(f, box, cfg);
}

double segment_I_aa_closed(const SegmentPairInput& inp)
{
  inp.validate();
  const double s = std::sin(inp.theta);
  return std::log(inp.ell * inp.v * inp.v * s * s / inp.L1) + 2.0 * (std::numbers::ln2 - 1.0);
}

quad::IntegrationResult segment_I_aa_numeric(const SegmentPairInput& inp, const quad::QuadratureConfig& cfg)
{
  inp.validate();
  cfg.validate();
  // Times in units of T1; the cutoff c/T1 = factor * ell / L1.
  const double a0 = inp.vertex_cutoff_factor * inp.ell / inp.L1;
  if (a0 >= 1.0) {
    throw DomainError("vertex cutoff exceeds segment a");
  }
  const double k = inp.v * std::sin(inp.theta);
  const double lo_ratio = (1.0 - k) / (1.0 + k);
  const double hi_ratio = (1.0 + k) / (1.0 - k);

  const auto inner = [=](double x, const quad::QuadratureConfig& c) {
    // (x - x')^2 - k^2 (x + x')^2 factored to keep both roots exact.
    const auto f = [x, k](double xp) {
      return 1.0 / ((x * (1.0 - k) - xp * (1.0 + k)) * (x * (1.0 + k) - xp * (1.0 - k)));
    };
    const auto poles = interior_poles({x * lo_ratio, x * hi_ratio}, a0, 1.0);
    return quad::pv_integrate_1d(f, a0, 1.0, poles, c);
  };
  return nested_pv(inner, a0, 1.0, {a0 * hi_ratio, lo_ratio}, cfg);
}

double segment_I_ab_closed(const SegmentPairInput& inp)
{
  inp.validate();
  return 1.0 - std::log(2.0 * inp.v * std::sin(inp.theta));
}

quad::IntegrationResult segment_I_ab_numeric(const SegmentPairInput& inp, const quad::QuadratureConfig& cfg)
{
  inp.validate();
  cfg.validate();
  // Times in units of T1: x in [0, 1], x' in [1, 1 + L2/L1], pole gap s.
  const double s = 2.0 * inp.v * std::sin(inp.theta);
  const double end = 1.0 + inp.L2 / inp.L1;

  const auto inner = [=](double x, const quad::QuadratureConfig& c) {
    const auto f = [x, s](double xp) {
      const double d = xp - x;
      return 1.0 / ((d - s) * (d + s));
    };
    const auto poles = interior_poles({x + s, x - s}, 1.0, end);
    return quad::pv_integrate_1d(f, 1.0, end, poles, c);
  };
  return nested_pv(inner, 0.0, 1.0, {1.0 - s, end - s}, cfg);
}

double segment_I_bb_closed(const SegmentPairInput& inp)
{
  inp.validate();
  return -2.0 * (1.0 + std::log(inp.L2 / (2.0 * inp.L1 * inp.v * std::sin(inp.theta))));
}

double segment_I_bb_kernel(const SegmentPairInput& inp)
{
  inp.validate();
  return kernel_K_closed(inp.L2 / inp.v, 2.0 * inp.L1 * std::sin(inp.theta));
}

double segment_J_straight(double L, double ell, double v, double kappa)
{
  require_positive(L, "L");
  require_positive(ell, "ell");
  require_speed(v);
  return -2.0 + kappa - 2.0 * std::log(L / (ell * v));
}

} // namespace qedcoh
