#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace qedcoh::quad {

/// Geometric excision half-widths 1/2, 1/4, ... (fractions of a pole window).
std::vector<double> geometric_excision(double ratio = 0.5, std::size_t terms = 12);

struct QuadratureConfig
{
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  std::size_t max_subdivisions = 4096;
  /// Shrinking excision half-widths, as fractions of each pole's window
  /// half-width.
  std::vector<double> excision_sequence = geometric_excision();

  /// Throws ValidationError when an invariant is broken.
  void validate() const;

  /// Copy with both tolerances scaled by `factor` (used for nested levels).
  QuadratureConfig tightened(double factor) const;
};

struct IntegrationResult
{
  double value = 0.0;
  double error_estimate = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

using Integrand1d = std::function<double(double)>;
using IntegrandNd = std::function<double(std::span<const double>)>;

/// Adaptive 21-point Gauss-Kronrod integration with global bisection.
/// Endpoints are never evaluated, so integrable endpoint singularities
/// (e.g. log x at 0) are refined by a geometrically graded mesh.
/// On budget exhaustion the best estimate is returned with converged=false.
IntegrationResult integrate_1d(const Integrand1d& f, double a, double b,
                               const QuadratureConfig& cfg = {});

/// Same, with the interval pre-split at `breakpoints` (points outside
/// (a, b) are ignored). Use it to put known integrable singularities on
/// panel ends.
IntegrationResult integrate_1d(const Integrand1d& f, double a, double b,
                               std::span<const double> breakpoints,
                               const QuadratureConfig& cfg = {});

/// Value of an inner integral at an outer abscissa.
using NestedIntegrand = std::function<IntegrationResult(double)>;

/// Outer adaptive integral of an inner quadrature. Each panel's error adds
/// the inner error estimates weighted by the outer rule, so inner errors
/// near an integrable outer singularity only count over the panels that
/// resolve it. `evaluations` counts inner evaluations.
IntegrationResult integrate_1d_nested(const NestedIntegrand& f, double a, double b,
                                      std::span<const double> breakpoints,
                                      const QuadratureConfig& cfg = {});

/// Cauchy principal value of f over [a, b] with simple poles at `poles`.
///
/// Each interior pole p gets a window [p - d, p + d]; inside it the
/// symmetric pair f(p + x) + f(p - x) is integrated over [eps_k, d] for the
/// excision sequence eps_k, which cancels the 1/x part before any
/// extrapolation, and the results are Richardson-extrapolated to eps -> 0.
/// The complement of the windows is integrated with integrate_1d.
/// Poles outside [a, b] are ignored.
///
/// Throws PoleOnBoundary if a pole coincides with a or b, PolesTooClose if
/// two poles are numerically coincident, ValidationError if a >= b.
IntegrationResult pv_integrate_1d(const Integrand1d& f, double a, double b,
                                  std::span<const double> poles,
                                  const QuadratureConfig& cfg = {});

struct Axis
{
  double lo = 0.0;
  double hi = 1.0;
  /// Integrand is periodic along this axis with period hi - lo.
  bool periodic = false;
  /// For periodic axes: point where the integrand may be non-smooth; the
  /// equal-weight rule is graded towards it.
  std::optional<double> graded_at;
};

/// Equal-weight trapezoid rule for a periodic integrand, doubled until the
/// change between levels meets the tolerance. With `graded_at` a
/// sin-type periodizing map clusters nodes at that point (never evaluated).
IntegrationResult integrate_periodic(const Integrand1d& f, double lo, double hi,
                                     std::optional<double> graded_at,
                                     const QuadratureConfig& cfg = {});

/// Tensor-product nested integration over a 2- or 3-dimensional box.
/// The first axis is outermost. Non-periodic axes use integrate_1d;
/// periodic ones use integrate_periodic. Inner levels run with tolerances
/// tightened by 10x per level.
IntegrationResult integrate_nd(const IntegrandNd& f, std::span<const Axis> box,
                               const QuadratureConfig& cfg = {});

} // namespace qedcoh::quad
