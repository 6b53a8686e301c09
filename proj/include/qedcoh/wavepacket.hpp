#pragma once

#include "qedcoh/quadrature.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <variant>

namespace qedcoh {

/// Uniform probability density inside a ball of radius `radius`.
struct UniformSphere
{
  double radius;
};

/// Uniform probability density inside a cylinder of radius `radius` and
/// length `length` (axis along z, 0 <= z <= length).
struct UniformCylinder
{
  double radius;
  double length;
};

/// Non-spreading wavepacket shape. All lengths share one unit (c = 1, so
/// times are measured in the same unit).
class Wavepacket
{
public:
  using Shape = std::variant<UniformSphere, UniformCylinder>;

  static Wavepacket sphere(double radius);
  static Wavepacket cylinder(double radius, double length);

  const Shape& shape() const { return shape_; }
  bool is_sphere() const { return std::holds_alternative<UniformSphere>(shape_); }

  /// Constant value of the normalized density inside the support.
  double density() const;
  /// Volume of the support.
  double volume() const;
  bool contains(const std::array<double, 3>& y) const;

  /// Same shape with every length multiplied by `factor`.
  Wavepacket scaled(double factor) const;

private:
  explicit Wavepacket(Shape shape) : shape_(shape) {}

  Shape shape_;
};

/// Largest linear scale of the packet: the sphere diameter 2R, or
/// max(2R, L) for a cylinder.
double characteristic_length(const Wavepacket& wp);

struct KappaResult
{
  double kappa = 0.0;
  double error_estimate = 0.0;
  /// Characteristic length used for the log argument.
  double ell = 0.0;
  /// L / R for cylinders.
  std::optional<double> beta;
};

/// Shape constant: the double average of ln(rho^2 / ell^2) over the packet
/// density, rho = |y - y'|, ell = characteristic_length(wp).
///
/// This is the normalisation under which the uniform sphere gives exactly
/// -3/2 and W_V = (alpha/pi)[2 - kappa + 2 ln(T/ell)] holds; it equals twice
/// the average of ln(rho/ell).
///
/// Spheres return -3/2 with zero error. Cylinders integrate the reduced
/// three-dimensional form (4/pi) int rho drho int rho' drho' int dphi F.
/// Throws NonConvergence when the quadrature misses its tolerance.
KappaResult kappa(const Wavepacket& wp, const quad::QuadratureConfig& cfg = {});

/// Always integrates numerically, including the sphere (as an integral over
/// r, r' and the cosine of the angle between y and y').
KappaResult kappa_numeric(const Wavepacket& wp, const quad::QuadratureConfig& cfg = {});

/// Longitudinally averaged log kernel of the cylinder reduction,
///
///   F = ln(R/ell) + beta^-2 { b^2 ln b
///         - (1/2)[(b^2 - beta^2) ln(b^2 + beta^2) - 4 beta b atan(beta/b) + 3 beta^2] },
///
/// with b^2 = rho^2 - 2 rho rho' cos(phi) + rho'^2 in units of R. F is the
/// average of (1/2) ln(rho_3d^2 / ell^2) over two points uniformly placed
/// along the axis. At b = 0 it returns the limit ln(R/ell) + ln(beta) - 3/2.
///
/// Throws DomainError for beta <= 0, R_over_ell <= 0, radii outside [0, 1],
/// or a b^2 that is below -1e-12 or not a number.
double cylinder_F(double rho, double rho_p, double phi, double beta, double R_over_ell);

/// Plain Monte-Carlo estimate of kappa from the full six-dimensional
/// integral, sampling both points uniformly in the support. The error is
/// the sample standard error. Deterministic for a given seed.
/// Throws ValidationError when samples < 10^4.
KappaResult kappa_bruteforce_oracle(const Wavepacket& wp, std::size_t samples, std::uint64_t seed);

} // namespace qedcoh
