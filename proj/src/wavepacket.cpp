#include "qedcoh/wavepacket.hpp"

#include "qedcoh/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace qedcoh {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive(double value, const char* name)
{
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ValidationError(std::string(name) + " must be positive");
  }
}

void require_converged(const quad::IntegrationResult& r, const char* what)
{
  if (!r.converged) {
    throw NonConvergence(std::string(what) + ": quadrature did not reach the requested tolerance",
                         r.value, r.error_estimate);
  }
}

KappaResult kappa_sphere_numeric(const UniformSphere& s, const quad::QuadratureConfig& cfg)
{
  // Radii in units of R, s = 1 - cos(angle); ell = 2R.
  // <ln(rho^2/ell^2)> = int int 9 x^2 x'^2 (1/2) int_0^2 ds ln(((x - x')^2 + 2 x x' s) / 4)
  const quad::Axis box[] = {{0.0, 1.0, false, std::nullopt}, {0.0, 1.0, false, std::nullopt},
                            {0.0, 2.0, false, std::nullopt}};
  const auto integrand = [](std::span<const double> v) {
    const double x = v[0];
    const double xp = v[1];
    const double d = x - xp;
    const double rho2 = d * d + 2.0 * x * xp * v[2];
    return 4.5 * x * x * xp * xp * std::log(0.25 * rho2);
  };
  const auto r = quad::integrate_nd(integrand, box, cfg);
  require_converged(r, "sphere kappa");
  return {r.value, r.error_estimate, 2.0 * s.radius, std::nullopt};
}

KappaResult kappa_cylinder_numeric(const UniformCylinder& c, const quad::QuadratureConfig& cfg)
{
  const double beta = c.length / c.radius;
  const double ell = std::max(2.0 * c.radius, c.length);
  const double r_over_ell = c.radius / ell;
  const quad::Axis box[] = {{0.0, 1.0, false, std::nullopt}, {0.0, 1.0, false, std::nullopt},
                            {0.0, 2.0 * kPi, true, 0.0}};
  const auto integrand = [beta, r_over_ell](std::span<const double> v) {
    return v[0] * v[1] * cylinder_F(v[0], v[1], v[2], beta, r_over_ell);
  };
  const auto r = quad::integrate_nd(integrand, box, cfg);
  require_converged(r, "cylinder kappa");
  constexpr double prefactor = 4.0 / kPi;
  return {prefactor * r.value, prefactor * r.error_estimate, ell, beta};
}

} // namespace

Wavepacket Wavepacket::sphere(double radius)
{
  require_positive(radius, "R");
  return Wavepacket(UniformSphere{radius});
}

Wavepacket Wavepacket::cylinder(double radius, double length)
{
  require_positive(radius, "R");
  require_positive(length, "L");
  return Wavepacket(UniformCylinder{radius, length});
}

double Wavepacket::volume() const
{
  if (const auto* s = std::get_if<UniformSphere>(&shape_)) {
    return 4.0 * kPi * s->radius * s->radius * s->radius / 3.0;
  }
  const auto& c = std::get<UniformCylinder>(shape_);
  return kPi * c.radius * c.radius * c.length;
}

double Wavepacket::density() const { return 1.0 / volume(); }

bool Wavepacket::contains(const std::array<double, 3>& y) const
{
  const double r2 = y[0] * y[0] + y[1] * y[1];
  if (const auto* s = std::get_if<UniformSphere>(&shape_)) {
    return r2 + y[2] * y[2] <= s->radius * s->radius;
  }
  const auto& c = std::get<UniformCylinder>(shape_);
  return r2 <= c.radius * c.radius && y[2] >= 0.0 && y[2] <= c.length;
}

Wavepacket Wavepacket::scaled(double factor) const
{
  require_positive(factor, "scale factor");
  if (const auto* s = std::get_if<UniformSphere>(&shape_)) {
    return sphere(s->radius * factor);
  }
  const auto& c = std::get<UniformCylinder>(shape_);
  return cylinder(c.radius * factor, c.length * factor);
}

double characteristic_length(const Wavepacket& wp)
{
  if (const auto* s = std::get_if<UniformSphere>(&wp.shape())) {
    return 2.0 * s->radius;
  }
  const auto& c = std::get<UniformCylinder>(wp.shape());
  return std::max(2.0 * c.radius, c.length);
}

double cylinder_F(double rho, double rho_p, double phi, double beta, double R_over_ell)
{
  if (!(beta > 0.0)) {
    throw DomainError("cylinder_F: beta must be positive");
  }
  if (!(R_over_ell > 0.0)) {
    throw DomainError("cylinder_F: R/ell must be positive");
  }
  if (!(rho >= 0.0 && rho <= 1.0 && rho_p >= 0.0 && rho_p <= 1.0)) {
    throw DomainError("cylinder_F: radial coordinates must lie in [0, 1]");
  }
  // (rho - rho')^2 + 4 rho rho' sin^2(phi/2) avoids the cancellation in
  // rho^2 - 2 rho rho' cos(phi) + rho'^2 near rho = rho', phi = 0.
  const double d = rho - rho_p;
  const double h = std::sin(0.5 * phi);
  const double b2 = d * d + 4.0 * rho * rho_p * h * h;
  if (!(b2 >= -1e-12)) {
    throw DomainError("cylinder_F: negative b^2 = " + std::to_string(b2));
  }
  const double log_scale = std::log(R_over_ell);
  const double beta2 = beta * beta;
  if (b2 <= 0.0) {
    return log_scale + std::log(beta) - 1.5;
  }
  const double b = std::sqrt(b2);
  const double bracket = (b2 - beta2) * std::log(b2 + beta2) - 4.0 * beta * b * std::atan2(beta, b) +
                         3.0 * beta2;
  return log_scale + (b2 * std::log(b) - 0.5 * bracket) / beta2;
}

KappaResult kappa(const Wavepacket& wp, const quad::QuadratureConfig& cfg)
{
  if (const auto* s = std::get_if<UniformSphere>(&wp.shape())) {
    return {-1.5, 0.0, 2.0 * s->radius, std::nullopt};
  }
  return kappa_cylinder_numeric(std::get<UniformCylinder>(wp.shape()), cfg);
}

KappaResult kappa_numeric(const Wavepacket& wp, const quad::QuadratureConfig& cfg)
{
  if (const auto* s = std::get_if<UniformSphere>(&wp.shape())) {
    return kappa_sphere_numeric(*s, cfg);
  }
  return kappa_cylinder_numeric(std::get<UniformCylinder>(wp.shape()), cfg);
}

KappaResult kappa_bruteforce_oracle(const Wavepacket& wp, std::size_t samples, std::uint64_t seed)
{
  if (samples < 10000) {
    throw ValidationError("kappa oracle needs at least 1e4 samples");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double ell = characteristic_length(wp);
  std::optional<double> beta;
  std::array<double, 3> (*draw)(std::mt19937_64&, std::uniform_real_distribution<double>&,
                                const Wavepacket::Shape&) = nullptr;
  if (std::holds_alternative<UniformSphere>(wp.shape())) {
    draw = [](std::mt19937_64& g, std::uniform_real_distribution<double>& u,
              const Wavepacket::Shape& shape) {
      const double R = std::get<UniformSphere>(shape).radius;
      while (true) {
        const std::array<double, 3> y{R * (2.0 * u(g) - 1.0), R * (2.0 * u(g) - 1.0),
                                      R * (2.0 * u(g) - 1.0)};
        if (y[0] * y[0] + y[1] * y[1] + y[2] * y[2] <= R * R) {
          return y;
        }
      }
    };
  } else {
    const auto& c = std::get<UniformCylinder>(wp.shape());
    beta = c.length / c.radius;
    draw = [](std::mt19937_64& g, std::uniform_real_distribution<double>& u,
              const Wavepacket::Shape& shape) {
      const auto& cyl = std::get<UniformCylinder>(shape);
      const double r = cyl.radius * std::sqrt(u(g));
      const double angle = 2.0 * kPi * u(g);
      return std::array<double, 3>{r * std::cos(angle), r * std::sin(angle), cyl.length * u(g)};
    };
  }

  // Welford running mean / variance of ln(rho^2 / ell^2).
  const double inv_ell2 = 1.0 / (ell * ell);
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  while (n < samples) {
    const auto y = draw(rng, unit, wp.shape());
    const auto yp = draw(rng, unit, wp.shape());
    const double dx = y[0] - yp[0];
    const double dy = y[1] - yp[1];
    const double dz = y[2] - yp[2];
    const double rho2 = dx * dx + dy * dy + dz * dz;
    if (rho2 <= 0.0) {
      continue;
    }
    const double value = std::log(rho2 * inv_ell2);
    ++n;
    const double delta = value - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (value - mean);
  }
  const double variance = m2 / static_cast<double>(n - 1);
  return {mean, std::sqrt(variance / static_cast<double>(n)), ell, beta};
}

} // namespace qedcoh
