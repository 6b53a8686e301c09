#include "qedcoh/decoherence.hpp"

#include "qedcoh/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qedcoh {

namespace {

constexpr double kPi = std::numbers::pi;
/// hbar c in eV m.
constexpr double kHbarC = 197.3269804e-9;

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

std::string ratio_text(double x) { return std::to_string(x); }

SegmentPairInput segment_input(const IntersectingGeometry& geom, double ell)
{
  SegmentPairInput inp;
  inp.L1 = geom.L1;
  inp.L2 = geom.L2;
  inp.ell = ell;
  inp.v = geom.v;
  inp.theta = geom.theta;
  return inp;
}

void require_converged(const quad::IntegrationResult& r, const char* what)
{
  if (!r.converged) {
    throw NonConvergence(std::string(what) + ": quadrature did not reach the requested tolerance", r.value,
                         r.error_estimate);
  }
}

struct Segments
{
  double J_aa = 0.0;
  double J_bb = 0.0;
  double J_ab = 0.0;
  double I_aa = 0.0;
  double I_bb = 0.0;
  double I_ab = 0.0;
  /// Error of 2 I_aa + I_bb + 4 I_ab from the numeric pieces.
  double I_error = 0.0;

  double J() const { return 2.0 * J_aa + J_bb + 4.0 * J_ab; }
  double I() const { return 2.0 * I_aa + I_bb + 4.0 * I_ab; }
};

Segments vacuum_segments(const IntersectingGeometry& geom, double ell, double kap, SegmentBranch branch)
{
  const auto inp = segment_input(geom, ell);
  Segments s;
  s.J_aa = segment_J_straight(geom.L1, ell, geom.v, kap);
  s.J_bb = segment_J_straight(geom.L2, ell, geom.v, kap);
  s.J_ab = segment_J_ab_closed(inp, branch == SegmentBranch::closed);
  return s;
}

void photon_segments(Segments& s, const IntersectingGeometry& geom, double ell, SegmentBranch branch,
                     const quad::QuadratureConfig& cfg)
{
  const auto inp = segment_input(geom, ell);
  if (branch == SegmentBranch::closed) {
    s.I_aa = segment_I_aa_closed(inp);
    s.I_bb = segment_I_bb_closed(inp);
    s.I_ab = segment_I_ab_closed(inp);
    return;
  }
  auto seg_cfg = cfg;
  const auto floor = segment_quadrature_defaults();
  seg_cfg.rel_tol = std::max(cfg.rel_tol, floor.rel_tol);
  const auto aa = segment_I_aa_numeric(inp, seg_cfg);
  require_converged(aa, "I_aa");
  const auto ab = segment_I_ab_numeric(inp, seg_cfg);
  require_converged(ab, "I_ab");
  s.I_aa = aa.value;
  s.I_ab = ab.value;
  s.I_bb = segment_I_bb_kernel(inp);
  s.I_error = 2.0 * aa.error_estimate + 4.0 * ab.error_estimate;
}

void finish(DecoherenceResult& r)
{
  r.w_total = r.w_vacuum + r.w_photon;
  r.contrast = std::exp(r.w_total);
  if (r.w_total > 0.0) {
    r.notes.push_back("W > 0: the fringe contrast is enhanced (vacuum term dominates)");
  }
}

void add_speed_and_spreading(std::vector<RegimeWarning>& out, double v, double flight_length,
                             const std::optional<SpreadingCheck>& spreading)
{
  if (v > 0.3) {
    out.push_back({"nonrelativistic", "v = " + ratio_text(v) + " > 0.3: nonrelativistic forms unreliable"});
  }
  if (spreading) {
    const auto bound = max_flight_distance(spreading->input);
    const double flight_m = flight_length * spreading->length_unit_m;
    if (flight_m > 0.1 * bound.distance_m) {
      out.push_back({"spreading", "flight distance " + ratio_text(flight_m) + " m is not small against the " +
                                      "spreading bound " + ratio_text(bound.distance_m) + " m"});
    }
    out.insert(out.end(), bound.warnings.begin(), bound.warnings.end());
  }
}

} // namespace

void PhysicalConstants::validate() const
{
  if (!(alpha_fs > 0.0 && alpha_fs < 1.0)) {
    throw ValidationError("alpha_fs must lie in (0, 1)");
  }
}

void ParallelGeometry::validate() const
{
  require_positive(r0, "r0");
  require_positive(T, "T");
  require_speed(v);
}

void IntersectingGeometry::validate() const
{
  require_positive(L1, "L1");
  require_positive(L2, "L2");
  if (!(L2 > L1)) {
    throw ValidationError("L2 must exceed L1");
  }
  if (!(theta > 0.0 && theta < 0.5 * kPi)) {
    throw ValidationError("theta must lie in (0, pi/2)");
  }
  require_speed(v);
}

void ValidityInput::validate() const
{
  require_positive(energy, "energy");
  require_positive(dx0, "dx0");
  require_positive(electron_mass, "electron_mass");
}

double DecoherenceResult::term(const std::string& name) const
{
  for (const auto& [key, value] : breakdown) {
    if (key == name) {
      return value;
    }
  }
  throw std::out_of_range("no breakdown entry " + name);
}

double w_vacuum_parallel(const ParallelGeometry& geom, const KappaResult& kap, const PhysicalConstants& pc)
{
  geom.validate();
  pc.validate();
  require_positive(kap.ell, "ell");
  return pc.alpha_fs / kPi * (2.0 - kap.kappa + 2.0 * std::log(geom.T / kap.ell));
}

double w_photon_parallel(const ParallelGeometry& geom, PhotonKernel mode, const PhysicalConstants& pc)
{
  geom.validate();
  pc.validate();
  const double prefactor = pc.alpha_fs / kPi;
  if (mode == PhotonKernel::exact) {
    return prefactor * kernel_K_closed(geom.T, geom.r0);
  }
  return -2.0 * prefactor * (1.0 + std::log(geom.T / geom.r0));
}

DecoherenceResult w_total_parallel(const ParallelGeometry& geom, const Wavepacket& wp, PhotonKernel mode,
                                   const quad::QuadratureConfig& cfg, const PhysicalConstants& pc)
{
  geom.validate();
  const auto kap = kappa(wp, cfg);
  DecoherenceResult r;
  r.w_vacuum = w_vacuum_parallel(geom, kap, pc);
  r.w_photon = w_photon_parallel(geom, mode, pc);
  r.error_estimate = pc.alpha_fs / kPi * kap.error_estimate;
  const double K = mode == PhotonKernel::exact ? kernel_K_closed(geom.T, geom.r0)
                                               : kernel_K_asymptotic(geom.T, geom.r0);
  r.breakdown = {{"kappa", kap.kappa}, {"ell", kap.ell}, {"K", K}};
  r.regime_warnings = check_regime(geom, wp);
  finish(r);
  return r;
}

double w_vacuum_intersecting(const IntersectingGeometry& geom, const Wavepacket& wp, SegmentBranch branch,
                             const quad::QuadratureConfig& cfg, const PhysicalConstants& pc)
{
  geom.validate();
  pc.validate();
  const auto kap = kappa(wp, cfg);
  const auto s = vacuum_segments(geom, kap.ell, kap.kappa, branch);
  return -pc.alpha_fs / (2.0 * kPi) * s.J();
}

double w_photon_intersecting(const IntersectingGeometry& geom, const Wavepacket& wp, SegmentBranch branch,
                             const quad::QuadratureConfig& cfg, const PhysicalConstants& pc)
{
  geom.validate();
  pc.validate();
  Segments s;
  photon_segments(s, geom, characteristic_length(wp), branch, cfg);
  return pc.alpha_fs / (2.0 * kPi) * s.I();
}

DecoherenceResult w_total_intersecting(const IntersectingGeometry& geom, const Wavepacket& wp,
                                       SegmentBranch branch, const quad::QuadratureConfig& cfg,
                                       const PhysicalConstants& pc)
{
  geom.validate();
  pc.validate();
  const auto kap = kappa(wp, cfg);
  auto s = vacuum_segments(geom, kap.ell, kap.kappa, branch);
  photon_segments(s, geom, kap.ell, branch, cfg);

  const double prefactor = pc.alpha_fs / (2.0 * kPi);
  DecoherenceResult r;
  r.w_vacuum = -prefactor * s.J();
  r.w_photon = prefactor * s.I();
  // kappa enters J three times; the segment errors enter I.
  r.error_estimate = prefactor * (3.0 * kap.error_estimate + s.I_error);
  r.breakdown = {{"kappa", kap.kappa}, {"ell", kap.ell}, {"J_aa", s.J_aa}, {"J_bb", s.J_bb},
                 {"J_ab", s.J_ab},     {"I_aa", s.I_aa}, {"I_bb", s.I_bb}, {"I_ab", s.I_ab}};
  r.regime_warnings = check_regime(geom, wp);
  finish(r);
  return r;
}

double w_parallel_plateau(double r0, double ell, double kappa, const PhysicalConstants& pc)
{
  require_positive(r0, "r0");
  require_positive(ell, "ell");
  pc.validate();
  return pc.alpha_fs / kPi * (2.0 * std::log(r0 / ell) - kappa);
}

double w_intersecting_closed(double theta, double v, double kappa, const PhysicalConstants& pc)
{
  if (!(theta > 0.0 && theta < 0.5 * kPi)) {
    throw ValidationError("theta must lie in (0, pi/2)");
  }
  require_speed(v);
  pc.validate();
  return pc.alpha_fs / (2.0 * kPi) * (2.0 * std::log(2.0 * std::sin(theta) / (v * v)) + 4.0 - 3.0 * kappa);
}

double intersecting_asymptotic_budget(const IntersectingGeometry& geom, double ell, const PhysicalConstants& pc)
{
  geom.validate();
  require_positive(ell, "ell");
  pc.validate();
  const double k = geom.v * std::sin(geom.theta);
  const double j_ab = 4.0 * (0.5 * ell / geom.L1 + geom.L1 / geom.L2);
  const double i_terms = 2.0 * k + 8.0 * k * std::abs(std::log(2.0 * k)) + 6.0 * k * geom.L1 / geom.L2;
  return pc.alpha_fs / (2.0 * kPi) * (j_ab + i_terms);
}

double interference_pattern(double psi1_sq, double psi2_sq, double phase, double w_total)
{
  if (!(psi1_sq >= 0.0) || !std::isfinite(psi1_sq) || !(psi2_sq >= 0.0) || !std::isfinite(psi2_sq)) {
    throw ValidationError("intensities must be finite and non-negative");
  }
  return psi1_sq + psi2_sq + 2.0 * std::exp(w_total) * std::sqrt(psi1_sq * psi2_sq) * std::cos(phase);
}

double interference_pattern(double psi1_sq, double psi2_sq, double phase, const DecoherenceResult& result)
{
  return interference_pattern(psi1_sq, psi2_sq, phase, result.w_total);
}

FlightBound max_flight_distance(const ValidityInput& inp)
{
  inp.validate();
  FlightBound out;
  // 2 p dx0^2 / hbar with p = sqrt(2 m E) in eV and hbar c in eV m.
  out.distance_m = 2.0 * std::sqrt(2.0 * inp.electron_mass * inp.energy) * inp.dx0 * inp.dx0 / kHbarC;
  if (inp.energy > 0.05 * inp.electron_mass) {
    out.warnings.push_back({"relativistic", "E = " + ratio_text(inp.energy) +
                                                " eV exceeds 5% of the rest energy: nonrelativistic bound"});
  }
  return out;
}

std::vector<RegimeWarning> check_regime(const ParallelGeometry& geom, const Wavepacket& wp,
                                        const std::optional<SpreadingCheck>& spreading)
{
  geom.validate();
  const double ell = characteristic_length(wp);
  std::vector<RegimeWarning> out;
  if (geom.T < 10.0 * ell) {
    out.push_back({"scale_ell_T", "ℓ ≪ T violated (T/ℓ = " + ratio_text(geom.T / ell) + ")"});
  }
  if (geom.T < 10.0 * geom.r0) {
    out.push_back({"scale_r0_T", "r₀ ≪ T violated (T/r₀ = " + ratio_text(geom.T / geom.r0) + ")"});
  }
  add_speed_and_spreading(out, geom.v, geom.v * geom.T, spreading);
  return out;
}

std::vector<RegimeWarning> check_regime(const IntersectingGeometry& geom, const Wavepacket& wp,
                                        const std::optional<SpreadingCheck>& spreading)
{
  geom.validate();
  auto out = segment_regime_warnings(segment_input(geom, characteristic_length(wp)));
  add_speed_and_spreading(out, geom.v, geom.L1 + geom.L2, spreading);
  return out;
}

} // namespace qedcoh
