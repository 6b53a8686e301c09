#pragma once

#include "qedcoh/kernels.hpp"
#include "qedcoh/quadrature.hpp"
#include "qedcoh/regime.hpp"
#include "qedcoh/wavepacket.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qedcoh {

struct PhysicalConstants
{
  double alpha_fs = 7.2973525693e-3;

  /// Throws ValidationError unless 0 < alpha_fs < 1.
  void validate() const;
};

/// Two parallel straight paths a distance r0 apart, traversed for a
/// rest-frame time T at speed v (c = 1, lengths and times in one unit).
struct ParallelGeometry
{
  double r0 = 0.0;
  double T = 0.0;
  double v = 0.0;

  void validate() const;
};

/// Paths leaving a common vertex at half-opening angle theta, running a
/// length L1 before turning and a length L2 (> L1) to a common end point.
struct IntersectingGeometry
{
  double L1 = 0.0;
  double L2 = 0.0;
  double theta = 0.0;
  double v = 0.0;

  void validate() const;
};

/// Photon kernel of the parallel geometry: the exact K(T, r0) or its
/// T >> r0 asymptote.
enum class PhotonKernel
{
  exact,
  asymptotic,
};

/// Segment integrals of the intersecting geometry: closed small-v forms,
/// or numeric principal values with the pre-asymptotic J_ab and the exact
/// straight kernel for I_bb.
enum class SegmentBranch
{
  closed,
  assembled,
};

struct DecoherenceResult
{
  double w_vacuum = 0.0;
  double w_photon = 0.0;
  /// Always w_vacuum + w_photon.
  double w_total = 0.0;
  /// exp(w_total).
  double contrast = 1.0;
  /// Numerical error carried into w_total (kappa and segment quadratures).
  double error_estimate = 0.0;
  /// Named ingredients in evaluation order (kappa, ell, segment terms).
  std::vector<std::pair<std::string, double>> breakdown;
  std::vector<RegimeWarning> regime_warnings;
  /// Informational remarks that are not regime violations.
  std::vector<std::string> notes;

  /// Value of a breakdown entry; throws std::out_of_range if absent.
  double term(const std::string& name) const;
};

/// Inputs of the wavepacket-spreading bound.
struct ValidityInput
{
  /// Mean kinetic energy in eV.
  double energy = 0.0;
  /// Initial wavepacket size in metres.
  double dx0 = 0.0;
  /// Electron rest energy in eV.
  double electron_mass = 510998.95;

  void validate() const;
};

struct FlightBound
{
  /// 2 sqrt(2 m E) dx0^2 in metres.
  double distance_m = 0.0;
  std::vector<RegimeWarning> warnings;
};

/// (alpha/pi)[2 - kappa + 2 ln(T/ell)].
double w_vacuum_parallel(const ParallelGeometry& geom, const KappaResult& kap,
                         const PhysicalConstants& pc = {});

/// (alpha/pi) K(T, r0) for PhotonKernel::exact (DegenerateInput at
/// T = r0), -2(alpha/pi)[1 + ln(T/r0)] for PhotonKernel::asymptotic.
double w_photon_parallel(const ParallelGeometry& geom, PhotonKernel mode, const PhysicalConstants& pc = {});

/// W_V + W_gamma for the parallel geometry. For T >> r0, ell the total
/// tends to (alpha/pi)[2 ln(r0/ell) - kappa], independent of T.
DecoherenceResult w_total_parallel(const ParallelGeometry& geom, const Wavepacket& wp,
                                   PhotonKernel mode = PhotonKernel::exact,
                                   const quad::QuadratureConfig& cfg = {}, const PhysicalConstants& pc = {});

/// -(alpha/2pi) J with J = 2 J_aa + J_bb + 4 J_ab. The closed branch uses
/// J_ab = ln(L1/ell), which reproduces
/// (alpha/2pi)[3(2 - kappa) + 2 ln(L2/(ell v^3))]; the assembled branch
/// uses the pre-asymptotic J_ab.
double w_vacuum_intersecting(const IntersectingGeometry& geom, const Wavepacket& wp,
                             SegmentBranch branch = SegmentBranch::closed,
                             const quad::QuadratureConfig& cfg = {}, const PhysicalConstants& pc = {});

/// (alpha/2pi) I with I = 2 I_aa + I_bb + 4 I_ab. The closed branch equals
/// -(alpha/pi)[1 - ln 2 + ln(L2/(ell v sin theta))].
/// Numeric segment integrals run at rel_tol no tighter than
/// segment_quadrature_defaults(); throws NonConvergence if one misses it.
double w_photon_intersecting(const IntersectingGeometry& geom, const Wavepacket& wp,
                             SegmentBranch branch = SegmentBranch::closed,
                             const quad::QuadratureConfig& cfg = {}, const PhysicalConstants& pc = {});

/// Full intersecting-path result with the J and I breakdown. In the closed
/// branch w_total = (alpha/2pi)[2 ln(2 sin theta / v^2) + 4 - 3 kappa],
/// independent of ell and L2. `cfg` drives kappa and the numeric segment
/// integrals (the latter never tighter than segment_quadrature_defaults()).
DecoherenceResult w_total_intersecting(const IntersectingGeometry& geom, const Wavepacket& wp,
                                       SegmentBranch branch = SegmentBranch::closed,
                                       const quad::QuadratureConfig& cfg = {},
                                       const PhysicalConstants& pc = {});

/// Closed-form reference (alpha/pi)[2 ln(r0/ell) - kappa].
double w_parallel_plateau(double r0, double ell, double kappa, const PhysicalConstants& pc = {});

/// Closed-form reference (alpha/2pi)[2 ln(2 sin theta / v^2) + 4 - 3 kappa].
double w_intersecting_closed(double theta, double v, double kappa, const PhysicalConstants& pc = {});

/// Size, in units of W, of the terms the closed small-v segment forms drop,
/// each order taken with unit coefficient (k = v sin theta):
///   (alpha/2pi)[4(ell/(2 L1) + L1/L2) + 2k + 8k|ln 2k| + 6 k L1/L2]
/// for J_ab, I_aa, I_ab and I_bb respectively. The assembled and closed
/// branches are expected to agree within this budget.
double intersecting_asymptotic_budget(const IntersectingGeometry& geom, double ell,
                                      const PhysicalConstants& pc = {});

/// n = |psi1|^2 + |psi2|^2 + 2 e^W sqrt(|psi1|^2 |psi2|^2) cos(phase).
/// Throws ValidationError for negative or non-finite intensities.
double interference_pattern(double psi1_sq, double psi2_sq, double phase, double w_total);
double interference_pattern(double psi1_sq, double psi2_sq, double phase, const DecoherenceResult& result);

/// Distance over which a minimum-uncertainty packet keeps its size:
/// L << 2 sqrt(2 m E) dx0^2 (hbar = c = 1), returned in metres. Warns with
/// code "relativistic" when E > 0.05 m.
FlightBound max_flight_distance(const ValidityInput& inp);

/// Spreading data for check_regime: the packet's energy and size, and the
/// size of the geometry's length unit in metres.
struct SpreadingCheck
{
  ValidityInput input;
  double length_unit_m = 1e-6;
};

/// Soft diagnostics. Parallel: T >= 10 ell and T >= 10 r0. Intersecting:
/// the segment_regime_warnings() set. Both: "nonrelativistic" when v > 0.3,
/// and "spreading" when the flight distance (v T, or L1 + L2) exceeds a
/// tenth of max_flight_distance().
std::vector<RegimeWarning> check_regime(const ParallelGeometry& geom, const Wavepacket& wp,
                                        const std::optional<SpreadingCheck>& spreading = std::nullopt);
std::vector<RegimeWarning> check_regime(const IntersectingGeometry& geom, const Wavepacket& wp,
                                        const std::optional<SpreadingCheck>& spreading = std::nullopt);

} // namespace qedcoh
