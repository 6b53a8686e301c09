#pragma once

#include "qedcoh/quadrature.hpp"
#include "qedcoh/regime.hpp"

#include <vector>

namespace qedcoh {

/// Straight-line self kernel
///
///   K(T, rho) = 2 PV int_0^T dtau (T - tau) / (tau^2 - rho^2)
///             = (T/rho) ln((T - rho)/(T + rho)) - ln((T^2 - rho^2)/rho^2),
///
/// with absolute values inside the logs when T < rho (no pole on the
/// path). Evaluated in terms of atanh / log1p so that neither T >> rho nor
/// T << rho loses precision.
///
/// Throws ValidationError for nonpositive or non-finite arguments and
/// DegenerateInput for T == rho (use kernel_K_coincident_limit()).
double kernel_K_closed(double T, double rho);

/// K at T = rho: -2 ln 2.
double kernel_K_coincident_limit();

/// Large-T form -2 - ln(T^2/rho^2).
double kernel_K_asymptotic(double T, double rho);

/// Principal-value quadrature of the defining integral. The pole at
/// tau = rho is passed to the PV engine when rho < T; for rho > T the
/// ordinary adaptive rule is used. Throws PoleOnBoundary when rho == T.
quad::IntegrationResult kernel_K_numeric(double T, double rho, const quad::QuadratureConfig& cfg = {});

/// Two straight segments meeting at the vertex of an opening angle 2 theta.
/// Segment a has length L1, segment b length L2; ell is the wavepacket
/// scale and v the speed (c = 1), so T1 = L1/v, T2 = L2/v, tau = ell/v.
struct SegmentPairInput
{
  double L1 = 0.0;
  double L2 = 0.0;
  double ell = 0.0;
  double v = 0.0;
  double theta = 0.0;
  /// The I_aa integrations start at vertex_cutoff_factor * tau.
  double vertex_cutoff_factor = 1.0;
  /// J_ab removes junction_gap_factor * tau on either side of the junction.
  double junction_gap_factor = 0.5;

  /// Hard checks only: positive lengths and factors, 0 < v < 1,
  /// 0 < theta < pi/2. Throws ValidationError naming the field.
  void validate() const;
};

/// Scale-separation and small-velocity diagnostics for a segment pair:
/// ell << L1, L1 << L2 (ratios below 10) and v sin(theta) > 0.2.
std::vector<RegimeWarning> segment_regime_warnings(const SegmentPairInput& inp);

/// Default tolerances for the nested principal-value segment integrals
/// (rel_tol 1e-8). Their inner integrands lose digits near the poles, and
/// about 1e-9 relative is the floor they reach.
quad::QuadratureConfig segment_quadrature_defaults();

/// Junction cross term
///   ln[(T1 + g tau)(T2 + g tau) / (2 g tau (T1 + T2))],  g = junction_gap_factor,
/// which is int_0^{T1 - g tau} dt int_{T1 + g tau}^{T1 + T2} dt' (t - t')^-2.
/// With `asymptotic` set, returns ln(L1/ell) instead.
/// Throws DomainError when the gap swallows segment a (g ell >= L1).
double segment_J_ab_closed(const SegmentPairInput& inp, bool asymptotic = false);

/// Adaptive cubature of the double integral behind segment_J_ab_closed.
quad::IntegrationResult segment_J_ab_numeric(const SegmentPairInput& inp,
                                             const quad::QuadratureConfig& cfg = {});

/// Small-v form ln(ell v^2 sin^2 theta / L1) + 2(ln 2 - 1).
double segment_I_aa_closed(const SegmentPairInput& inp);

/// Nested principal-value evaluation of
///   int_c^{T1} dt int_c^{T1} dt' [(t - t')^2 - v^2 sin^2 theta (t + t')^2]^-1,
/// c = vertex_cutoff_factor * tau. The inner poles
/// t' = t (1 -+ k)/(1 +- k), k = v sin theta, are located analytically for
/// each outer t; the outer rule breaks where they cross the boundaries.
/// Throws DomainError when the cutoff is not below T1; a missed tolerance
/// is reported through `converged`.
quad::IntegrationResult segment_I_aa_numeric(const SegmentPairInput& inp,
                                             const quad::QuadratureConfig& cfg = segment_quadrature_defaults());

/// Small-v form 1 - ln(2 v sin theta).
double segment_I_ab_closed(const SegmentPairInput& inp);

/// Principal-value evaluation of
///   int_0^{T1} dt int_{T1}^{T1 + T2} dt' [(t - t')^2 - 4 T1^2 v^2 sin^2 theta]^-1,
/// pole at t' = t + 2 T1 v sin theta whenever that lies on segment b.
quad::IntegrationResult segment_I_ab_numeric(const SegmentPairInput& inp,
                                             const quad::QuadratureConfig& cfg = segment_quadrature_defaults());

/// -2[1 + ln(L2 / (2 L1 v sin theta))], the large-T form of K with
/// T = L2/v and rho = 2 L1 sin theta.
double segment_I_bb_closed(const SegmentPairInput& inp);

/// K(L2/v, 2 L1 sin theta) without the large-T reduction.
double segment_I_bb_kernel(const SegmentPairInput& inp);

/// Straight-segment self term -2 + kappa - 2 ln(L/(ell v)); J_aa for
/// L = L1 and J_bb for L = L2.
/// Throws ValidationError for L, ell <= 0 or v outside (0, 1).
double segment_J_straight(double L, double ell, double v, double kappa);

} // namespace qedcoh
