#pragma once

#include "calderon/carleman.hpp"
#include "calderon/geometry.hpp"

namespace cald {

/// Smooth compactly supported angular profile exp(1 - 1/(1-s^2)) rescaled to
/// half-width `width` around theta0.
struct Bump {
  double theta0 = 0.0;
  double width = 0.2;  // radians

  double operator()(double theta) const;
  double mass() const;  // integral b(theta) dtheta
};

enum class CgoMode { Partial, Global };

/// Complex geometrical optics bundle u0 = e^{-tau x1}(a + r0), optionally
/// extended by the Schrodinger remainder u = u0 + e^{-tau x1} r1.
struct CgoBundle {
  double tau = 0.0;
  double lambda = 0.0;
  CgoMode mode = CgoMode::Global;
  Bump bump;
  VecXc amplitude;  // a
  VecXc source;     // f used by the R_tau solve (= -L_tau a, discrete)
  VecXc f_minus;    // boundary extension on S^-_tau
  VecXc r0;
  VecXc u0;
  VecXc r1;  // empty unless schrodinger side was built
  VecXc u;
  bool has_schrodinger = false;
  double r0_norm = 0.0;
  double r1_norm = 0.0;
  double amplitude_sup = 0.0;
  double support_max_outside = 0.0;  // certificate: max |tr u0| outside allowed set
  int neumann_iters = 0;
};

/// a(x1,r,theta) = e^{-i tau r} |g|^{-1/4} c^{1/2} e^{i lambda(x1 + ir)} b(theta)
/// in the chart coordinates; |g| is the metric determinant in (x1, r, theta).
/// When `E` is supplied (partial mode) the bump must vanish on the rim outside
/// E, otherwise BumpOutsideE is thrown.
VecXc amplitude_field(const ManifoldGrid& grid, const PolarChart& chart, double tau, double lambda,
                      const Bump& bump, const AngularInterval* E = nullptr);

/// Paper-form source f = -e^{i tau r}(-Delta_g)(|g|^{-1/4} c^{1/2} e^{i lambda Phi} b):
/// the discrete Laplacian applied to the tau-independent part, so ||f|| is
/// tau-uniform up to the unimodular factor.
VecXc amplitude_source(const ForwardModel& fm, const PolarChart& chart, double tau, double lambda,
                       const Bump& bump);

/// Boundary extension f^-_{tau,delta} on S^-_tau: partial mode puts -a on
/// V^{tau,delta} and 0 on Gamma_a^{tau,delta} (and checks the tangential
/// condition); global mode puts -a everywhere on S^-_tau.
VecXc boundary_extension(const ForwardModel& fm, const BoundaryDecomposition& dec, const VecXc& a,
                         CgoMode mode);

/// Allowed support of tr(u0)/tr(u): Gamma_{sgn tau} in partial mode,
/// pM_{sgn tau} in global mode.
std::vector<std::uint8_t> allowed_trace_mask(const BoundaryDecomposition& dec, CgoMode mode);

CgoBundle build_cgo_harmonic(const ModalCarleman& mc, const BoundaryDecomposition& dec,
                             const PolarChart& chart, double tau, double lambda, const Bump& bump,
                             CgoMode mode);

/// Oracle-side extension: solves (Id + G_tau q) r1 = -G_tau q e^{tau x1} u0 by
/// Neumann series (truncated at 1e-12 relative increment). `g_norm` is the
/// volume-weighted operator norm of G_tau used for the contraction check.
void build_cgo_schrodinger(const ModalCarleman& mc, const TauOperators& ops, const VecXc& q,
                           double g_norm, CgoBundle& bundle);

/// The second CGO of the pairing: u2 = conj(u0 of a harmonic bundle at
/// (-tau, lambda, bump)), a solution of (-Delta_g) u2 = 0 with trace supported
/// in Gamma_{-sgn tau} / pM_{-sgn tau}.
VecXc conjugate_partner_u2(const CgoBundle& minus_tau_bundle);

/// Nodal multiplication by the potential, read at interior nodes only (the
/// convention that keeps the discrete integral identity exact).
VecXc q_mult(const ManifoldGrid& grid, const VecXc& q, const VecXc& v);

}  // namespace cald
