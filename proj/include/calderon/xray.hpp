#pragma once

#include <string>
#include <vector>

#include "calderon/forward.hpp"
#include "calderon/geometry.hpp"

namespace cald {

/// Parallel-chord geodesic family: chord (j, i) is make_chord(offsets[i],
/// angles[j]). For exponential (lambda != 0) inversion the angles must cover
/// the full circle.
struct ParallelFamily {
  std::vector<double> angles;
  std::vector<double> offsets;

  static ParallelFamily uniform(int n_angles, int n_offsets, bool full_circle);
};

/// Complex samples D(lambda, gamma) of the attenuated transform over a
/// geodesic family and a symmetric lambda grid.
struct TransformSamples {
  std::vector<double> lambdas;
  ParallelFamily family;
  std::vector<MatXc> values;            // per lambda: (angles x offsets)
  std::vector<MatXd> extrap_residuals;  // per lambda, optional
  std::string provenance;               // "measured" or "oracle"
};

/// Bilinear evaluation of a transversal nodal field at a point of the disk.
cplx interp_transversal(const ManifoldGrid& grid, const VecXc& field, const Vec2& x);

/// Composite-trapezoid quadrature of e^{sign 2 lambda t} (-2t)^{tpow} F(gamma(t))
/// along the polyline. The default sign -1 gives the attenuated transform of
/// the theorems; tpow > 0 supplies the lambda-derivative corrections.
cplx forward_ert(const ManifoldGrid& grid, const VecXc& transversal_field, double lambda,
                 const Geodesic& geo, int tpow = 0, double atten_sign = -1.0);

/// x1-Fourier slice of a full-grid field: sum_i w_i e^{i mu x1_i} F(i, .)
/// (q extended by zero outside the cylinder).
VecXc x1_fourier_slice(const ManifoldGrid& grid, const VecXc& field, double mu);

/// Oracle transform samples of a known cq field (forward quadrature route).
TransformSamples oracle_transform_samples(const ManifoldGrid& grid, const VecXc& cq,
                                          const std::vector<double>& lambdas,
                                          const ParallelFamily& family);

/// Constant-attenuation exponential Radon inversion (frequency-domain
/// exponential-ramp filter, Hann window). mu = 2 lambda; mu = 0 is plain FBP.
/// Samples are in the D-form (t measured from the chord entry).
VecXc exp_radon_invert(const ManifoldGrid& grid, const ParallelFamily& family, const MatXc& data,
                       double mu);

/// Euclidean-preset filtered backprojection (lambda = 0 slice).
VecXc fbp_invert(const ManifoldGrid& grid, const ParallelFamily& family, const MatXc& data);

/// Per-lambda slice \hat{cq}(2 lambda, .) with the e^{2|lambda|T_max} <= 1e3
/// conditioning guard.
VecXc per_lambda_invert(const ManifoldGrid& grid, const ParallelFamily& family, const MatXc& data,
                        double lambda);

/// Iterative lambda-derivative scheme of Theorem 2's proof: recovers
/// F_k = (d^k/dmu^k) \hat{cq}(0,.) for k = 0..K from the sample family.
std::vector<VecXc> lambda_derivative_recover(const ManifoldGrid& grid,
                                             const TransformSamples& samples, int K);

/// Inverse one-dimensional Fourier transform in mu of supplied slices
/// \hat{cq}(mu_k,.) (trapezoid in mu), divided by the conformal factor.
VecXc fourier_synthesize_slices(const ManifoldGrid& grid, const std::vector<double>& mus,
                                const std::vector<VecXc>& slices);

/// Taylor route: build \hat{cq}(mu,.) from derivative fields F_k on
/// |mu| <= mu_max (n_mu samples), then synthesize as above.
VecXc fourier_synthesize_taylor(const ManifoldGrid& grid, const std::vector<VecXc>& deriv_fields,
                                double mu_max, int n_mu);

/// Finite-difference weights (Fornberg) for the m-th derivative at x0 on the
/// given nodes.
std::vector<double> fd_weights(const std::vector<double>& nodes, double x0, int m);

}  // namespace cald
