#pragma once

#include <Eigen/LU>

#include "calderon/carleman.hpp"
#include "calderon/cgo.hpp"

namespace cald {

/// Id + S_tau (Lambda_q - Lambda_0) restricted to boundary vectors supported
/// in the data support Gamma_+ (the operator maps that subspace into itself
/// because S_tau's range sits in B).
struct BoundaryIntegralOperator {
  double tau = 0.0;
  std::vector<int> domain;               // boundary indices of Gamma_+ support
  std::vector<std::uint8_t> domain_mask;
  MatXc op;                              // |domain| x |domain|
  Eigen::PartialPivLU<MatXc> lu;
  double condition = 0.0;
};

/// Masked product T = S_tau (Lambda_q - Lambda_0): only (Gamma_- rows) x
/// (Gamma_+ cols) of the DtN matrices enter, and of those only the
/// pM_{-sgn tau} rows that S_tau reads. Entries outside the data support are
/// never touched, so poisoned entries cannot propagate.
BoundaryIntegralOperator assemble_bie(const ForwardModel& fm, const SingleLayer& sl,
                                      const PartialDtN& dtn_q, const PartialDtN& dtn_0);

/// Solve (Id + S_tau(Lambda_q - Lambda_0)) h = rhs for h supported in
/// Gamma_+; rhs is a full boundary vector supported there as well.
VecXc solve_bie(const BoundaryIntegralOperator& op, const VecXc& rhs);

/// <(Lambda_q - Lambda_0) tr(u1), tr(u2)>_{partial}: the surface-weighted
/// pairing that equals the volume integral (q u1 | u2)_M by the discrete
/// integral identity. Reads only Gamma_- rows and Gamma_+ columns.
cplx pairing(const ForwardModel& fm, const PartialDtN& dtn_q, const PartialDtN& dtn_0,
             const VecXc& tr_u2, const VecXc& tr_u1);

struct ExtractionResult {
  cplx value = 0.0;       // D(lambda, gamma)
  double residual = 0.0;  // difference of successive tau extrapolants
};

/// Richardson extrapolation of the pairings in 1/tau (order 1: last two
/// ladder points; order 2: quadratic through the last three), then the
/// chart-offset attenuation correction e^{2 lambda eps} and division by the
/// bump mass.
ExtractionResult extract_transform_sample(const std::vector<std::pair<double, cplx>>& pairings,
                                          double lambda, double epsilon, double bump_mass,
                                          int order = 1);

}  // namespace cald
