#pragma once

#include <memory>
#include <vector>

#include "calderon/forward.hpp"

namespace cald {

/// Theta-mode layout of the cylinder grid. Both metric presets are invariant
/// under rotations of the transversal disk, so the stiffness and every
/// tau-decomposition boundary set are block-diagonal in the theta DFT basis.
/// The constrained minimum-norm problems below therefore decouple exactly
/// into per-mode problems over the (x1, rho) plane.
struct ModalLayout {
  const ManifoldGrid* grid = nullptr;
  int nm = 0;                    // n1 * nrho unknowns per mode
  std::vector<int> interior;     // flat (i*nrho+m) interior indices
  std::vector<int> boundary;     // flat boundary indices, ascending
  std::vector<int> b_pos;        // flat -> position in `boundary`, or -1
  VecXd weights;                 // volume weight per flat index (theta-collapsed)
  VecXd surf;                    // surface weight per boundary position
  std::vector<double> normal_phi;
  std::vector<MatXd> A_k;        // modal stiffness blocks, one per theta mode

  int flat(int i, int m) const { return i * grid->nrho() + m; }
  double x1_of_flat(int j) const { return grid->x1(j / grid->nrho()); }

  /// Physical field -> per-mode coefficients; column k is mode k (length nm).
  MatXc to_modes(const VecXc& field) const;
  VecXc from_modes(const MatXc& modes) const;
  /// Boundary vector (per physical boundary node) -> modal boundary coeffs
  /// (rows: per-mode boundary position, cols: mode).
  MatXc boundary_to_modes(const VecXc& bvec) const;
  VecXc boundary_from_modes(const MatXc& modes) const;
};

/// Per-tau assembled operators. All blocks are real (q = 0 throughout).
struct TauOperators {
  double tau = 0.0;
  std::vector<int> s_plus_flats;   // boundary flats in S^+_tau
  std::vector<int> s_minus_flats;  // boundary flats in S^-_tau
  std::vector<MatXd> H;            // minimum-norm right inverse, per mode
  std::vector<MatXd> Pperp;        // projector onto the homogeneous kernel
  std::vector<MatXd> G;            // G_tau = H_tau + Pperp_tau H_{-tau}^*
  std::vector<MatXd> R;            // R_tau: (f_interior ++ f_minus) -> field
  int kernel_dim = 0;              // summed over modes
  double sigma_truncation = 1e-10;
  // Constraint rows whose singular values fell below the truncation cut, in
  // excess of the structural kernel. Nonzero counts appear once e^{tau x1}
  // outruns double precision across the cylinder; the truncated-SVD solve
  // then drops those unresolvable constraint combinations.
  int truncated_rows = 0;
};

/// Green operators, projector, the inhomogeneous solver R_tau and the single
/// layer operator, realized as truncated-SVD minimum-norm solves whose
/// constraints are the defining conditions: L_tau u = v on interior nodes and
/// tr(u) = 0 on S^-_tau (H_tau), plus the m_tau pair-norm variant (R_tau).
class ModalCarleman {
public:
  explicit ModalCarleman(const ForwardModel& fm);

  const ForwardModel& forward() const { return *fm_; }
  const ModalLayout& layout() const { return lay_; }

  /// Assemble (and cache) the full operator family at +tau and -tau.
  std::shared_ptr<const TauOperators> ops(double tau) const;

  // ---- physical-space applications ----
  VecXc apply_G(const TauOperators& t, const VecXc& v) const;
  VecXc apply_H(const TauOperators& t, const VecXc& v) const;
  VecXc apply_Pperp(const TauOperators& t, const VecXc& v) const;
  /// G_tau^* with respect to the volume-weighted inner product.
  VecXc apply_G_adjoint(const TauOperators& t, const VecXc& v) const;

  /// Minimum pair-norm solution of L_tau u = f with tr(u)|_{S^-_tau} = f_minus.
  /// f_minus is given per physical boundary node (entries outside S^-_tau are
  /// ignored); the returned field carries the prescribed trace exactly.
  VecXc rtau_solve(const TauOperators& t, const VecXc& f, const VecXc& f_minus) const;

  // ---- diagnostics ----
  /// Volume-weighted operator norm (max over theta modes).
  double op_norm(const std::vector<MatXd>& blocks) const;
  double op_norm_G(const TauOperators& t) const { return op_norm(t.G); }
  double op_norm_H(const TauOperators& t) const { return op_norm(t.H); }
  /// max-entry difference |G_tau^* - G_{-tau}| over modes (absolute).
  double adjoint_residual(const TauOperators& plus, const TauOperators& minus) const;
  double g_max_entry(const TauOperators& t) const;

  /// Assemble a mode block family into a dense physical-space matrix
  /// (num_nodes x num_nodes); intended for export at small grids.
  MatXc assemble_dense(const std::vector<MatXd>& blocks) const;

private:
  const ForwardModel* fm_;
  ModalLayout lay_;
  mutable std::vector<std::pair<double, std::shared_ptr<const TauOperators>>> cache_;

  std::shared_ptr<const TauOperators> build(double tau) const;
};

/// Single-layer operator S_tau assembled from G_tau by weighted adjoints and
/// boundary exponential scalings. Dense over boundary nodes.
struct SingleLayer {
  double tau = 0.0;
  MatXc matrix;                             // |B| x |B|
  std::vector<std::uint8_t> depends_cols;   // partial M_{-sgn(tau)}
  std::vector<std::uint8_t> support_rows;   // B, one-ring pad of S^+ inside pM_sgn
  double masked_column_residual = 0.0;      // largest |entry| removed by masking
};

SingleLayer assemble_single_layer(const ModalCarleman& mc, const TauOperators& t);

}  // namespace cald
