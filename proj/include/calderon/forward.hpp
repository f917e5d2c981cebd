#pragma once

#include <memory>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "calderon/dft.hpp"
#include "calderon/geometry.hpp"

namespace cald {

using SpMat = Eigen::SparseMatrix<double>;
using VecXc = Eigen::VectorXcd;
using MatXc = Eigen::MatrixXcd;
using VecXd = Eigen::VectorXd;
using MatXd = Eigen::MatrixXd;

/// Labeled dense operator, used for exports and selftest reporting.
struct DiscreteOperator {
  MatXc matrix;
  std::string domain_label;
  std::string codomain_label;
  bool symmetric = false;
};

/// Partial Dirichlet-to-Neumann matrix on the boundary-node basis. The matrix
/// is boundary-square; only (gamma_minus rows) x (gamma_plus cols) are data.
struct PartialDtN {
  MatXc lambda;
  std::vector<std::uint8_t> rows_mask;  // Gamma_-
  std::vector<std::uint8_t> cols_mask;  // Gamma_+
  std::string q_label;
};

/// Second-order finite-volume discretization of -Delta_g on the cylinder grid,
/// with the summation-by-parts trace pair (tr, tr_nu).
///
/// The stiffness A is symmetric with A 1 = 0. Interior rows of the operator
/// are (A u)_i / d_i; boundary rows are zero; tr_nu(u) = (A u)_B / s. With
/// these conventions the generalized Green identity
///   (u | -Delta v)_M - (-Delta u | v)_M = (tr_nu u | tr v) - (tr u | tr_nu v)
/// holds exactly for every pair of fields.
class ForwardModel {
public:
  explicit ForwardModel(const ManifoldGrid& grid);

  const ManifoldGrid& grid() const { return *grid_; }
  const SpMat& stiffness() const { return A_; }

  // Weighted inner products: volume over all nodes, surface over boundary.
  cplx vol_inner(const VecXc& u, const VecXc& v) const;
  double vol_norm(const VecXc& u) const;
  cplx surf_inner(const VecXc& f, const VecXc& h) const;
  double surf_norm(const VecXc& f) const;

  VecXc stiffness_apply(const VecXc& u) const;

  /// -Delta_g u at interior rows (strong form), zero at boundary rows.
  VecXc apply_minus_laplace(const VecXc& u) const;

  /// e^{tau x1}(-Delta_g + q)e^{-tau x1} u at interior rows (q read at
  /// interior nodes), zero at boundary rows. tau = 0 gives -Delta_g + q.
  VecXc apply_conjugated(const VecXc& q, double tau, const VecXc& u) const;

  VecXc trace(const VecXc& u) const;
  VecXc normal_trace(const VecXc& u) const;  // (A u)_B / s
  VecXc flux(const VecXc& u) const;          // (A u)_B

  VecXc exp_tau_x1(double tau) const;           // e^{tau x1} per node
  VecXc boundary_exp_tau_x1(double tau) const;  // restricted to boundary nodes

  /// Factorized interior Dirichlet operator for -Delta_g + q.
  class Solver {
  public:
    /// Full field with tr(u) = f (f over boundary nodes) and interior rows of
    /// (-Delta+q)u equal to rhs (rhs = 0 for the homogeneous problem).
    VecXc solve(const VecXc& f, const VecXc* interior_rhs = nullptr) const;
    double condition_estimate() const { return cond_; }

  private:
    friend class ForwardModel;
    const ForwardModel* fm_ = nullptr;
    std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<cplx>>> lu_;
    double cond_ = 0.0;
  };

  /// Factorize; throws DirichletEigenvalue if the factorization reports
  /// singularity (condition estimate > 1e12).
  Solver make_solver(const VecXc& q) const;

  VecXc solve_dirichlet(const VecXc& q, const VecXc& f) const;

  /// One column per gamma_plus node basis function; rows restricted to
  /// gamma_minus.
  PartialDtN dtn(const VecXc& q, const std::vector<std::uint8_t>& gamma_plus,
                 const std::vector<std::uint8_t>& gamma_minus, const std::string& q_label) const;

  int num_nodes() const { return grid_->num_nodes(); }
  int num_boundary() const { return grid_->num_boundary(); }

private:
  const ManifoldGrid* grid_;
  SpMat A_;
  VecXd vol_w_;   // d_n over all nodes
  VecXd surf_w_;  // s_b over boundary nodes
};

}  // namespace cald
