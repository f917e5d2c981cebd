#include "calderon/forward.hpp"

#include <random>
#include <vector>

namespace cald {

namespace {

VecXc spmul(const SpMat& A, const VecXc& u) {
  return A * u.real() + cplx(0, 1) * (A * u.imag());
}

}  // namespace

ForwardModel::ForwardModel(const ManifoldGrid& grid) : grid_(&grid) {
  const int N = grid.num_nodes();
  const int n1 = grid.n1(), nr = grid.nrho(), nt = grid.ntheta();
  const double h1 = grid.h1(), hr = grid.hrho(), ht = grid.htheta();
  const double sc = std::sqrt(grid.conf());

  vol_w_.resize(N);
  for (int n = 0; n < N; ++n) vol_w_[n] = grid.volume_weight(n);
  surf_w_.resize(grid.num_boundary());
  for (int b = 0; b < grid.num_boundary(); ++b) surf_w_[b] = grid.surface_weight(b);

  auto rho_weight = [&](int m) {
    if (m == nr - 1) return 0.5 * hr * (1.0 - 0.25 * hr);
    return grid.rho(m) * hr;
  };

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(size_t(N) * 8);
  auto add_edge = [&](int a, int b, double k) {
    trips.emplace_back(a, a, k);
    trips.emplace_back(b, b, k);
    trips.emplace_back(a, b, -k);
    trips.emplace_back(b, a, -k);
  };

  // x1 edges: coefficient sqrt|g| g^{11} = c^{1/2} c0 rho, integrated over the
  // transversal cell of the column.
  for (int i = 0; i + 1 < n1; ++i)
    for (int m = 0; m < nr; ++m)
      for (int l = 0; l < nt; ++l) {
        const double k = sc * grid.c0(m, l) * rho_weight(m) * ht / h1;
        add_edge(grid.node(i, m, l), grid.node(i + 1, m, l), k);
      }

  // Transversal edges: in two dimensions the conformal factor c0 drops out of
  // the Dirichlet form, leaving the flat polar coefficients.
  for (int i = 0; i < n1; ++i) {
    const double w1 = (i == 0 || i == n1 - 1) ? 0.5 * h1 : h1;
    for (int m = 0; m + 1 < nr; ++m)
      for (int l = 0; l < nt; ++l) {
        const double rho_face = (m + 1) * hr;
        const double k = sc * rho_face * w1 * ht / hr;
        add_edge(grid.node(i, m, l), grid.node(i, m + 1, l), k);
      }
    for (int m = 0; m < nr; ++m) {
      const double hcell = (m == nr - 1) ? 0.5 * hr : hr;
      const double k = sc * (hcell / grid.rho(m)) * w1 / ht;
      for (int l = 0; l < nt; ++l)
        add_edge(grid.node(i, m, l), grid.node(i, m, (l + 1) % nt), k);
    }
  }

  A_.resize(N, N);
  A_.setFromTriplets(trips.begin(), trips.end());
  A_.makeCompressed();
}

cplx ForwardModel::vol_inner(const VecXc& u, const VecXc& v) const {
  cplx s = 0.0;
  for (int n = 0; n < u.size(); ++n) s += vol_w_[n] * u[n] * std::conj(v[n]);
  return s;
}

double ForwardModel::vol_norm(const VecXc& u) const {
  double s = 0.0;
  for (int n = 0; n < u.size(); ++n) s += vol_w_[n] * std::norm(u[n]);
  return std::sqrt(s);
}

cplx ForwardModel::surf_inner(const VecXc& f, const VecXc& h) const {
  cplx s = 0.0;
  for (int b = 0; b < f.size(); ++b) s += surf_w_[b] * f[b] * std::conj(h[b]);
  return s;
}

double ForwardModel::surf_norm(const VecXc& f) const {
  double s = 0.0;
  for (int b = 0; b < f.size(); ++b) s += surf_w_[b] * std::norm(f[b]);
  return std::sqrt(s);
}

VecXc ForwardModel::stiffness_apply(const VecXc& u) const { return spmul(A_, u); }

VecXc ForwardModel::apply_minus_laplace(const VecXc& u) const {
  VecXc Au = spmul(A_, u);
  VecXc out = VecXc::Zero(u.size());
  for (int n : grid_->interior_nodes()) out[n] = Au[n] / vol_w_[n];
  return out;
}

VecXc ForwardModel::apply_conjugated(const VecXc& q, double tau, const VecXc& u) const {
  const auto& g = *grid_;
  VecXc w(u.size());
  for (int n = 0; n < u.size(); ++n) {
    const auto [i, m, l] = g.node_ijk(n);
    w[n] = std::exp(-tau * g.x1(i)) * u[n];
  }
  VecXc Aw = spmul(A_, w);
  VecXc out = VecXc::Zero(u.size());
  for (int n : g.interior_nodes()) {
    const auto [i, m, l] = g.node_ijk(n);
    out[n] = std::exp(tau * g.x1(i)) * Aw[n] / vol_w_[n] + q[n] * u[n];
  }
  return out;
}

VecXc ForwardModel::trace(const VecXc& u) const {
  const auto& bn = grid_->boundary_nodes();
  VecXc f(bn.size());
  for (size_t b = 0; b < bn.size(); ++b) f[b] = u[bn[b]];
  return f;
}

VecXc ForwardModel::flux(const VecXc& u) const {
  VecXc Au = spmul(A_, u);
  const auto& bn = grid_->boundary_nodes();
  VecXc f(bn.size());
  for (size_t b = 0; b < bn.size(); ++b) f[b] = Au[bn[b]];
  return f;
}

VecXc ForwardModel::normal_trace(const VecXc& u) const {
  VecXc f = flux(u);
  for (int b = 0; b < f.size(); ++b) f[b] /= surf_w_[b];
  return f;
}

VecXc ForwardModel::exp_tau_x1(double tau) const {
  const auto& g = *grid_;
  VecXc e(g.num_nodes());
  for (int n = 0; n < e.size(); ++n) e[n] = std::exp(tau * g.x1(g.node_ijk(n)[0]));
  return e;
}

VecXc ForwardModel::boundary_exp_tau_x1(double tau) const {
  const auto& g = *grid_;
  const auto& bn = g.boundary_nodes();
  VecXc e(bn.size());
  for (size_t b = 0; b < bn.size(); ++b) e[b] = std::exp(tau * g.x1(g.node_ijk(bn[b])[0]));
  return e;
}

ForwardModel::Solver ForwardModel::make_solver(const VecXc& q) const {
  const auto& g = *grid_;
  const auto& interior = g.interior_nodes();
  const int ni = int(interior.size());
  std::vector<int> int_index(g.num_nodes(), -1);
  for (int k = 0; k < ni; ++k) int_index[interior[k]] = k;

  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(size_t(ni) * 8);
  for (int k = 0; k < ni; ++k) {
    const int n = interior[k];
    for (SpMat::InnerIterator it(A_, n); it; ++it) {
      const int col = int(it.row());  // column-major: row() is the row index
      // iterate column n of symmetric A == row n
      const int kk = int_index[col];
      if (kk >= 0) trips.emplace_back(k, kk, cplx(it.value(), 0.0));
    }
    trips.emplace_back(k, k, vol_w_[n] * q[n]);
  }
  Eigen::SparseMatrix<cplx> S(ni, ni);
  S.setFromTriplets(trips.begin(), trips.end());
  S.makeCompressed();

  Solver solver;
  solver.fm_ = this;
  solver.lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<cplx>>>();
  solver.lu_->compute(S);
  if (solver.lu_->info() != Eigen::Success)
    throw DirichletEigenvalue("interior factorization failed; 0 is a Dirichlet eigenvalue here");

  // Inverse-iteration estimate of 1/sigma_min; deterministic seed.
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  VecXc x(ni);
  for (int k = 0; k < ni; ++k) x[k] = cplx(unif(rng), unif(rng));
  x /= x.norm();
  double growth = 0.0;
  for (int it = 0; it < 3; ++it) {
    VecXc y = solver.lu_->solve(x);
    growth = y.norm();
    if (growth == 0) break;
    x = y / growth;
  }
  double anorm = 0.0;
  for (int k = 0; k < S.outerSize(); ++k) {
    double col = 0.0;
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(S, k); it; ++it) col += std::abs(it.value());
    anorm = std::max(anorm, col);
  }
  solver.cond_ = anorm * growth;
  if (solver.cond_ > 1e12)
    throw DirichletEigenvalue("condition estimate " + std::to_string(solver.cond_) +
                              " exceeds 1e12; 0 is a Dirichlet eigenvalue at this discretization");
  return solver;
}

VecXc ForwardModel::Solver::solve(const VecXc& f, const VecXc* interior_rhs) const {
  const auto& g = fm_->grid();
  const auto& interior = g.interior_nodes();
  const auto& bn = g.boundary_nodes();
  const int ni = int(interior.size());
  std::vector<int> int_index(g.num_nodes(), -1);
  for (int k = 0; k < ni; ++k) int_index[interior[k]] = k;

  // rhs_i = d_i * rhs(n) - (A u_B)_i with u_B = f on boundary nodes.
  VecXc ub = VecXc::Zero(g.num_nodes());
  for (size_t b = 0; b < bn.size(); ++b) ub[bn[b]] = f[b];
  VecXc Aub = fm_->stiffness_apply(ub);
  VecXc rhs(ni);
  for (int k = 0; k < ni; ++k) {
    const int n = interior[k];
    rhs[k] = -Aub[n];
    if (interior_rhs) rhs[k] += fm_->vol_w_[n] * (*interior_rhs)[n];
  }
  VecXc ui = lu_->solve(rhs);
  VecXc u = ub;
  for (int k = 0; k < ni; ++k) u[interior[k]] = ui[k];
  return u;
}

VecXc ForwardModel::solve_dirichlet(const VecXc& q, const VecXc& f) const {
  return make_solver(q).solve(f);
}

PartialDtN ForwardModel::dtn(const VecXc& q, const std::vector<std::uint8_t>& gamma_plus,
                             const std::vector<std::uint8_t>& gamma_minus,
                             const std::string& q_label) const {
  const int nb = num_boundary();
  if (int(gamma_plus.size()) != nb || int(gamma_minus.size()) != nb)
    throw IndexMismatch("gamma masks must have one entry per boundary node");
  Solver solver = make_solver(q);
  PartialDtN out;
  out.lambda = MatXc::Zero(nb, nb);
  out.rows_mask = gamma_minus;
  out.cols_mask = gamma_plus;
  out.q_label = q_label;
  for (int c = 0; c < nb; ++c) {
    if (!gamma_plus[c]) continue;
    VecXc f = VecXc::Zero(nb);
    f[c] = 1.0;
    VecXc u = solver.solve(f);
    VecXc tn = normal_trace(u);
    for (int r = 0; r < nb; ++r)
      if (gamma_minus[r]) out.lambda(r, c) = tn[r];
  }
  return out;
}

}  // namespace cald
