#include "calderon/cgo.hpp"

#include <cmath>
#include <numbers>

namespace cald {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_pm_pi(double t) {
  t = std::fmod(t, kTwoPi);
  if (t > std::numbers::pi) t -= kTwoPi;
  if (t < -std::numbers::pi) t += kTwoPi;
  return t;
}
}  // namespace

double Bump::operator()(double theta) const {
  const double s = wrap_pm_pi(theta - theta0) / width;
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double Bump::mass() const {
  // Simpson quadrature over the support.
  const int n = 4000;
  const double h = 2.0 * width / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double s = -width + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double ss = s / width;
    const double v = std::abs(ss) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - ss * ss)) : 0.0;
    acc += w * v;
  }
  return acc * h / 3.0;
}

namespace {

// sqrt(G) with G the theta-theta metric coefficient of g0 in the chart's
// geodesic polar coordinates (Gauss lemma). Euclidean: sqrt(G) = r; conformal
// presets use the change of variables sqrt(G) = c0 * rho / |J| with J the
// (rho,theta_disk) -> (r,theta_chart) Jacobian, finite-differenced on the grid.
std::vector<double> chart_sqrtG(const ManifoldGrid& grid, const PolarChart& chart) {
  const int nr = grid.nrho(), nt = grid.ntheta();
  std::vector<double> out(grid.num_transversal());
  if (grid.metric().preset == MetricPreset::Euclidean) {
    for (int k = 0; k < grid.num_transversal(); ++k) out[k] = chart.r[k];
    return out;
  }
  auto wrapd = [](double a) { return wrap_pm_pi(a); };
  for (int m = 0; m < nr; ++m)
    for (int l = 0; l < nt; ++l) {
      const int lm = (l + nt - 1) % nt, lp = (l + 1) % nt;
      const int mm = std::max(0, m - 1), mp = std::min(nr - 1, m + 1);
      const double drho = (mp - mm) * grid.hrho();
      const double dr_drho =
          (chart.r[grid.trans_node(mp, l)] - chart.r[grid.trans_node(mm, l)]) / drho;
      const double dth_drho = wrapd(chart.theta[grid.trans_node(mp, l)] -
                                    chart.theta[grid.trans_node(mm, l)]) /
                              drho;
      const double dr_dth =
          (chart.r[grid.trans_node(m, lp)] - chart.r[grid.trans_node(m, lm)]) /
          (2.0 * grid.htheta());
      const double dth_dth = wrapd(chart.theta[grid.trans_node(m, lp)] -
                                   chart.theta[grid.trans_node(m, lm)]) /
                             (2.0 * grid.htheta());
      const double jac = std::abs(dr_drho * dth_dth - dr_dth * dth_drho);
      const int k = grid.trans_node(m, l);
      out[k] = grid.c0(m, l) * grid.rho(m) / std::max(jac, 1e-12);
    }
  return out;
}

// tau-independent part psi = |g|^{-1/4} c^{1/2} e^{i lambda (x1 + i r)} b(theta_chart),
// with |g| = c^3 G in chart coordinates.
VecXc smooth_part(const ManifoldGrid& grid, const PolarChart& chart, double lambda,
                  const Bump& bump) {
  const std::vector<double> sqrtG = chart_sqrtG(grid, chart);
  const double c = grid.conf();
  const double cfac = std::pow(c, -3.0 / 4.0) * std::sqrt(c);
  VecXc psi(grid.num_nodes());
  for (int i = 0; i < grid.n1(); ++i)
    for (int m = 0; m < grid.nrho(); ++m)
      for (int l = 0; l < grid.ntheta(); ++l) {
        const int tn = grid.trans_node(m, l);
        const double r = chart.r[tn];
        // |g|^{-1/4} = c^{-3/4} G^{-1/4} with G^{1/4} = sqrt(sqrt(G))
        const double amp = cfac / std::sqrt(sqrtG[tn]) * bump(chart.theta[tn]);
        const cplx osc = std::exp(cplx(-lambda * r, lambda * grid.x1(i)));
        psi[grid.node(i, m, l)] = amp * osc;
      }
  return psi;
}

}  // namespace

VecXc amplitude_field(const ManifoldGrid& grid, const PolarChart& chart, double tau, double lambda,
                      const Bump& bump, const AngularInterval* E) {
  if (E) {
    // Partial mode: the amplitude must vanish near pM0 \ E; with a compactly
    // supported bump this is exact on the rim node ring.
    const int mrim = grid.nrho() - 1;
    for (int l = 0; l < grid.ntheta(); ++l) {
      const int tn = grid.trans_node(mrim, l);
      if (bump(chart.theta[tn]) != 0.0 && !E->contains(grid.theta(l)))
        throw BumpOutsideE("bump support meets the rim outside the accessible arc E");
    }
  }
  VecXc a = smooth_part(grid, chart, lambda, bump);
  for (int i = 0; i < grid.n1(); ++i)
    for (int m = 0; m < grid.nrho(); ++m)
      for (int l = 0; l < grid.ntheta(); ++l) {
        const double r = chart.r[grid.trans_node(m, l)];
        a[grid.node(i, m, l)] *= std::polar(1.0, -tau * r);
      }
  return a;
}

VecXc amplitude_source(const ForwardModel& fm, const PolarChart& chart, double tau, double lambda,
                       const Bump& bump) {
  const auto& grid = fm.grid();
  VecXc psi = smooth_part(grid, chart, lambda, bump);
  VecXc lap = fm.apply_minus_laplace(psi);
  for (int i = 0; i < grid.n1(); ++i)
    for (int m = 0; m < grid.nrho(); ++m)
      for (int l = 0; l < grid.ntheta(); ++l) {
        const int n = grid.node(i, m, l);
        const double r = chart.r[grid.trans_node(m, l)];
        lap[n] *= -std::polar(1.0, tau * r);
      }
  return lap;
}

VecXc boundary_extension(const ForwardModel& fm, const BoundaryDecomposition& dec, const VecXc& a,
                         CgoMode mode) {
  const auto& grid = fm.grid();
  const int nb = grid.num_boundary();
  VecXc fminus = VecXc::Zero(nb);
  for (int b = 0; b < nb; ++b) {
    if (!dec.s_minus[b]) continue;
    const cplx av = a[grid.boundary_nodes()[b]];
    if (mode == CgoMode::Global) {
      fminus[b] = -av;
    } else {
      if (dec.v_tau_delta[b]) fminus[b] = -av;
      // Gamma_a^{tau,delta}: zero
    }
  }
  if (mode == CgoMode::Partial) {
    for (int b = 0; b < nb; ++b)
      if (dec.pm_tan[b] && dec.s_minus[b] && fminus[b] != 0.0)
        throw SupportViolation(
            "f^- does not vanish on pM_tan; bump support or delta is inconsistent with Gamma_i");
  }
  return fminus;
}

std::vector<std::uint8_t> allowed_trace_mask(const BoundaryDecomposition& dec, CgoMode mode) {
  const int nb = int(dec.s_plus.size());
  std::vector<std::uint8_t> allowed(nb, 0);
  const bool pos = dec.tau > 0;
  for (int b = 0; b < nb; ++b) {
    if (mode == CgoMode::Partial)
      allowed[b] = pos ? dec.gamma_plus[b] : dec.gamma_minus[b];
    else
      allowed[b] = pos ? dec.pm_plus[b] : dec.pm_minus[b];
  }
  return allowed;
}

CgoBundle build_cgo_harmonic(const ModalCarleman& mc, const BoundaryDecomposition& dec,
                             const PolarChart& chart, double tau, double lambda, const Bump& bump,
                             CgoMode mode) {
  if (dec.tau != tau) throw IndexMismatch("boundary decomposition was built for a different tau");
  const ForwardModel& fm = mc.forward();
  const auto& grid = fm.grid();

  CgoBundle bundle;
  bundle.tau = tau;
  bundle.lambda = lambda;
  bundle.mode = mode;
  bundle.bump = bump;

  const AngularInterval* E = mode == CgoMode::Partial ? &dec.accessible_arc : nullptr;
  bundle.amplitude = amplitude_field(grid, chart, tau, lambda, bump, E);
  bundle.amplitude_sup = bundle.amplitude.cwiseAbs().maxCoeff();

  // Source for the remainder equation L_tau r0 = f. Using the discrete
  // conjugated operator on a itself makes (-Delta) u0 vanish to solver
  // accuracy; the Eq.(7.3) form is kept in amplitude_source for diagnostics.
  bundle.source = -fm.apply_conjugated(VecXc::Zero(grid.num_nodes()), tau, bundle.amplitude);
  bundle.f_minus = boundary_extension(fm, dec, bundle.amplitude, mode);

  auto ops = mc.ops(tau);
  bundle.r0 = mc.rtau_solve(*ops, bundle.source, bundle.f_minus);
  bundle.r0_norm = fm.vol_norm(bundle.r0);

  bundle.u0 = bundle.amplitude + bundle.r0;
  for (int n = 0; n < bundle.u0.size(); ++n) {
    const auto [i, m, l] = grid.node_ijk(n);
    bundle.u0[n] *= std::exp(-tau * grid.x1(i));
  }

  // Support certificate: tr(u0) vanishes outside the allowed set. On S^-_tau
  // the trace is a + f^- exactly; assert and record the worst leak.
  const auto allowed = allowed_trace_mask(dec, mode);
  VecXc tr = fm.trace(bundle.u0);
  double worst = 0.0;
  for (int b = 0; b < tr.size(); ++b)
    if (!allowed[b]) worst = std::max(worst, std::abs(tr[b]));
  bundle.support_max_outside = worst;
  if (worst > 1e-8 * bundle.amplitude_sup)
    throw SupportViolation("tr(u0) leaks outside the allowed boundary set: " +
                           std::to_string(worst));
  return bundle;
}

VecXc q_mult(const ManifoldGrid& grid, const VecXc& q, const VecXc& v) {
  VecXc out = VecXc::Zero(v.size());
  for (int n : grid.interior_nodes()) out[n] = q[n] * v[n];
  return out;
}

void build_cgo_schrodinger(const ModalCarleman& mc, const TauOperators& ops, const VecXc& q,
                           double g_norm, CgoBundle& bundle) {
  const ForwardModel& fm = mc.forward();
  const auto& grid = fm.grid();
  const double qmax = q.cwiseAbs().maxCoeff();
  const double contraction = g_norm * qmax;
  if (contraction >= 1.0)
    throw NotContracting("||G_tau|| * ||q||_inf = " + std::to_string(contraction) +
                         " >= 1; raise tau");

  VecXc etau = fm.exp_tau_x1(bundle.tau);
  VecXc w = q_mult(grid, q, etau.cwiseProduct(bundle.u0));
  VecXc term = -mc.apply_G(ops, w);
  VecXc r1 = term;
  int iters = 1;
  const double tol = 1e-12;
  while (true) {
    term = -mc.apply_G(ops, q_mult(grid, q, term));
    r1 += term;
    ++iters;
    if (fm.vol_norm(term) <= tol * std::max(1e-300, fm.vol_norm(r1))) break;
    if (iters > 400)
      throw NotContracting("Neumann series did not reach tolerance in 400 terms");
  }
  bundle.r1 = r1;
  bundle.r1_norm = fm.vol_norm(r1);
  bundle.neumann_iters = iters;
  bundle.u = bundle.u0 + r1.cwiseProduct(fm.exp_tau_x1(-bundle.tau));
  bundle.has_schrodinger = true;
}

VecXc conjugate_partner_u2(const CgoBundle& minus_tau_bundle) {
  return minus_tau_bundle.u0.conjugate();
}

}  // namespace cald
