#include "calderon/bie.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace cald {

BoundaryIntegralOperator assemble_bie(const ForwardModel& fm, const SingleLayer& sl,
                                      const PartialDtN& dtn_q, const PartialDtN& dtn_0) {
  const int nb = fm.num_boundary();
  if (int(dtn_q.rows_mask.size()) != nb || int(dtn_0.rows_mask.size()) != nb)
    throw IndexMismatch("DtN boundary size does not match the grid");
  if (dtn_q.rows_mask != dtn_0.rows_mask || dtn_q.cols_mask != dtn_0.cols_mask)
    throw IndexMismatch("Lambda_q and Lambda_0 must share Gamma_+/Gamma_- index sets");
  for (int b = 0; b < nb; ++b)
    if (sl.depends_cols[b] && !dtn_q.rows_mask[b])
      throw IndexMismatch("S_tau needs Lambda rows on pM_{-sgn tau}; Gamma_- does not cover it");

  BoundaryIntegralOperator out;
  out.tau = sl.tau;
  out.domain_mask = dtn_q.cols_mask;
  for (int b = 0; b < nb; ++b)
    if (out.domain_mask[b]) out.domain.push_back(b);
  const int nd = int(out.domain.size());

  // Masked copies: data entries only, everything else identically zero.
  MatXc diff = MatXc::Zero(nb, nd);
  for (int c = 0; c < nd; ++c) {
    const int bc = out.domain[c];
    for (int r = 0; r < nb; ++r)
      if (sl.depends_cols[r]) diff(r, c) = dtn_q.lambda(r, bc) - dtn_0.lambda(r, bc);
  }
  MatXc T = sl.matrix * diff;  // rows supported in B

  out.op = MatXc::Identity(nd, nd);
  for (int r = 0; r < nd; ++r)
    for (int c = 0; c < nd; ++c) out.op(r, c) += T(out.domain[r], c);

  // S_tau's range must stay inside the domain support.
  double leak = 0.0;
  for (int r = 0; r < nb; ++r)
    if (!out.domain_mask[r] && sl.support_rows[r]) leak = 1.0;
  if (leak > 0)
    throw IndexMismatch("single layer support B is not contained in Gamma_+; widen Gamma_+");

  Eigen::JacobiSVD<MatXc> svd(out.op);
  const auto& s = svd.singularValues();
  out.condition = s[0] / std::max(s[s.size() - 1], 1e-300);
  if (out.condition > 1e8)
    throw NearSingular("BIE operator condition " + std::to_string(out.condition) +
                       " exceeds 1e8; raise tau");
  out.lu = Eigen::PartialPivLU<MatXc>(out.op);
  return out;
}

VecXc solve_bie(const BoundaryIntegralOperator& op, const VecXc& rhs) {
  const int nb = int(op.domain_mask.size());
  double outside = 0.0, inside = 0.0;
  for (int b = 0; b < nb; ++b) {
    if (op.domain_mask[b])
      inside = std::max(inside, std::abs(rhs[b]));
    else
      outside = std::max(outside, std::abs(rhs[b]));
  }
  if (outside > 1e-10 * std::max(inside, 1e-300))
    throw SupportViolation("BIE right-hand side is not supported in Gamma_+");

  VecXc sub(op.domain.size());
  for (size_t k = 0; k < op.domain.size(); ++k) sub[k] = rhs[op.domain[k]];
  VecXc x = op.lu.solve(sub);
  VecXc full = VecXc::Zero(nb);
  for (size_t k = 0; k < op.domain.size(); ++k) full[op.domain[k]] = x[k];
  return full;
}

cplx pairing(const ForwardModel& fm, const PartialDtN& dtn_q, const PartialDtN& dtn_0,
             const VecXc& tr_u2, const VecXc& tr_u1) {
  const int nb = fm.num_boundary();
  if (dtn_q.rows_mask != dtn_0.rows_mask || dtn_q.cols_mask != dtn_0.cols_mask)
    throw IndexMismatch("Lambda_q and Lambda_0 must share index sets");
  const auto& rows = dtn_q.rows_mask;
  const auto& cols = dtn_q.cols_mask;

  double in1 = 0.0, out1 = 0.0, in2 = 0.0, out2 = 0.0;
  for (int b = 0; b < nb; ++b) {
    (cols[b] ? in1 : out1) = std::max(cols[b] ? in1 : out1, std::abs(tr_u1[b]));
    (rows[b] ? in2 : out2) = std::max(rows[b] ? in2 : out2, std::abs(tr_u2[b]));
  }
  if (out1 > 1e-10 * std::max(in1, 1e-300))
    throw SupportViolation("tr(u1) leaks outside Gamma_+");
  if (out2 > 1e-10 * std::max(in2, 1e-300))
    throw SupportViolation("tr(u2) leaks outside Gamma_-");

  // <(Lq - L0) tr u1, tr u2> = sum_b s_b [(Lq-L0) tr u1]_b conj(tr u2)_b,
  // touching only data rows/columns.
  cplx acc = 0.0;
  for (int r = 0; r < nb; ++r) {
    if (!rows[r] || tr_u2[r] == 0.0) continue;
    cplx w = 0.0;
    for (int c = 0; c < nb; ++c) {
      if (!cols[c] || tr_u1[c] == 0.0) continue;
      w += (dtn_q.lambda(r, c) - dtn_0.lambda(r, c)) * tr_u1[c];
    }
    acc += fm.grid().surface_weight(r) * w * std::conj(tr_u2[r]);
  }
  return acc;
}

ExtractionResult extract_transform_sample(const std::vector<std::pair<double, cplx>>& pairings,
                                          double lambda, double epsilon, double bump_mass,
                                          int order) {
  if (pairings.size() < 2)
    throw InvalidConfig("transform extraction needs pairings at >= 2 tau values");
  std::vector<std::pair<double, cplx>> pts = pairings;
  std::sort(pts.begin(), pts.end(),
            [](const auto& a, const auto& b) { return std::abs(a.first) < std::abs(b.first); });

  auto two_point = [](const std::pair<double, cplx>& a, const std::pair<double, cplx>& b) {
    const double t1 = std::abs(a.first), t2 = std::abs(b.first);
    return (t2 * b.second - t1 * a.second) / (t2 - t1);
  };

  cplx limit;
  double residual = 0.0;
  const size_t n = pts.size();
  if (order >= 2 && n >= 3) {
    // quadratic in x = 1/tau through the three largest tau
    const auto &a = pts[n - 3], &b = pts[n - 2], &c = pts[n - 1];
    const double xa = 1.0 / std::abs(a.first), xb = 1.0 / std::abs(b.first),
                 xc = 1.0 / std::abs(c.first);
    const cplx la = a.second * (xb * xc) / ((xa - xb) * (xa - xc));
    const cplx lb = b.second * (xa * xc) / ((xb - xa) * (xb - xc));
    const cplx lc = c.second * (xa * xb) / ((xc - xa) * (xc - xb));
    limit = la + lb + lc;
    residual = std::abs(limit - two_point(b, c));
  } else {
    limit = two_point(pts[n - 2], pts[n - 1]);
    if (n >= 3) residual = std::abs(limit - two_point(pts[n - 3], pts[n - 2]));
  }

  ExtractionResult out;
  out.value = std::exp(2.0 * lambda * epsilon) * limit / bump_mass;
  out.residual = std::abs(std::exp(2.0 * lambda * epsilon)) * residual / bump_mass;
  return out;
}

}  // namespace cald
