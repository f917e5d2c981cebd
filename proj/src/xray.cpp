#include "calderon/xray.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "calderon/dft.hpp"

namespace cald {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

ParallelFamily ParallelFamily::uniform(int n_angles, int n_offsets, bool full_circle) {
  ParallelFamily f;
  const double span = full_circle ? kTwoPi : kPi;
  for (int j = 0; j < n_angles; ++j) f.angles.push_back(span * j / n_angles);
  for (int i = 0; i < n_offsets; ++i)
    f.offsets.push_back(-1.0 + (i + 0.5) * 2.0 / n_offsets);
  return f;
}

cplx interp_transversal(const ManifoldGrid& grid, const VecXc& field, const Vec2& x) {
  const int nr = grid.nrho(), nt = grid.ntheta();
  double rho = x.norm();
  double th = std::atan2(x.y(), x.x());
  if (th < 0) th += kTwoPi;
  const double ft = th / grid.htheta();
  int l0 = int(std::floor(ft)) % nt;
  const double at = ft - std::floor(ft);
  const int l1 = (l0 + 1) % nt;

  auto ring_val = [&](int m, int la, int lb, double a) {
    return (1.0 - a) * field[grid.trans_node(m, la)] + a * field[grid.trans_node(m, lb)];
  };

  if (rho >= 1.0) return ring_val(nr - 1, l0, l1, at);
  const double fr = rho / grid.hrho() - 0.5;
  if (fr <= 0.0) {
    // Inside the innermost ring: linear through the center between the value
    // at (rho0, theta) and the antipodal (rho0, theta+pi).
    const cplx v = ring_val(0, l0, l1, at);
    const double th_op = th + kPi;
    const double fo = th_op / grid.htheta();
    int lo0 = int(std::floor(fo)) % nt;
    const double ao = fo - std::floor(fo);
    const cplx vop = ring_val(0, lo0, (lo0 + 1) % nt, ao);
    const double rho0 = grid.rho(0);
    return ((rho0 + rho) * v + (rho0 - rho) * vop) / (2.0 * rho0);
  }
  int m0 = std::min(int(std::floor(fr)), nr - 2);
  const double ar = fr - m0;
  return (1.0 - ar) * ring_val(m0, l0, l1, at) + ar * ring_val(m0 + 1, l0, l1, at);
}

cplx forward_ert(const ManifoldGrid& grid, const VecXc& transversal_field, double lambda,
                 const Geodesic& geo, int tpow, double atten_sign) {
  cplx acc = 0.0;
  const size_t n = geo.points.size();
  if (n < 2) return 0.0;
  auto weight = [&](double t) {
    double w = std::exp(atten_sign * 2.0 * lambda * t);
    for (int p = 0; p < tpow; ++p) w *= -2.0 * t;
    return w;
  };
  cplx prev = weight(geo.t[0]) * interp_transversal(grid, transversal_field, geo.points[0]);
  for (size_t k = 1; k < n; ++k) {
    const cplx cur = weight(geo.t[k]) * interp_transversal(grid, transversal_field, geo.points[k]);
    acc += 0.5 * (prev + cur) * (geo.t[k] - geo.t[k - 1]);
    prev = cur;
  }
  return acc;
}

VecXc x1_fourier_slice(const ManifoldGrid& grid, const VecXc& field, double mu) {
  VecXc slice = VecXc::Zero(grid.num_transversal());
  for (int i = 0; i < grid.n1(); ++i) {
    const double w = (i == 0 || i == grid.n1() - 1) ? 0.5 * grid.h1() : grid.h1();
    const cplx ph = std::polar(w, mu * grid.x1(i));
    for (int m = 0; m < grid.nrho(); ++m)
      for (int l = 0; l < grid.ntheta(); ++l)
        slice[grid.trans_node(m, l)] += ph * field[grid.node(i, m, l)];
  }
  return slice;
}

TransformSamples oracle_transform_samples(const ManifoldGrid& grid, const VecXc& cq,
                                          const std::vector<double>& lambdas,
                                          const ParallelFamily& family) {
  TransformSamples s;
  s.lambdas = lambdas;
  s.family = family;
  s.provenance = "oracle";
  const int na = int(family.angles.size()), no = int(family.offsets.size());
  std::vector<Geodesic> chords;
  chords.reserve(size_t(na) * no);
  for (int j = 0; j < na; ++j)
    for (int i = 0; i < no; ++i) chords.push_back(make_chord(grid, family.offsets[i], family.angles[j]));
  for (double lam : lambdas) {
    VecXc slice = x1_fourier_slice(grid, cq, 2.0 * lam);
    MatXc v(na, no);
    for (int j = 0; j < na; ++j)
      for (int i = 0; i < no; ++i) v(j, i) = forward_ert(grid, slice, lam, chords[j * no + i]);
    s.values.push_back(std::move(v));
  }
  return s;
}

VecXc exp_radon_invert(const ManifoldGrid& grid, const ParallelFamily& family, const MatXc& data,
                       double mu) {
  const int na = int(family.angles.size());
  const int no = int(family.offsets.size());
  if (na != data.rows() || no != data.cols()) throw IndexMismatch("sinogram shape mismatch");
  if (na < 32 || no < 32)
    throw InvalidConfig("inversion needs >= 32 angles x 32 offsets");

  // Angle coverage. mu = 0 data on [0, pi) is doubled via p(phi+pi, s) = p(phi, -s).
  std::vector<double> angles = family.angles;
  MatXc p(na, no);
  for (int j = 0; j < na; ++j)
    for (int i = 0; i < no; ++i) {
      const double s = family.offsets[i];
      p(j, i) = std::exp(mu * std::sqrt(std::max(0.0, 1.0 - s * s))) * data(j, i);
    }
  const double span = angles.back() - angles.front();
  MatXc pf;
  if (span < 1.2 * kPi) {
    if (mu != 0.0)
      throw InvalidConfig("exponential inversion needs angles over the full circle");
    pf.resize(2 * na, no);
    pf.topRows(na) = p;
    for (int j = 0; j < na; ++j)
      for (int i = 0; i < no; ++i) pf(na + j, i) = p(j, no - 1 - i);
    angles.resize(2 * na);
    for (int j = 0; j < na; ++j) angles[na + j] = family.angles[j] + kPi;
  } else {
    pf = p;
  }
  const int nang = int(angles.size());
  const double dphi = kTwoPi / nang;

  // Ramp filter with the |sigma| >= |mu| cutoff and a Hann window, applied in
  // a zero-padded DFT of the offset axis.
  const double ds = family.offsets[1] - family.offsets[0];
  int np = 1;
  while (np < 4 * no) np <<= 1;
  Dft dft(np);
  const double sigma_max = kPi / ds;
  std::vector<cplx> row(np), hat(np);
  MatXc filt(nang, no);
  for (int j = 0; j < nang; ++j) {
    std::fill(row.begin(), row.end(), cplx(0.0));
    for (int i = 0; i < no; ++i) row[i] = pf(j, i);
    dft.forward(row.data(), hat.data());
    for (int k = 0; k < np; ++k) {
      const int ks = k <= np / 2 ? k : k - np;
      const double sigma = kTwoPi * ks / (np * ds);
      double f = std::abs(sigma);
      if (f < std::abs(mu)) f = 0.0;
      const double hann = 0.5 * (1.0 + std::cos(kPi * sigma / sigma_max));
      hat[k] *= f * hann;
    }
    dft.inverse(hat.data(), row.data());
    for (int i = 0; i < no; ++i) filt(j, i) = row[i];
  }

  // Backprojection: f(x) = dphi/(4 pi) sum_j e^{mu <x,d_j>} filt_j(<x,n_j>).
  VecXc out = VecXc::Zero(grid.num_transversal());
  const double s0 = family.offsets[0];
  for (int j = 0; j < nang; ++j) {
    const double c = std::cos(angles[j]), s = std::sin(angles[j]);
    for (int m = 0; m < grid.nrho(); ++m)
      for (int l = 0; l < grid.ntheta(); ++l) {
        const Vec2 x = grid.trans_point(m, l);
        const double sn = x.x() * c + x.y() * s;
        const double sd = -x.x() * s + x.y() * c;
        const double fi = (sn - s0) / ds;
        if (fi < 0 || fi > no - 1) continue;
        const int i0 = std::min(int(std::floor(fi)), no - 2);
        const double a = fi - i0;
        const cplx v = (1.0 - a) * filt(j, i0) + a * filt(j, i0 + 1);
        out[grid.trans_node(m, l)] += std::exp(mu * sd) * v;
      }
  }
  out *= dphi / (4.0 * kPi);
  return out;
}

VecXc fbp_invert(const ManifoldGrid& grid, const ParallelFamily& family, const MatXc& data) {
  if (grid.metric().preset != MetricPreset::Euclidean)
    throw MetricUnsupported("filtered backprojection supports the euclidean preset only");
  return exp_radon_invert(grid, family, data, 0.0);
}

VecXc per_lambda_invert(const ManifoldGrid& grid, const ParallelFamily& family, const MatXc& data,
                        double lambda) {
  if (grid.metric().preset != MetricPreset::Euclidean)
    throw MetricUnsupported("exponential inversion supports the euclidean preset only");
  const double t_max = 2.0;
  if (std::exp(2.0 * std::abs(lambda) * t_max) > 1e3)
    throw AttenuationTooLarge("e^{2|lambda| T_max} exceeds 1e3 at lambda = " +
                              std::to_string(lambda));
  return exp_radon_invert(grid, family, data, 2.0 * lambda);
}

std::vector<double> fd_weights(const std::vector<double>& nodes, double x0, int m) {
  // Fornberg's recursion.
  const int n = int(nodes.size());
  if (n < m + 1) throw StencilTooShort("need at least m+1 nodes for the m-th derivative");
  std::vector<std::vector<std::vector<double>>> d(
      n, std::vector<std::vector<double>>(n, std::vector<double>(m + 1, 0.0)));
  d[0][0][0] = 1.0;
  double c1 = 1.0;
  for (int i = 1; i < n; ++i) {
    double c2 = 1.0;
    for (int j = 0; j < i; ++j) {
      const double c3 = nodes[i] - nodes[j];
      c2 *= c3;
      for (int k = 0; k <= std::min(i, m); ++k) {
        d[i][j][k] =
            ((nodes[i] - x0) * d[i - 1][j][k] - (k > 0 ? k * d[i - 1][j][k - 1] : 0.0)) / c3;
      }
    }
    for (int k = 0; k <= std::min(i, m); ++k) {
      d[i][i][k] = (c1 / c2) * ((k > 0 ? k * d[i - 1][i - 1][k - 1] : 0.0) -
                                (nodes[i - 1] - x0) * d[i - 1][i - 1][k]);
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int j = 0; j < n; ++j) w[j] = d[n - 1][j][m];
  return w;
}

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

std::vector<VecXc> lambda_derivative_recover(const ManifoldGrid& grid,
                                             const TransformSamples& samples, int K) {
  const auto& lams = samples.lambdas;
  int zero = -1;
  for (size_t k = 0; k < lams.size(); ++k)
    if (std::abs(lams[k]) < 1e-12) zero = int(k);
  if (zero < 0) throw StencilTooShort("lambda grid must contain 0");
  if (int(lams.size()) < K + 1) throw StencilTooShort("lambda grid spans fewer than K+1 points");

  const int na = int(samples.family.angles.size());
  const int no = int(samples.family.offsets.size());
  std::vector<Geodesic> chords;
  chords.reserve(size_t(na) * no);
  for (int j = 0; j < na; ++j)
    for (int i = 0; i < no; ++i)
      chords.push_back(make_chord(grid, samples.family.offsets[i], samples.family.angles[j]));

  std::vector<VecXc> fields;
  for (int k = 0; k <= K; ++k) {
    // Central stencil around lambda = 0 for the k-th derivative.
    const int half = (k + 1) / 2 + 1;
    const int lo = std::max(0, zero - half), hi = std::min(int(lams.size()) - 1, zero + half);
    std::vector<double> nodes(lams.begin() + lo, lams.begin() + hi + 1);
    if (int(nodes.size()) < k + 1) throw StencilTooShort("lambda stencil too short for k");
    const std::vector<double> w = fd_weights(nodes, 0.0, k);

    MatXc dk = MatXc::Zero(na, no);
    for (size_t p = 0; p < nodes.size(); ++p) dk += w[p] * samples.values[lo + int(p)];

    // Subtract sum_{j<k} C(k,j) 2^j int (-2t)^{k-j} F_j, leaving 2^k R F_k.
    for (int j2 = 0; j2 < k; ++j2) {
      const double coef = binom(k, j2) * std::pow(2.0, j2);
      for (int aj = 0; aj < na; ++aj)
        for (int oi = 0; oi < no; ++oi)
          dk(aj, oi) -= coef * forward_ert(grid, fields[j2], 0.0, chords[aj * no + oi], k - j2);
    }
    dk /= std::pow(2.0, k);
    fields.push_back(fbp_invert(grid, samples.family, dk));
  }
  return fields;
}

VecXc fourier_synthesize_slices(const ManifoldGrid& grid, const std::vector<double>& mus,
                                const std::vector<VecXc>& slices) {
  if (mus.size() != slices.size() || mus.size() < 2)
    throw InvalidConfig("slice synthesis needs matching mu grid and slices");
  VecXc out = VecXc::Zero(grid.num_nodes());
  const double dmu = mus[1] - mus[0];
  for (size_t k = 0; k < mus.size(); ++k) {
    const double w = (k == 0 || k + 1 == mus.size()) ? 0.5 : 1.0;
    for (int i = 0; i < grid.n1(); ++i) {
      const cplx ph = std::polar(w * dmu / kTwoPi, -mus[k] * grid.x1(i));
      for (int t = 0; t < grid.num_transversal(); ++t)
        out[i * grid.num_transversal() + t] += ph * slices[k][t];
    }
  }
  // divide by the conformal factor (c > 0 by the grid invariant)
  out /= grid.conf();
  return out;
}

VecXc fourier_synthesize_taylor(const ManifoldGrid& grid, const std::vector<VecXc>& deriv_fields,
                                double mu_max, int n_mu) {
  if (deriv_fields.size() < 5)
    throw InvalidConfig("taylor synthesis needs K >= 4 derivative fields");
  std::vector<double> mus;
  std::vector<VecXc> slices;
  for (int k = 0; k < n_mu; ++k) {
    const double mu = -mu_max + 2.0 * mu_max * k / (n_mu - 1);
    VecXc s = VecXc::Zero(grid.num_transversal());
    double fact = 1.0;
    for (size_t j = 0; j < deriv_fields.size(); ++j) {
      if (j > 0) fact *= double(j);
      s += deriv_fields[j] * (std::pow(mu, double(j)) / fact);
    }
    mus.push_back(mu);
    slices.push_back(std::move(s));
  }
  return fourier_synthesize_slices(grid, mus, slices);
}

}  // namespace cald
