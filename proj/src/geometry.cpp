#include "calderon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include <nlohmann/json.hpp>

namespace cald {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double t) {
  t = std::fmod(t, kTwoPi);
  if (t < 0) t += kTwoPi;
  return t;
}
}  // namespace

bool AngularInterval::contains(double theta) const {
  if (empty) return false;
  double width = hi - lo;
  if (width < 0) width += kTwoPi;
  if (width >= kTwoPi - 1e-12) return true;
  double d = wrap_angle(theta - lo);
  return d <= width + 1e-12;
}

ManifoldConfig ManifoldConfig::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ManifoldConfig cfg;
  if (j.contains("x1")) {
    cfg.x1a = j["x1"][0].get<double>();
    cfg.x1b = j["x1"][1].get<double>();
  }
  cfg.nx1 = j.value("nx1", cfg.nx1);
  cfg.nrho = j.value("nrho", cfg.nrho);
  cfg.ntheta = j.value("ntheta", cfg.ntheta);
  if (j.contains("metric")) {
    const auto& m = j["metric"];
    const std::string preset = m.value("preset", std::string("euclidean"));
    if (preset == "euclidean")
      cfg.metric.preset = MetricPreset::Euclidean;
    else if (preset == "conformal_gaussian")
      cfg.metric.preset = MetricPreset::ConformalGaussian;
    else
      throw InvalidConfig("unknown metric preset '" + preset + "'");
    cfg.metric.amplitude = m.value("amplitude", 0.0);
    cfg.metric.width = m.value("width", 0.5);
    cfg.metric.conformal = m.value("conformal", 1.0);
  }
  if (j.contains("gamma_i") && !j["gamma_i"].is_null()) {
    const auto& g = j["gamma_i"];
    cfg.gamma_i.present = true;
    cfg.gamma_i.theta_lo = g["theta_range"][0].get<double>();
    cfg.gamma_i.theta_hi = g["theta_range"][1].get<double>();
    if (g.contains("x1_range")) {
      cfg.gamma_i.x1_lo = g["x1_range"][0].get<double>();
      cfg.gamma_i.x1_hi = g["x1_range"][1].get<double>();
    } else {
      cfg.gamma_i.x1_lo = cfg.x1a;
      cfg.gamma_i.x1_hi = cfg.x1b;
    }
  }
  return cfg;
}

std::string ManifoldConfig::to_json_text() const {
  nlohmann::json j;
  j["x1"] = {x1a, x1b};
  j["nx1"] = nx1;
  j["nrho"] = nrho;
  j["ntheta"] = ntheta;
  j["metric"]["preset"] =
      metric.preset == MetricPreset::Euclidean ? "euclidean" : "conformal_gaussian";
  j["metric"]["amplitude"] = metric.amplitude;
  j["metric"]["width"] = metric.width;
  j["metric"]["conformal"] = metric.conformal;
  if (gamma_i.present) {
    j["gamma_i"]["theta_range"] = {gamma_i.theta_lo, gamma_i.theta_hi};
    j["gamma_i"]["x1_range"] = {gamma_i.x1_lo, gamma_i.x1_hi};
  }
  return j.dump(2);
}

ManifoldGrid::ManifoldGrid(const ManifoldConfig& cfg) : cfg_(cfg) {
  if (!(cfg.x1a < cfg.x1b)) throw InvalidConfig("x1 interval is degenerate");
  if (cfg.nx1 < 4 || cfg.nrho < 4 || cfg.ntheta < 4)
    throw InvalidConfig("resolution must be >= 4 per axis");
  if (cfg.metric.conformal <= 0.0) throw InvalidConfig("conformal factor must be positive");
  if (cfg.metric.preset == MetricPreset::ConformalGaussian) {
    if (cfg.metric.amplitude < 0.0 || cfg.metric.amplitude > 0.3)
      throw InvalidConfig("conformal_gaussian amplitude outside the simple range [0, 0.3]");
    if (cfg.metric.width <= 0.0) throw InvalidConfig("conformal_gaussian width must be positive");
  } else if (cfg.metric.amplitude != 0.0) {
    throw InvalidConfig("euclidean preset takes amplitude 0");
  }

  h1_ = (cfg.x1b - cfg.x1a) / (cfg.nx1 - 1);
  hrho_ = 1.0 / (cfg.nrho - 0.5);
  htheta_ = kTwoPi / cfg.ntheta;
  min_cell_ = std::min({h1_, hrho_, rho(0) * htheta_});

  const int nt = num_transversal();
  c0_.resize(nt);
  for (int m = 0; m < nrho(); ++m)
    for (int l = 0; l < ntheta(); ++l) c0_[trans_node(m, l)] = cfg.metric.c0(trans_point(m, l));

  // Node classification. Corner rings (x1 = x1a/x1b at rho = 1) belong to the
  // caps, so each cap is a full closed disk and the discrete cap flux of a
  // linear field matches d_nu(phi) node by node.
  const int N = num_nodes();
  region_.assign(N, NodeRegion::Interior);
  for (int i = 0; i < n1(); ++i)
    for (int m = 0; m < nrho(); ++m)
      for (int l = 0; l < ntheta(); ++l) {
        NodeRegion r = NodeRegion::Interior;
        if (i == 0)
          r = NodeRegion::CapMinus;
        else if (i == n1() - 1)
          r = NodeRegion::CapPlus;
        else if (m == nrho() - 1)
          r = NodeRegion::Lateral;
        region_[node(i, m, l)] = r;
      }

  // Volume weights: dVol_g = c^{3/2} c0 rho  dx1 drho dtheta on the polar
  // cells; the rho-moment of each cell is exact for the midpoint rings.
  const double c32 = std::pow(conf(), 1.5);
  vol_w_.assign(N, 0.0);
  auto rho_weight = [&](int m) {
    if (m == nrho() - 1) return 0.5 * hrho_ * (1.0 - 0.25 * hrho_);
    return rho(m) * hrho_;
  };
  for (int i = 0; i < n1(); ++i) {
    const double w1 = (i == 0 || i == n1() - 1) ? 0.5 * h1_ : h1_;
    for (int m = 0; m < nrho(); ++m)
      for (int l = 0; l < ntheta(); ++l)
        vol_w_[node(i, m, l)] = c32 * c0_[trans_node(m, l)] * rho_weight(m) * htheta_ * w1;
  }

  b_index_.assign(N, -1);
  for (int n = 0; n < N; ++n) {
    if (region_[n] != NodeRegion::Interior) {
      b_index_[n] = int(boundary_nodes_.size());
      boundary_nodes_.push_back(n);
    } else {
      interior_nodes_.push_back(n);
    }
  }

  surf_w_.resize(boundary_nodes_.size());
  normal_phi_.resize(boundary_nodes_.size());
  const double c = conf();
  for (int b = 0; b < int(boundary_nodes_.size()); ++b) {
    const auto [i, m, l] = node_ijk(boundary_nodes_[b]);
    const double c0v = c0_[trans_node(m, l)];
    switch (region_[boundary_nodes_[b]]) {
      case NodeRegion::CapMinus:
        surf_w_[b] = c * c0v * rho_weight(m) * htheta_;
        normal_phi_[b] = -1.0 / std::sqrt(c);
        break;
      case NodeRegion::CapPlus:
        surf_w_[b] = c * c0v * rho_weight(m) * htheta_;
        normal_phi_[b] = 1.0 / std::sqrt(c);
        break;
      case NodeRegion::Lateral:
        surf_w_[b] = c * std::sqrt(c0v) * h1_ * htheta_;
        normal_phi_[b] = 0.0;
        break;
      default:
        break;
    }
  }
}

double ManifoldGrid::total_volume_weight() const {
  double s = 0.0;
  for (double w : vol_w_) s += w;
  return s;
}

double ManifoldGrid::refined_volume(int refine) const {
  const int nr = nrho() * refine, nt = ntheta() * refine;
  const double dr = 1.0 / nr, dt = kTwoPi / nt;
  double s = 0.0;
  for (int a = 0; a < nr; ++a) {
    const double r = (a + 0.5) * dr;
    for (int b = 0; b < nt; ++b) {
      const double t = (b + 0.5) * dt;
      const Vec2 x{r * std::cos(t), r * std::sin(t)};
      s += cfg_.metric.c0(x) * r * dr * dt;
    }
  }
  return std::pow(conf(), 1.5) * (cfg_.x1b - cfg_.x1a) * s;
}

ManifoldGrid build_manifold(const ManifoldConfig& cfg) { return ManifoldGrid(cfg); }

std::vector<int> BoundaryDecomposition::members(const std::vector<std::uint8_t>& mask) {
  std::vector<int> out;
  for (int b = 0; b < int(mask.size()); ++b)
    if (mask[b]) out.push_back(b);
  return out;
}

int BoundaryDecomposition::count(const std::vector<std::uint8_t>& mask) {
  int c = 0;
  for (auto v : mask) c += v ? 1 : 0;
  return c;
}

namespace {

// Neighbors of a boundary node within the boundary-node graph, with metric
// edge lengths.
std::vector<std::pair<int, double>> boundary_neighbors(const ManifoldGrid& g, int b) {
  std::vector<std::pair<int, double>> out;
  const auto [i, m, l] = g.node_ijk(g.boundary_nodes()[b]);
  const double sc = std::sqrt(g.conf());
  auto try_add = [&](int ii, int mm, int ll, double len) {
    if (ii < 0 || ii >= g.n1() || mm < 0 || mm >= g.nrho()) return;
    ll = (ll % g.ntheta() + g.ntheta()) % g.ntheta();
    const int bn = g.boundary_index(g.node(ii, mm, ll));
    if (bn >= 0) out.emplace_back(bn, len);
  };
  const double c0h = g.c0(m, l);
  try_add(i - 1, m, l, sc * g.h1());
  try_add(i + 1, m, l, sc * g.h1());
  try_add(i, m - 1, l, sc * std::sqrt(c0h) * g.hrho());
  try_add(i, m + 1, l, sc * std::sqrt(c0h) * g.hrho());
  try_add(i, m, l - 1, sc * std::sqrt(c0h) * g.rho(m) * g.htheta());
  try_add(i, m, l + 1, sc * std::sqrt(c0h) * g.rho(m) * g.htheta());
  return out;
}

std::vector<std::uint8_t> dilate_boundary(const ManifoldGrid& g,
                                          const std::vector<std::uint8_t>& mask) {
  std::vector<std::uint8_t> out = mask;
  for (int b = 0; b < int(mask.size()); ++b) {
    if (!mask[b]) continue;
    for (auto [nb, len] : boundary_neighbors(g, b)) out[nb] = 1;
  }
  return out;
}

}  // namespace

std::vector<double> boundary_distances(const ManifoldGrid& grid,
                                       const std::vector<std::uint8_t>& source_mask) {
  const int nb = grid.num_boundary();
  std::vector<double> dist(nb, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (int b = 0; b < nb; ++b)
    if (source_mask[b]) {
      dist[b] = 0.0;
      heap.emplace(0.0, b);
    }
  while (!heap.empty()) {
    auto [d, b] = heap.top();
    heap.pop();
    if (d > dist[b] + 1e-15) continue;
    for (auto [nbi, len] : boundary_neighbors(grid, b)) {
      if (dist[b] + len < dist[nbi] - 1e-15) {
        dist[nbi] = dist[b] + len;
        heap.emplace(dist[nbi], nbi);
      }
    }
  }
  return dist;
}

BoundaryDecomposition classify_boundary(const ManifoldGrid& grid, double tau, double delta,
                                        const GammaISpec& gamma_i) {
  if (tau == 0.0) throw TauZero();
  if (delta <= 0.0) throw InvalidConfig("delta must be positive");

  const int nb = grid.num_boundary();
  BoundaryDecomposition d;
  d.tau = tau;
  d.delta = delta;
  d.normal_phi.resize(nb);
  auto alloc = [&](std::vector<std::uint8_t>& m) { m.assign(nb, 0); };
  alloc(d.pm_plus);
  alloc(d.pm_minus);
  alloc(d.pm_tan);
  alloc(d.gamma_i);
  alloc(d.gamma_a);
  alloc(d.gamma_plus);
  alloc(d.gamma_minus);
  alloc(d.s_plus);
  alloc(d.s_minus);
  alloc(d.s_minus_delta);
  alloc(d.s_zero_delta);
  alloc(d.v_tau_delta);
  alloc(d.gamma_a_tau_delta);

  const double sgn = tau > 0 ? 1.0 : -1.0;
  const double threshold = 1.0 / (3.0 * std::abs(tau));

  for (int b = 0; b < nb; ++b) {
    const int n = grid.boundary_nodes()[b];
    const auto [i, m, l] = grid.node_ijk(n);
    const double nphi = grid.normal_phi(b);
    d.normal_phi[b] = nphi;
    if (nphi > 0) d.pm_plus[b] = 1;
    if (nphi < 0) d.pm_minus[b] = 1;
    if (nphi == 0) d.pm_tan[b] = 1;

    const double sv = sgn * nphi;
    if (sv >= threshold) d.s_plus[b] = 1;
    else {
      d.s_minus[b] = 1;
      if (sv <= -delta) d.s_minus_delta[b] = 1;
      else d.s_zero_delta[b] = 1;
    }

    if (gamma_i.present && grid.region(n) == NodeRegion::Lateral) {
      double width = wrap_angle(gamma_i.theta_hi - gamma_i.theta_lo);
      if (width == 0.0 && gamma_i.theta_hi != gamma_i.theta_lo) width = kTwoPi;
      const double off = wrap_angle(grid.theta(l) - gamma_i.theta_lo);
      const double x1 = grid.x1(i);
      if (off <= width + 1e-12 && x1 >= gamma_i.x1_lo - 1e-12 && x1 <= gamma_i.x1_hi + 1e-12)
        d.gamma_i[b] = 1;
    }
    if (d.pm_tan[b] && !d.gamma_i[b]) d.gamma_a[b] = 1;
  }

  // Gamma_pm: one-ring discrete neighborhoods of pm_pm  union  gamma_a.
  std::vector<std::uint8_t> base_p(nb, 0), base_m(nb, 0);
  for (int b = 0; b < nb; ++b) {
    base_p[b] = (d.pm_plus[b] || d.gamma_a[b]) ? 1 : 0;
    base_m[b] = (d.pm_minus[b] || d.gamma_a[b]) ? 1 : 0;
  }
  d.gamma_plus = dilate_boundary(grid, base_p);
  d.gamma_minus = dilate_boundary(grid, base_m);

  // V^{tau,delta} and Gamma_a^{tau,delta} partition S^-_tau. The cap side
  // pM_{-sgn(tau)} belongs to V so that f^- = -a kills the trace there; the
  // CGO trace then survives only on S^+_tau and on Gamma_a.
  std::vector<double> dist_gi;
  if (gamma_i.present && BoundaryDecomposition::count(d.gamma_i) > 0)
    dist_gi = boundary_distances(grid, d.gamma_i);
  for (int b = 0; b < nb; ++b) {
    if (!d.s_minus[b]) continue;
    const bool near_gi = !dist_gi.empty() && dist_gi[b] < delta;
    const bool in_pm_msgn = sgn > 0 ? d.pm_minus[b] : d.pm_plus[b];
    if (near_gi || in_pm_msgn) d.v_tau_delta[b] = 1;
    else d.gamma_a_tau_delta[b] = 1;
  }

  if (gamma_i.present) {
    d.accessible_arc.empty = false;
    d.accessible_arc.lo = wrap_angle(gamma_i.theta_hi + grid.htheta());
    d.accessible_arc.hi = wrap_angle(gamma_i.theta_lo - grid.htheta());
  } else {
    d.accessible_arc.empty = false;
    d.accessible_arc.lo = 0.0;
    d.accessible_arc.hi = kTwoPi;
  }
  return d;
}

namespace {

struct GeoState {
  Vec2 x;
  Vec2 v;
};

// Geodesic equation for g0 = c0 * euclidean: with phi = log(c0)/2,
//   x'' = -2 (v . grad phi) v + |v|^2 grad phi.
GeoState geo_rhs(const MetricSpec& metric, const GeoState& s) {
  GeoState d;
  d.x = s.v;
  const double c0 = metric.c0(s.x);
  const Vec2 gphi = metric.grad_c0(s.x) / (2.0 * c0);
  d.v = -2.0 * s.v.dot(gphi) * s.v + s.v.squaredNorm() * gphi;
  return d;
}

GeoState rk4_step(const MetricSpec& metric, const GeoState& s, double h) {
  const GeoState k1 = geo_rhs(metric, s);
  const GeoState s2{s.x + 0.5 * h * k1.x, s.v + 0.5 * h * k1.v};
  const GeoState k2 = geo_rhs(metric, s2);
  const GeoState s3{s.x + 0.5 * h * k2.x, s.v + 0.5 * h * k2.v};
  const GeoState k3 = geo_rhs(metric, s3);
  const GeoState s4{s.x + h * k3.x, s.v + h * k3.v};
  const GeoState k4 = geo_rhs(metric, s4);
  return {s.x + (h / 6.0) * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
          s.v + (h / 6.0) * (k1.v + 2 * k2.v + 2 * k3.v + k4.v)};
}

}  // namespace

Vec2 Geodesic::at(double tt) const {
  if (points.empty()) return Vec2::Zero();
  if (tt <= 0.0) return points.front();
  if (tt >= T) return points.back();
  auto it = std::upper_bound(t.begin(), t.end(), tt);
  const int k = std::max<int>(1, int(it - t.begin()));
  const double t0 = t[k - 1], t1 = t[k];
  const double a = (tt - t0) / std::max(1e-300, t1 - t0);
  return (1.0 - a) * points[k - 1] + a * points[k];
}

Geodesic trace_geodesic(const ManifoldGrid& grid, const Vec2& entry, const Vec2& direction,
                        double step) {
  const MetricSpec& metric = grid.metric();
  if (std::abs(entry.norm() - 1.0) > grid.hrho())
    throw InvalidConfig("geodesic entry point must lie on the rim of the disk");
  if (direction.dot(-entry) <= 1e-12 * direction.norm())
    throw InvalidConfig("geodesic direction must point strictly inward");
  const double h = step > 0 ? step : grid.geo_step();

  GeoState s;
  s.x = entry;
  s.v = direction / (direction.norm() * std::sqrt(metric.c0(entry)));  // unit g0 speed

  Geodesic geo;
  geo.points.push_back(s.x);
  geo.t.push_back(0.0);
  geo.entry_dir = s.v.normalized();

  const int max_steps = int(64.0 / h) + 16;
  int steps = 0;
  while (true) {
    GeoState next = rk4_step(metric, s, h);
    if (next.x.norm() >= 1.0) {
      // bisect the step fraction to land on the rim
      double lo = 0.0, hi = 1.0;
      GeoState end = next;
      for (int it = 0; it < 80 && (hi - lo) > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        GeoState trial = rk4_step(metric, s, h * mid);
        if (trial.x.norm() >= 1.0) {
          hi = mid;
          end = trial;
        } else {
          lo = mid;
        }
      }
      const double frac = 0.5 * (lo + hi);
      end = rk4_step(metric, s, h * frac);
      geo.points.push_back(end.x);
      geo.t.push_back(geo.t.back() + h * frac);
      geo.T = geo.t.back();
      const Vec2 nu = end.x.normalized();
      const double cosang = std::abs(end.v.normalized().dot(nu));
      if (cosang < 1e-9)
        throw TangentialExit("geodesic exit is numerically tangent to the rim");
      geo.nontangential = cosang > 1e-3;
      geo.exit_dir = end.v.normalized();
      return geo;
    }
    s = next;
    geo.points.push_back(s.x);
    geo.t.push_back(geo.t.back() + h);
    if (++steps > max_steps)
      throw MaxStepsExceeded("geodesic did not exit the disk; metric preset is not simple here");
  }
}

Geodesic make_chord(const ManifoldGrid& grid, double s, double alpha) {
  if (grid.metric().preset != MetricPreset::Euclidean)
    throw MetricUnsupported("analytic chords require the euclidean preset");
  if (std::abs(s) >= 1.0) throw InvalidConfig("chord offset must satisfy |s| < 1");
  const Vec2 n{std::cos(alpha), std::sin(alpha)};
  const Vec2 dir{-std::sin(alpha), std::cos(alpha)};
  const double half = std::sqrt(1.0 - s * s);
  Geodesic geo;
  geo.T = 2.0 * half;
  geo.chord_s = s;
  geo.chord_alpha = alpha;
  geo.nontangential = true;
  geo.entry_dir = dir;
  geo.exit_dir = dir;
  const double h = grid.geo_step();
  const int nseg = std::max(2, int(std::ceil(geo.T / h)));
  for (int k = 0; k <= nseg; ++k) {
    const double t = geo.T * k / nseg;
    geo.points.push_back(s * n + (t - half) * dir);
    geo.t.push_back(t);
  }
  return geo;
}

namespace {

// Distance/angle from p to x by shooting in the extended simple manifold.
// Returns (r, takeoff angle). For the euclidean preset this is exact.
std::pair<double, double> shoot_polar(const MetricSpec& metric, const Vec2& p, const Vec2& x,
                                      double step) {
  if (metric.preset == MetricPreset::Euclidean) {
    const Vec2 dxy = x - p;
    return {dxy.norm(), std::atan2(dxy.y(), dxy.x())};
  }
  const Vec2 dxy = x - p;
  double psi = std::atan2(dxy.y(), dxy.x());
  const double target_guess = dxy.norm() * (1.0 + 0.5 * metric.amplitude);

  auto track = [&](double angle, double& r_foot) {
    GeoState s;
    s.x = p;
    const Vec2 d{std::cos(angle), std::sin(angle)};
    s.v = d / std::sqrt(metric.c0(p));
    double t = 0.0;
    double best = std::numeric_limits<double>::infinity();
    double cross = 0.0;
    r_foot = 0.0;
    const int nmax = int(2.5 * target_guess / step) + 8;
    Vec2 prev = s.x;
    double tprev = 0.0;
    for (int k = 0; k < nmax; ++k) {
      s = rk4_step(metric, s, step);
      t += step;
      // closest approach on segment [prev, s.x]
      const Vec2 seg = s.x - prev;
      const double L2 = seg.squaredNorm();
      double a = L2 > 0 ? std::clamp((x - prev).dot(seg) / L2, 0.0, 1.0) : 0.0;
      const Vec2 foot = prev + a * seg;
      const double dd = (foot - x).norm();
      if (dd < best) {
        best = dd;
        r_foot = tprev + a * (t - tprev);
        const Vec2 dirseg = L2 > 0 ? Vec2(seg / std::sqrt(L2)) : Vec2(1, 0);
        cross = dirseg.x() * (x - foot).y() - dirseg.y() * (x - foot).x();
      }
      prev = s.x;
      tprev = t;
      if (t > target_guess * 1.8 + 4 * step) break;
    }
    return cross;
  };

  double r_foot = 0.0;
  double e0 = track(psi, r_foot);
  double psi1 = psi + (e0 > 0 ? 1e-3 : -1e-3);
  double r1 = 0.0;
  double e1 = track(psi1, r1);
  for (int it = 0; it < 60; ++it) {
    if (std::abs(e1) < 1e-11) break;
    const double denom = e1 - e0;
    double next = (std::abs(denom) > 1e-300) ? psi1 - e1 * (psi1 - psi) / denom
                                             : psi1 + (e1 > 0 ? -1e-4 : 1e-4);
    psi = psi1;
    e0 = e1;
    psi1 = next;
    e1 = track(psi1, r1);
  }
  if (std::abs(e1) > 1e-6)
    throw ChartFailure("polar shooting did not converge; metric may not be simple");
  return {r1, psi1};
}

}  // namespace

PolarChart build_polar_chart(const ManifoldGrid& grid, const Geodesic& target, double epsilon) {
  if (!target.nontangential) throw ChartFailure("polar chart requires a nontangential geodesic");
  if (epsilon <= 0) throw InvalidConfig("chart offset epsilon must be positive");
  const MetricSpec& metric = grid.metric();

  PolarChart chart;
  chart.epsilon = epsilon;
  chart.extended_radius = 1.0 + 2.0 * epsilon;

  // p = gamma(-epsilon): integrate backwards from the entry point.
  const double h = grid.geo_step();
  if (metric.preset == MetricPreset::Euclidean) {
    chart.p = target.points.front() - epsilon * target.entry_dir;
    chart.theta0 = std::atan2(target.entry_dir.y(), target.entry_dir.x());
  } else {
    GeoState s;
    s.x = target.points.front();
    s.v = -target.entry_dir / std::sqrt(metric.c0(target.points.front()));
    const int nfull = int(epsilon / h);
    for (int k = 0; k < nfull; ++k) s = rk4_step(metric, s, h);
    const double rem = epsilon - nfull * h;
    if (rem > 0) s = rk4_step(metric, s, rem);
    chart.p = s.x;
    const Vec2 fwd = -s.v;
    chart.theta0 = std::atan2(fwd.y(), fwd.x());
  }
  if (chart.p.norm() <= 1.0)
    throw ChartFailure("chart center p did not leave the disk; epsilon too small");

  const int nt = grid.num_transversal();
  chart.r.resize(nt);
  chart.theta.resize(nt);
  for (int m = 0; m < grid.nrho(); ++m)
    for (int l = 0; l < grid.ntheta(); ++l) {
      const auto [rr, th] = shoot_polar(metric, chart.p, grid.trans_point(m, l), h);
      chart.r[grid.trans_node(m, l)] = rr;
      chart.theta[grid.trans_node(m, l)] = th;
    }

  // Injectivity of (r, theta) on the node set.
  std::vector<Vec2> mapped(nt);
  for (int k = 0; k < nt; ++k)
    mapped[k] = Vec2(chart.r[k] * std::cos(chart.theta[k]), chart.r[k] * std::sin(chart.theta[k]));
  for (int a = 0; a < nt; ++a)
    for (int b = a + 1; b < nt; ++b)
      if ((mapped[a] - mapped[b]).norm() < 1e-9)
        throw ChartFailure("polar chart is not injective on the node set");

  chart.max_eikonal_error = chart_eikonal_error(grid, chart);
  return chart;
}

double chart_eikonal_error(const ManifoldGrid& grid, const PolarChart& chart) {
  // Fourth-order centered differences; the chart center sits a distance
  // epsilon outside the rim, so r has curvature ~1/epsilon there and
  // second-order stencils are too crude at desk resolutions.
  double worst = 0.0;
  const int nr = grid.nrho(), ntt = grid.ntheta();
  auto rv = [&](int m, int l) { return chart.r[grid.trans_node(m, (l % ntt + ntt) % ntt)]; };
  for (int m = 2; m + 2 < nr; ++m)
    for (int l = 0; l < ntt; ++l) {
      const double drho = (rv(m - 2, l) - 8.0 * rv(m - 1, l) + 8.0 * rv(m + 1, l) -
                           rv(m + 2, l)) /
                          (12.0 * grid.hrho());
      const double dtheta = (rv(m, l - 2) - 8.0 * rv(m, l - 1) + 8.0 * rv(m, l + 1) -
                             rv(m, l + 2)) /
                            (12.0 * grid.htheta());
      const double c0 = grid.c0(m, l);
      const double rho = grid.rho(m);
      const double g = (drho * drho + (dtheta / rho) * (dtheta / rho)) / c0;
      worst = std::max(worst, std::abs(std::sqrt(g) - 1.0));
    }
  return worst;
}

}  // namespace cald
