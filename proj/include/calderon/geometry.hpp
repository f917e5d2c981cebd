#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "calderon/errors.hpp"

namespace cald {

using Vec2 = Eigen::Vector2d;

enum class MetricPreset { Euclidean, ConformalGaussian };

/// Transversal metric g0 = c0(x') * (euclidean), conformal factor c constant.
/// c0(x') = 1 + A exp(-|x'|^2 / w^2); the Gaussian amplitude is capped so the
/// disk stays simple.
struct MetricSpec {
  MetricPreset preset = MetricPreset::Euclidean;
  double amplitude = 0.0;
  double width = 0.5;
  double conformal = 1.0;  // constant global conformal factor c > 0

  double c0(const Vec2& x) const {
    if (preset == MetricPreset::Euclidean) return 1.0;
    return 1.0 + amplitude * std::exp(-x.squaredNorm() / (width * width));
  }
  Eigen::Vector2d grad_c0(const Vec2& x) const {
    if (preset == MetricPreset::Euclidean) return Vec2::Zero();
    const double e = amplitude * std::exp(-x.squaredNorm() / (width * width));
    return (-2.0 / (width * width)) * e * x;
  }
};

struct AngularInterval {
  double lo = 0.0;  // radians, interval [lo, hi] possibly wrapping
  double hi = 0.0;
  bool empty = true;
  bool contains(double theta) const;
};

struct GammaISpec {
  bool present = false;
  double theta_lo = 0.0;
  double theta_hi = 0.0;
  double x1_lo = 0.0;
  double x1_hi = 0.0;
};

struct ManifoldConfig {
  double x1a = -1.0, x1b = 1.0;
  int nx1 = 17, nrho = 16, ntheta = 32;
  MetricSpec metric;
  GammaISpec gamma_i;

  static ManifoldConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

enum class NodeRegion : std::uint8_t { Interior = 0, CapMinus = 1, CapPlus = 2, Lateral = 3 };

/// Discrete cylinder [x1a,x1b] x D^2 in polar transversal coordinates.
/// rho is offset half a cell from the origin and the last ring sits exactly
/// on rho = 1, so the lateral boundary is a grid circle.
class ManifoldGrid {
public:
  explicit ManifoldGrid(const ManifoldConfig& cfg);

  const ManifoldConfig& config() const { return cfg_; }

  int n1() const { return cfg_.nx1; }
  int nrho() const { return cfg_.nrho; }
  int ntheta() const { return cfg_.ntheta; }
  int num_nodes() const { return n1() * nrho() * ntheta(); }
  int num_transversal() const { return nrho() * ntheta(); }

  double h1() const { return h1_; }
  double hrho() const { return hrho_; }
  double htheta() const { return htheta_; }
  double min_cell() const { return min_cell_; }

  double x1(int i) const { return cfg_.x1a + h1_ * i; }
  double rho(int m) const { return (m + 0.5) * hrho_; }
  double theta(int l) const { return htheta_ * l; }

  int node(int i, int m, int l) const { return (i * nrho() + m) * ntheta() + l; }
  int trans_node(int m, int l) const { return m * ntheta() + l; }
  std::array<int, 3> node_ijk(int n) const {
    const int l = n % ntheta();
    const int im = n / ntheta();
    return {im / nrho(), im % nrho(), l};
  }

  Vec2 trans_point(int m, int l) const {
    const double r = rho(m), t = theta(l);
    return {r * std::cos(t), r * std::sin(t)};
  }

  double conf() const { return cfg_.metric.conformal; }
  double c0(int m, int l) const { return c0_[trans_node(m, l)]; }
  const MetricSpec& metric() const { return cfg_.metric; }

  NodeRegion region(int n) const { return region_[n]; }
  bool is_boundary(int n) const { return region_[n] != NodeRegion::Interior; }

  const std::vector<double>& volume_weights() const { return vol_w_; }
  double volume_weight(int n) const { return vol_w_[n]; }

  // Boundary bookkeeping: nodes listed in ascending node order.
  int num_boundary() const { return int(boundary_nodes_.size()); }
  int num_interior() const { return num_nodes() - num_boundary(); }
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }
  const std::vector<int>& interior_nodes() const { return interior_nodes_; }
  int boundary_index(int n) const { return b_index_[n]; }  // -1 for interior
  double surface_weight(int b) const { return surf_w_[b]; }
  const std::vector<double>& surface_weights() const { return surf_w_; }
  double normal_phi(int b) const { return normal_phi_[b]; }

  double total_volume_weight() const;
  /// Reference volume by refined midpoint quadrature (oracle for the weight-sum
  /// invariant).
  double refined_volume(int refine = 8) const;

  /// Geodesic integrator step (classical 4th order, fixed step).
  double geo_step() const { return min_cell_ / 4.0; }

private:
  ManifoldConfig cfg_;
  double h1_, hrho_, htheta_, min_cell_;
  std::vector<double> c0_;
  std::vector<NodeRegion> region_;
  std::vector<double> vol_w_;
  std::vector<int> boundary_nodes_;
  std::vector<int> interior_nodes_;
  std::vector<int> b_index_;
  std::vector<double> surf_w_;
  std::vector<double> normal_phi_;
};

ManifoldGrid build_manifold(const ManifoldConfig& cfg);

/// Index sets over boundary nodes for a fixed (tau, delta). Sets are stored as
/// masks of length grid.num_boundary().
struct BoundaryDecomposition {
  double tau = 0.0;
  double delta = 0.0;
  std::vector<std::uint8_t> pm_plus, pm_minus, pm_tan;
  std::vector<std::uint8_t> gamma_i, gamma_a;
  std::vector<std::uint8_t> gamma_plus, gamma_minus;
  std::vector<std::uint8_t> s_plus;         // S^+_tau
  std::vector<std::uint8_t> s_minus;        // S^-_tau = complement
  std::vector<std::uint8_t> s_minus_delta;  // S^-_{tau,delta}
  std::vector<std::uint8_t> s_zero_delta;   // S^0_{tau,delta}
  std::vector<std::uint8_t> v_tau_delta;
  std::vector<std::uint8_t> gamma_a_tau_delta;
  std::vector<double> normal_phi;
  AngularInterval accessible_arc;  // E, as an angular interval on the rim

  static std::vector<int> members(const std::vector<std::uint8_t>& mask);
  static int count(const std::vector<std::uint8_t>& mask);
};

BoundaryDecomposition classify_boundary(const ManifoldGrid& grid, double tau, double delta,
                                        const GammaISpec& gamma_i);

/// Unit-speed polyline geodesic of the transversal disk.
struct Geodesic {
  std::vector<Vec2> points;  // arc-length samples, spacing = step
  std::vector<double> t;     // arc length per sample, t.front()=0
  double T = 0.0;            // total length
  bool nontangential = false;
  // For the euclidean preset: chord offset s and normal angle alpha, so that
  // the chord is {s n(alpha) + u d(alpha)}.
  std::optional<double> chord_s;
  std::optional<double> chord_alpha;

  Vec2 entry_dir;            // unit (g0) initial direction
  Vec2 exit_dir;             // unit (g0) final direction

  Vec2 at(double tt) const;  // linear interpolation along the polyline
};

/// Trace from a boundary entry point with a strictly inward direction until
/// exit through the rim. `step` <= 0 picks the grid default.
Geodesic trace_geodesic(const ManifoldGrid& grid, const Vec2& entry, const Vec2& direction,
                        double step = 0.0);

/// Euclidean-preset chord with signed offset s and normal angle alpha,
/// entry at u = -sqrt(1-s^2).
Geodesic make_chord(const ManifoldGrid& grid, double s, double alpha);

/// Global polar coordinates centered at p = gamma(-epsilon) outside the disk.
struct PolarChart {
  Vec2 p;
  double epsilon = 0.25;
  double theta0 = 0.0;
  double extended_radius = 1.5;
  std::vector<double> r;      // per transversal node
  std::vector<double> theta;  // per transversal node (angle at p)
  double max_eikonal_error = 0.0;  // recorded |dr|_{g0} - 1 check

  double r_at(int tn) const { return r[tn]; }
  double theta_at(int tn) const { return theta[tn]; }
};

PolarChart build_polar_chart(const ManifoldGrid& grid, const Geodesic& target,
                             double epsilon = 0.25);

/// max over interior transversal nodes of ||dr|_{g0} - 1| by centered finite
/// differences of the chart's r field.
double chart_eikonal_error(const ManifoldGrid& grid, const PolarChart& chart);

/// Geodesic distances from a boundary node set, over the boundary-node graph
/// (Dijkstra with metric edge lengths). Used for the dist(x, Gamma_i) < delta
/// test defining V^{tau,delta}.
std::vector<double> boundary_distances(const ManifoldGrid& grid,
                                       const std::vector<std::uint8_t>& source_mask);

}  // namespace cald
