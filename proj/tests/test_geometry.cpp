#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "calderon/geometry.hpp"
#include "calderon/probes.hpp"

using namespace cald;

TEST_CASE("manifold config json round trip") {
  const std::string text = R"({
    "x1": [-1.0, 1.0], "nx1": 9, "nrho": 8, "ntheta": 16,
    "metric": {"preset": "conformal_gaussian", "amplitude": 0.2, "width": 0.5},
    "gamma_i": {"theta_range": [1.0, 2.0], "x1_range": [-0.5, 0.5]}
  })";
  ManifoldConfig cfg = ManifoldConfig::from_json_text(text);
  CHECK(cfg.nx1 == 9);
  CHECK(cfg.metric.preset == MetricPreset::ConformalGaussian);
  CHECK(cfg.gamma_i.present);
  ManifoldConfig back = ManifoldConfig::from_json_text(cfg.to_json_text());
  CHECK(back.ntheta == cfg.ntheta);
  CHECK(back.gamma_i.theta_lo == doctest::Approx(1.0));
}

TEST_CASE("invalid configs are rejected") {
  ManifoldConfig cfg;
  cfg.x1a = 1.0;
  cfg.x1b = -1.0;
  CHECK_THROWS_AS(ManifoldGrid{cfg}, InvalidConfig);

  ManifoldConfig small;
  small.nx1 = 3;
  CHECK_THROWS_AS(ManifoldGrid{small}, InvalidConfig);

  ManifoldConfig bad;
  bad.metric.preset = MetricPreset::ConformalGaussian;
  bad.metric.amplitude = 1.5;
  CHECK_THROWS_AS(ManifoldGrid{bad}, InvalidConfig);
}

TEST_CASE("rho grid puts the rim exactly on a ring") {
  ManifoldConfig cfg;
  cfg.nx1 = 5;
  cfg.nrho = 12;
  cfg.ntheta = 16;
  ManifoldGrid g(cfg);
  CHECK(g.rho(g.nrho() - 1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.rho(0) == doctest::Approx(0.5 * g.hrho()));
}

TEST_CASE("geodesic tracing rejects bad inputs") {
  ManifoldConfig cfg;
  cfg.nx1 = 5;
  cfg.nrho = 8;
  cfg.ntheta = 16;
  ManifoldGrid g(cfg);
  CHECK_THROWS_AS(trace_geodesic(g, Vec2(0.2, 0.0), Vec2(-1, 0)), InvalidConfig);
  CHECK_THROWS_AS(trace_geodesic(g, Vec2(1.0, 0.0), Vec2(1, 0)), InvalidConfig);
  CHECK_THROWS_AS(make_chord(g, 1.2, 0.0), InvalidConfig);
}

TEST_CASE("angular interval membership") {
  AngularInterval E;
  E.empty = false;
  E.lo = 5.0;
  E.hi = 1.0;  // wraps through 0
  CHECK(E.contains(6.0));
  CHECK(E.contains(0.5));
  CHECK(!E.contains(3.0));
}

TEST_CASE("geometry invariant probes") {
  RunConfig cfg = reference_config();
  for (const auto& c : probe_geometry(cfg, true)) {
    INFO(c.name, " value=", c.value, " threshold=", c.threshold);
    CHECK(c.pass);
  }
}
