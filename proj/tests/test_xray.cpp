#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "calderon/xray.hpp"
#include "calderon/probes.hpp"

using namespace cald;

TEST_CASE("fornberg weights on a uniform grid") {
  std::vector<double> nodes{-2, -1, 0, 1, 2};
  auto w1 = fd_weights(nodes, 0.0, 1);
  CHECK(w1[0] == doctest::Approx(1.0 / 12));
  CHECK(w1[1] == doctest::Approx(-8.0 / 12));
  CHECK(w1[2] == doctest::Approx(0.0));
  auto w2 = fd_weights(nodes, 0.0, 2);
  CHECK(w2[2] == doctest::Approx(-30.0 / 12));
  CHECK_THROWS_AS(fd_weights({0.0}, 0.0, 2), StencilTooShort);
}

TEST_CASE("interpolation is exact on constants and handles the center") {
  ManifoldConfig cfg;
  cfg.nx1 = 5;
  cfg.nrho = 8;
  cfg.ntheta = 16;
  ManifoldGrid g(cfg);
  VecXc ones = VecXc::Ones(g.num_transversal());
  CHECK(std::abs(interp_transversal(g, ones, Vec2(0.0, 0.0)) - 1.0) < 1e-14);
  CHECK(std::abs(interp_transversal(g, ones, Vec2(0.3, -0.4)) - 1.0) < 1e-14);
}

TEST_CASE("inversion preconditions") {
  ManifoldConfig cfg;
  cfg.nx1 = 5;
  cfg.nrho = 16;
  cfg.ntheta = 16;
  ManifoldGrid g(cfg);
  ParallelFamily tiny = ParallelFamily::uniform(8, 8, false);
  CHECK_THROWS_AS(fbp_invert(g, tiny, MatXc::Zero(8, 8)), InvalidConfig);

  ManifoldConfig cg = cfg;
  cg.metric.preset = MetricPreset::ConformalGaussian;
  cg.metric.amplitude = 0.2;
  cg.metric.width = 0.5;
  ManifoldGrid ggc(cg);
  ParallelFamily fam = ParallelFamily::uniform(32, 33, false);
  CHECK_THROWS_AS(fbp_invert(ggc, fam, MatXc::Zero(32, 33)), MetricUnsupported);

  // exponential inversion demands full-circle data
  ParallelFamily half = ParallelFamily::uniform(32, 33, false);
  CHECK_THROWS_AS(exp_radon_invert(g, half, MatXc::Zero(32, 33), 0.5), InvalidConfig);
}

TEST_CASE("lambda grid must contain zero and enough points") {
  ManifoldConfig cfg;
  cfg.nx1 = 5;
  cfg.nrho = 32;
  cfg.ntheta = 32;
  ManifoldGrid g(cfg);
  TransformSamples s;
  s.lambdas = {0.1, 0.2, 0.3};
  s.family = ParallelFamily::uniform(32, 33, false);
  for (size_t k = 0; k < 3; ++k) s.values.push_back(MatXc::Zero(32, 33));
  CHECK_THROWS_AS(lambda_derivative_recover(g, s, 1), StencilTooShort);
}

TEST_CASE("xray invariant probes") {
  RunConfig cfg = reference_config();
  for (const auto& c : probe_xray(cfg, true)) {
    INFO(c.name, " value=", c.value, " threshold=", c.threshold);
    CHECK(c.pass);
  }
}
