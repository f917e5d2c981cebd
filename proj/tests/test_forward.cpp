#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "calderon/forward.hpp"
#include "calderon/probes.hpp"

using namespace cald;

TEST_CASE("stiffness is symmetric and annihilates constants") {
  ManifoldConfig cfg;
  cfg.nx1 = 7;
  cfg.nrho = 6;
  cfg.ntheta = 12;
  cfg.metric.preset = MetricPreset::ConformalGaussian;
  cfg.metric.amplitude = 0.2;
  cfg.metric.width = 0.5;
  ManifoldGrid g(cfg);
  ForwardModel fm(g);
  const SpMat& A = fm.stiffness();
  SpMat At = SpMat(A.transpose());
  double asym = 0.0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (SpMat::InnerIterator it(A, k); it; ++it)
      asym = std::max(asym, std::abs(it.value() - At.coeff(it.row(), it.col())));
  CHECK(asym == 0.0);
  VecXc ones = VecXc::Ones(g.num_nodes());
  CHECK(fm.stiffness_apply(ones).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trace and flux shapes") {
  ManifoldConfig cfg;
  cfg.nx1 = 5;
  cfg.nrho = 5;
  cfg.ntheta = 8;
  ManifoldGrid g(cfg);
  ForwardModel fm(g);
  VecXc u = VecXc::Random(g.num_nodes());
  CHECK(fm.trace(u).size() == g.num_boundary());
  CHECK(fm.normal_trace(u).size() == g.num_boundary());
}

TEST_CASE("dirichlet solver reports eigenvalue proximity") {
  // covered numerically by the probe below; here only the happy path
  ManifoldConfig cfg;
  cfg.nx1 = 5;
  cfg.nrho = 5;
  cfg.ntheta = 8;
  ManifoldGrid g(cfg);
  ForwardModel fm(g);
  VecXc z = VecXc::Zero(g.num_nodes());
  auto solver = fm.make_solver(z);
  CHECK(solver.condition_estimate() < 1e12);
}

TEST_CASE("forward invariant probes") {
  RunConfig cfg = reference_config();
  for (const auto& c : probe_forward(cfg, true)) {
    INFO(c.name, " value=", c.value, " threshold=", c.threshold);
    CHECK(c.pass);
  }
}
