#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "calderon/bie.hpp"
#include "calderon/probes.hpp"

using namespace cald;

TEST_CASE("richardson extrapolation") {
  // P(tau) = D + beta / tau is reproduced exactly by the two-point rule.
  const cplx D{2.0, -1.0}, beta{0.5, 0.25};
  std::vector<std::pair<double, cplx>> pts;
  for (double t : {8.0, 16.0, 32.0}) pts.emplace_back(t, D + beta / t);
  ExtractionResult r = extract_transform_sample(pts, 0.0, 0.25, 1.0, 1);
  CHECK(std::abs(r.value - D) < 1e-12);
  CHECK(r.residual < 1e-12);

  // quadratic rule kills an additional 1/tau^2 term
  std::vector<std::pair<double, cplx>> pts2;
  for (double t : {8.0, 16.0, 32.0}) pts2.emplace_back(t, D + beta / t + cplx(0.3, 0.1) / (t * t));
  ExtractionResult r2 = extract_transform_sample(pts2, 0.0, 0.25, 1.0, 2);
  CHECK(std::abs(r2.value - D) < 1e-12);

  CHECK_THROWS_AS(extract_transform_sample({{8.0, cplx(1.0)}}, 0.0, 0.25, 1.0, 1), InvalidConfig);
}

TEST_CASE("extraction applies the chart offset attenuation correction") {
  const cplx D{1.0, 0.0};
  std::vector<std::pair<double, cplx>> pts{{8.0, D}, {16.0, D}};
  const double lambda = 0.3, eps = 0.25, mass = 2.0;
  ExtractionResult r = extract_transform_sample(pts, lambda, eps, mass, 1);
  CHECK(std::abs(r.value - std::exp(2 * lambda * eps) * D / mass) < 1e-14);
}

TEST_CASE("bie and single layer invariant probes (quick grid)") {
  RunConfig cfg = reference_config();
  for (const auto& c : probe_single_layer_bie(cfg, true)) {
    INFO(c.name, " value=", c.value, " threshold=", c.threshold);
    CHECK(c.pass);
  }
}
