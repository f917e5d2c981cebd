#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "calderon/io.hpp"
#include "calderon/probes.hpp"

using namespace cald;
namespace fs = std::filesystem;

namespace {
RunConfig small_config() {
  RunConfig cfg = reference_config();
  cfg.manifold.nx1 = 9;
  cfg.manifold.nrho = 8;
  cfg.manifold.ntheta = 16;
  cfg.tau_ladder = {8.0, 16.0};
  cfg.lambda_count = 3;
  cfg.lambda_spacing = 0.2;
  cfg.n_angles = 32;
  cfg.n_offsets = 33;
  return cfg;
}
}  // namespace

TEST_CASE("run config json round trip and validation") {
  RunConfig cfg = small_config();
  RunConfig back = RunConfig::from_json_text(cfg.to_json_text());
  CHECK(back.tau_ladder == cfg.tau_ladder);
  CHECK(back.lambda_count == cfg.lambda_count);
  CHECK(back.phantom.type == cfg.phantom.type);

  RunConfig bad = cfg;
  bad.mode = "partial";  // no gamma_i configured
  CHECK_THROWS_AS(RunConfig::from_json_text(bad.to_json_text()), InvalidConfig);
}

TEST_CASE("cald1 files round trip with checksums") {
  ManifoldConfig mc;
  mc.nx1 = 5;
  mc.nrho = 5;
  mc.ntheta = 8;
  ManifoldGrid g(mc);
  const fs::path dir = fs::temp_directory_path() / "calderon_io_test";
  fs::create_directories(dir);
  VecXc f = VecXc::Random(g.num_nodes());
  write_field(dir / "f.cald1", g, f);
  VecXc back = read_field(dir / "f.cald1", g);
  CHECK((back - f).cwiseAbs().maxCoeff() == 0.0);

  // corrupting the file trips the sidecar checksum
  ForwardModel fm(g);
  std::vector<std::uint8_t> all(g.num_boundary(), 1);
  PartialDtN dtn = fm.dtn(VecXc::Zero(g.num_nodes()), all, all, "zero");
  write_dtn(dir, "lam", dtn);
  PartialDtN back_dtn = read_dtn(dir, "lam", g.num_boundary());
  CHECK((back_dtn.lambda - dtn.lambda).cwiseAbs().maxCoeff() == 0.0);
  {
    std::ofstream fcorrupt(dir / "lam.cald1", std::ios::binary | std::ios::app);
    fcorrupt << "x";
  }
  CHECK_THROWS_AS(read_dtn(dir, "lam", g.num_boundary()), ChecksumMismatch);
  fs::remove_all(dir);
}

TEST_CASE("forward and reconstruction stages through files") {
  RunConfig cfg = small_config();
  const fs::path dir = fs::temp_directory_path() / "calderon_pipeline_test";
  fs::remove_all(dir);
  run_forward(cfg, dir / "fwd");
  CHECK(fs::exists(dir / "fwd" / "lambda_q.cald1"));
  CHECK(fs::exists(dir / "fwd" / "manifest.json"));

  // same config + seed twice: identical bytes
  run_forward(cfg, dir / "fwd2");
  CHECK(file_checksum(dir / "fwd" / "lambda_q.cald1") ==
        file_checksum(dir / "fwd2" / "lambda_q.cald1"));

  ReconstructionReport rep = run_reconstruction(cfg, dir / "fwd", dir / "rec", true);
  CHECK(fs::exists(dir / "rec" / "q_rec.cald1"));
  CHECK(fs::exists(dir / "rec" / "report.json"));
  CHECK(fs::exists(dir / "rec" / "q_rec_mid.svg"));
  CHECK(rep.rel_l2_error >= 0.0);

  // mismatched geometry is rejected by checksum
  RunConfig other = cfg;
  other.manifold.nx1 = 11;
  CHECK_THROWS_AS(run_reconstruction(other, dir / "fwd", dir / "rec2", false), Error);
  fs::remove_all(dir);
}

TEST_CASE("zero potential pipeline is exact") {
  RunConfig cfg = reference_config();
  for (const auto& c : probe_zero_potential(cfg, true)) {
    INFO(c.name, " value=", c.value, " threshold=", c.threshold);
    CHECK(c.pass);
  }
}

TEST_CASE("determinism across thread counts") {
  RunConfig cfg = small_config();
  for (const auto& c : probe_determinism(cfg)) {
    INFO(c.name, " value=", c.value, " threshold=", c.threshold);
    CHECK(c.pass);
  }
}
