#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "calderon/bie.hpp"
#include "calderon/carleman.hpp"
#include "calderon/cgo.hpp"
#include "calderon/forward.hpp"
#include "calderon/geometry.hpp"
#include "calderon/phantoms.hpp"
#include "calderon/xray.hpp"

namespace cald {

struct RunConfig {
  ManifoldConfig manifold;
  std::string mode = "global";  // global | partial | local
  std::vector<double> tau_ladder = {8.0, 16.0, 32.0};
  double tau_min = 8.0;
  double delta = 0.3;
  int lambda_count = 9;
  double lambda_spacing = 0.1;
  int n_angles = 64;
  int n_offsets = 33;
  double bump_width = 0.2;
  double epsilon = 0.25;
  int richardson_order = 1;
  double extrapolation_tol = 0.5;  // relative guard on successive extrapolants
  PhantomSpec phantom;
  unsigned long long seed = 1234;
  // local mode
  double o_cx = 0.0, o_cy = 0.0, o_radius = 0.8;

  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_json_file(const std::filesystem::path& path);
  std::string to_json_text() const;

  std::vector<double> lambdas() const;  // symmetric grid around 0
  void validate() const;
};

/// Gamma_+/Gamma_- data masks for the configured mode.
struct DataMasks {
  std::vector<std::uint8_t> gamma_plus;
  std::vector<std::uint8_t> gamma_minus;
};
DataMasks data_masks(const ManifoldGrid& grid, const RunConfig& cfg);

/// Forward stage: writes lambda_q / lambda_0 partial DtN artifacts, the
/// ground-truth potential and a manifest with checksums.
void run_forward(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct ReconstructionReport {
  double rel_l2_error = -1.0;  // vs ground truth if available
  double max_abs_recon = 0.0;
  std::vector<double> bie_condition;       // per tau
  std::vector<double> r0_norms;            // per tau (first sample)
  double mean_extraction_residual = 0.0;
  double max_eikonal_error = 0.0;
  double seconds = 0.0;
  std::string to_json_text() const;
};

/// Data-driven reconstruction from stored DtN artifacts. When `oracle_q` is
/// supplied the BIE solve is replaced by the exact Schrodinger CGO trace
/// (the calibration pipeline of the acceptance gate).
ReconstructionReport run_reconstruction(const RunConfig& cfg, const std::filesystem::path& dtn_dir,
                                        const std::filesystem::path& out_dir,
                                        bool emit_plots = false,
                                        const VecXc* oracle_q = nullptr,
                                        VecXc* recon_out = nullptr);

/// One reconstruction pass entirely in memory (used by tests); returns the
/// reconstructed field and fills `report`.
VecXc reconstruct_in_memory(const RunConfig& cfg, const ManifoldGrid& grid,
                            const ForwardModel& fm, const PartialDtN& dtn_q,
                            const PartialDtN& dtn_0, ReconstructionReport& report,
                            const VecXc* oracle_q = nullptr,
                            TransformSamples* samples_out = nullptr);

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  bool expected_failure = false;
};

struct SelftestReport {
  std::vector<CheckResult> checks;
  bool all_pass = true;
  void add(const std::string& name, double value, double threshold, bool smaller_is_pass = true);
  void add_bound(const std::string& name, double value, double lo, double hi);
};

/// Invariant suites of all modules; writes green-operator CSV rows when an
/// output directory is given.
SelftestReport run_selftest(const RunConfig& cfg, bool quick,
                            const std::filesystem::path* out_dir = nullptr);

double rel_l2_error(const ForwardModel& fm, const VecXc& got, const VecXc& truth);

}  // namespace cald
