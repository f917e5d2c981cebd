#pragma once

#include "calderon/pipeline.hpp"

namespace cald {

/// Invariant probes shared by `calderon selftest` and the acceptance suite.
/// Each returns one CheckResult per named invariant; `quick` shrinks grids
/// and ladders.

std::vector<CheckResult> probe_geometry(const RunConfig& cfg, bool quick);
std::vector<CheckResult> probe_forward(const RunConfig& cfg, bool quick);
std::vector<CheckResult> probe_carleman(const RunConfig& cfg, bool quick,
                                        std::vector<std::vector<double>>* csv_rows = nullptr);
std::vector<CheckResult> probe_single_layer_bie(const RunConfig& cfg, bool quick);
std::vector<CheckResult> probe_cgo(const RunConfig& cfg, bool quick);
std::vector<CheckResult> probe_xray(const RunConfig& cfg, bool quick);
std::vector<CheckResult> probe_extraction(const RunConfig& cfg, bool quick);
std::vector<CheckResult> probe_zero_potential(const RunConfig& cfg, bool quick);
std::vector<CheckResult> probe_determinism(const RunConfig& cfg);
std::vector<CheckResult> probe_end_to_end(const RunConfig& cfg);

/// Reference configuration used by the acceptance gate (17 x 16 x 32,
/// tau ladder {8,16,32}, global mode, gaussian phantom).
RunConfig reference_config();

}  // namespace cald
