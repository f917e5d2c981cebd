#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "calderon/forward.hpp"

namespace cald {

/// CALD1 binary block: magic "CALD1", dims (3 x u32), float64 (re, im) pairs,
/// row-major with x1 outer / rho middle / theta inner, little-endian.
void write_cald1(const std::filesystem::path& path, const std::array<std::uint32_t, 3>& dims,
                 const VecXc& data);
std::pair<std::array<std::uint32_t, 3>, VecXc> read_cald1(const std::filesystem::path& path);

void write_field(const std::filesystem::path& path, const ManifoldGrid& grid, const VecXc& field);
VecXc read_field(const std::filesystem::path& path, const ManifoldGrid& grid);

void write_matrix(const std::filesystem::path& path, const MatXc& m);
MatXc read_matrix(const std::filesystem::path& path);

std::uint64_t fnv1a(const void* data, std::size_t n);
std::uint64_t file_checksum(const std::filesystem::path& path);

/// DtN artifact: CALD1 matrix restricted to Gamma_- rows x Gamma_+ cols plus a
/// JSON sidecar with the index sets and the matrix checksum.
void write_dtn(const std::filesystem::path& dir, const std::string& stem, const PartialDtN& dtn);
PartialDtN read_dtn(const std::filesystem::path& dir, const std::string& stem, int num_boundary);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Minimal SVG heatmap of a transversal field (|value| or real part).
void write_svg_heatmap(const std::filesystem::path& path, const ManifoldGrid& grid,
                       const VecXc& transversal, const std::string& title);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace cald
