#include "calderon/io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace cald {

namespace fs = std::filesystem;

void write_cald1(const fs::path& path, const std::array<std::uint32_t, 3>& dims,
                 const VecXc& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidConfig("cannot open " + path.string() + " for writing");
  f.write("CALD1", 5);
  f.write(reinterpret_cast<const char*>(dims.data()), 3 * sizeof(std::uint32_t));
  for (int n = 0; n < data.size(); ++n) {
    const double re = data[n].real(), im = data[n].imag();
    f.write(reinterpret_cast<const char*>(&re), sizeof(double));
    f.write(reinterpret_cast<const char*>(&im), sizeof(double));
  }
}

std::pair<std::array<std::uint32_t, 3>, VecXc> read_cald1(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidConfig("cannot open " + path.string());
  char magic[5];
  f.read(magic, 5);
  if (!f || std::string(magic, 5) != "CALD1")
    throw ChecksumMismatch("bad magic in " + path.string());
  std::array<std::uint32_t, 3> dims;
  f.read(reinterpret_cast<char*>(dims.data()), 3 * sizeof(std::uint32_t));
  const std::size_t n = std::size_t(dims[0]) * dims[1] * dims[2];
  VecXc data(n);
  for (std::size_t k = 0; k < n; ++k) {
    double re, im;
    f.read(reinterpret_cast<char*>(&re), sizeof(double));
    f.read(reinterpret_cast<char*>(&im), sizeof(double));
    data[k] = cplx(re, im);
  }
  if (!f) throw ChecksumMismatch("truncated CALD1 file " + path.string());
  return {dims, data};
}

void write_field(const fs::path& path, const ManifoldGrid& grid, const VecXc& field) {
  write_cald1(path, {std::uint32_t(grid.n1()), std::uint32_t(grid.nrho()),
                     std::uint32_t(grid.ntheta())},
              field);
}

VecXc read_field(const fs::path& path, const ManifoldGrid& grid) {
  auto [dims, data] = read_cald1(path);
  if (int(dims[0]) != grid.n1() || int(dims[1]) != grid.nrho() || int(dims[2]) != grid.ntheta())
    throw IndexMismatch("field dims do not match grid in " + path.string());
  return data;
}

void write_matrix(const fs::path& path, const MatXc& m) {
  VecXc flat(m.size());
  int k = 0;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) flat[k++] = m(r, c);
  write_cald1(path, {std::uint32_t(m.rows()), std::uint32_t(m.cols()), 1u}, flat);
}

MatXc read_matrix(const fs::path& path) {
  auto [dims, data] = read_cald1(path);
  MatXc m(dims[0], dims[1]);
  int k = 0;
  for (std::uint32_t r = 0; r < dims[0]; ++r)
    for (std::uint32_t c = 0; c < dims[1]; ++c) m(r, c) = data[k++];
  return m;
}

std::uint64_t fnv1a(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t file_checksum(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidConfig("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string s = ss.str();
  return fnv1a(s.data(), s.size());
}

namespace {
std::vector<int> mask_members(const std::vector<std::uint8_t>& m) {
  std::vector<int> out;
  for (int b = 0; b < int(m.size()); ++b)
    if (m[b]) out.push_back(b);
  return out;
}
}  // namespace

void write_dtn(const fs::path& dir, const std::string& stem, const PartialDtN& dtn) {
  const std::vector<int> rows = mask_members(dtn.rows_mask);
  const std::vector<int> cols = mask_members(dtn.cols_mask);
  MatXc block(rows.size(), cols.size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < cols.size(); ++c) block(r, c) = dtn.lambda(rows[r], cols[c]);
  const fs::path mpath = dir / (stem + ".cald1");
  write_matrix(mpath, block);

  nlohmann::json j;
  j["q_label"] = dtn.q_label;
  j["num_boundary"] = int(dtn.rows_mask.size());
  j["gamma_minus_rows"] = rows;
  j["gamma_plus_cols"] = cols;
  j["checksum"] = file_checksum(mpath);
  write_text(dir / (stem + ".json"), j.dump(2));
}

PartialDtN read_dtn(const fs::path& dir, const std::string& stem, int num_boundary) {
  nlohmann::json j = nlohmann::json::parse(read_text(dir / (stem + ".json")));
  const fs::path mpath = dir / (stem + ".cald1");
  if (j["checksum"].get<std::uint64_t>() != file_checksum(mpath))
    throw ChecksumMismatch("DtN matrix checksum mismatch for " + mpath.string());
  if (j["num_boundary"].get<int>() != num_boundary)
    throw IndexMismatch("DtN artifact was produced on a different grid");
  MatXc block = read_matrix(mpath);
  PartialDtN dtn;
  dtn.q_label = j["q_label"].get<std::string>();
  dtn.rows_mask.assign(num_boundary, 0);
  dtn.cols_mask.assign(num_boundary, 0);
  const auto rows = j["gamma_minus_rows"].get<std::vector<int>>();
  const auto cols = j["gamma_plus_cols"].get<std::vector<int>>();
  for (int r : rows) dtn.rows_mask[r] = 1;
  for (int c : cols) dtn.cols_mask[c] = 1;
  dtn.lambda = MatXc::Zero(num_boundary, num_boundary);
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < cols.size(); ++c) dtn.lambda(rows[r], cols[c]) = block(r, c);
  return dtn;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InvalidConfig("cannot open " + path.string() + " for writing");
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw InvalidConfig("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_svg_heatmap(const fs::path& path, const ManifoldGrid& grid, const VecXc& transversal,
                       const std::string& title) {
  const int W = 420, H = 440;
  double vmax = 1e-300;
  for (int k = 0; k < transversal.size(); ++k) vmax = std::max(vmax, std::abs(transversal[k]));
  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  s << "<text x='10' y='16' font-size='13'>" << title << " (|max| = " << vmax << ")</text>\n";
  const double cx = W / 2.0, cy = (H + 20) / 2.0, R = (W - 40) / 2.0;
  for (int m = 0; m < grid.nrho(); ++m)
    for (int l = 0; l < grid.ntheta(); ++l) {
      const double v = std::abs(transversal[grid.trans_node(m, l)]) / vmax;
      const int r255 = int(255 * std::min(1.0, v));
      const double r0 = R * std::max(0.0, grid.rho(m) - 0.5 * grid.hrho());
      const double r1 = R * std::min(1.0, grid.rho(m) + 0.5 * grid.hrho());
      const double t0 = grid.theta(l) - 0.5 * grid.htheta();
      const double t1 = grid.theta(l) + 0.5 * grid.htheta();
      auto px = [&](double rr, double tt) {
        return std::pair<double, double>{cx + rr * std::cos(tt), cy - rr * std::sin(tt)};
      };
      auto [x0, y0] = px(r0, t0);
      auto [x1, y1] = px(r1, t0);
      auto [x2, y2] = px(r1, t1);
      auto [x3, y3] = px(r0, t1);
      s << "<path d='M" << x0 << ' ' << y0 << " L" << x1 << ' ' << y1 << " A" << r1 << ' ' << r1
        << " 0 0 0 " << x2 << ' ' << y2 << " L" << x3 << ' ' << y3 << " A" << r0 << ' ' << r0
        << " 0 0 1 " << x0 << ' ' << y0 << " Z' fill='rgb(" << r255 << ',' << int(r255 * 0.35)
        << ',' << 255 - r255 << ")'/>\n";
    }
  s << "</svg>\n";
  write_text(path, s.str());
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream f(path);
  if (!f) throw InvalidConfig("cannot open " + path.string() + " for writing");
  for (size_t i = 0; i < header.size(); ++i) f << header[i] << (i + 1 < header.size() ? ',' : '\n');
  f.precision(17);
  for (const auto& row : rows)
    for (size_t i = 0; i < row.size(); ++i) f << row[i] << (i + 1 < row.size() ? ',' : '\n');
}

}  // namespace cald
