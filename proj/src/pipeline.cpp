#include "calderon/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "calderon/io.hpp"
#include "calderon/parallel.hpp"

namespace cald {

namespace fs = std::filesystem;

RunConfig RunConfig::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RunConfig cfg;
  if (j.contains("manifold")) cfg.manifold = ManifoldConfig::from_json_text(j["manifold"].dump());
  cfg.mode = j.value("mode", cfg.mode);
  if (j.contains("tau_ladder")) cfg.tau_ladder = j["tau_ladder"].get<std::vector<double>>();
  cfg.tau_min = j.value("tau_min", cfg.tau_min);
  cfg.delta = j.value("delta", cfg.delta);
  if (j.contains("lambda_grid")) {
    cfg.lambda_count = j["lambda_grid"].value("count", cfg.lambda_count);
    cfg.lambda_spacing = j["lambda_grid"].value("spacing", cfg.lambda_spacing);
  }
  if (j.contains("geodesics")) {
    cfg.n_angles = j["geodesics"].value("n_angles", cfg.n_angles);
    cfg.n_offsets = j["geodesics"].value("n_offsets", cfg.n_offsets);
  }
  cfg.bump_width = j.value("bump_width", cfg.bump_width);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.richardson_order = j.value("richardson_order", cfg.richardson_order);
  cfg.extrapolation_tol = j.value("extrapolation_tol", cfg.extrapolation_tol);
  if (j.contains("phantom")) cfg.phantom = PhantomSpec::from_json_text(j["phantom"].dump());
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("o_disk")) {
    cfg.o_cx = j["o_disk"]["center"][0].get<double>();
    cfg.o_cy = j["o_disk"]["center"][1].get<double>();
    cfg.o_radius = j["o_disk"]["radius"].get<double>();
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_json_file(const fs::path& path) {
  return from_json_text(read_text(path));
}

std::string RunConfig::to_json_text() const {
  nlohmann::json j;
  j["manifold"] = nlohmann::json::parse(manifold.to_json_text());
  j["mode"] = mode;
  j["tau_ladder"] = tau_ladder;
  j["tau_min"] = tau_min;
  j["delta"] = delta;
  j["lambda_grid"]["count"] = lambda_count;
  j["lambda_grid"]["spacing"] = lambda_spacing;
  j["geodesics"]["n_angles"] = n_angles;
  j["geodesics"]["n_offsets"] = n_offsets;
  j["bump_width"] = bump_width;
  j["epsilon"] = epsilon;
  j["richardson_order"] = richardson_order;
  j["extrapolation_tol"] = extrapolation_tol;
  j["seed"] = seed;
  j["o_disk"]["center"] = {o_cx, o_cy};
  j["o_disk"]["radius"] = o_radius;
  j["phantom"]["type"] = phantom.type;
  j["phantom"]["amplitude"] = phantom.amplitude;
  j["phantom"]["value"] = phantom.value;
  j["phantom"]["x1_center"] = phantom.x1_center;
  j["phantom"]["tx"] = phantom.tx;
  j["phantom"]["ty"] = phantom.ty;
  j["phantom"]["sigma"] = phantom.sigma;
  j["phantom"]["sigma_x1"] = phantom.sigma_x1;
  j["phantom"]["x0"] = phantom.x0;
  j["phantom"]["width"] = phantom.width;
  j["phantom"]["truncate"] = phantom.truncate;
  j["phantom"]["cap_rolloff"] = phantom.cap_rolloff;
  j["phantom"]["rolloff"] = phantom.rolloff;
  return j.dump(2);
}

std::vector<double> RunConfig::lambdas() const {
  std::vector<double> out;
  const int half = lambda_count / 2;
  for (int k = -half; k <= half; ++k) out.push_back(k * lambda_spacing);
  return out;
}

void RunConfig::validate() const {
  if (mode != "global" && mode != "partial" && mode != "local")
    throw InvalidConfig("mode must be global, partial or local");
  if (tau_ladder.empty()) throw InvalidConfig("tau ladder is empty");
  for (double t : tau_ladder)
    if (t <= 0.0) throw InvalidConfig("tau ladder entries must be positive");
  if (delta <= 0.0) throw InvalidConfig("delta must be positive");
  if (lambda_count < 1 || lambda_count % 2 == 0)
    throw InvalidConfig("lambda_count must be odd (grid symmetric about 0)");
  if ((mode == "partial" || mode == "local") && !manifold.gamma_i.present)
    throw InvalidConfig("partial/local mode requires a gamma_i spec");
}

DataMasks data_masks(const ManifoldGrid& grid, const RunConfig& cfg) {
  DataMasks out;
  const double tau0 = cfg.tau_ladder.front();
  BoundaryDecomposition dec = classify_boundary(grid, tau0, cfg.delta, cfg.manifold.gamma_i);
  if (cfg.mode == "global") {
    out.gamma_plus = dec.pm_plus;
    out.gamma_minus = dec.pm_minus;
  } else {
    out.gamma_plus = dec.gamma_plus;
    out.gamma_minus = dec.gamma_minus;
  }
  return out;
}

void run_forward(const RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  ManifoldGrid grid = build_manifold(cfg.manifold);
  ForwardModel fm(grid);
  DataMasks masks = data_masks(grid, cfg);

  VecXc q = phantom_field(grid, cfg.phantom);
  VecXc q0 = VecXc::Zero(grid.num_nodes());

  PartialDtN dtn_q = fm.dtn(q, masks.gamma_plus, masks.gamma_minus, "phantom:" + cfg.phantom.type);
  PartialDtN dtn_0 = fm.dtn(q0, masks.gamma_plus, masks.gamma_minus, "zero");

  write_dtn(out_dir, "lambda_q", dtn_q);
  write_dtn(out_dir, "lambda_0", dtn_0);
  write_field(out_dir / "q_true.cald1", grid, q);

  nlohmann::json man;
  man["config"] = nlohmann::json::parse(cfg.to_json_text());
  man["manifold_checksum"] = fnv1a(cfg.manifold.to_json_text().data(),
                                   cfg.manifold.to_json_text().size());
  man["lambda_q_checksum"] = file_checksum(out_dir / "lambda_q.cald1");
  man["lambda_0_checksum"] = file_checksum(out_dir / "lambda_0.cald1");
  write_text(out_dir / "manifest.json", man.dump(2));
}

std::string ReconstructionReport::to_json_text() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["rel_l2_error"] = rel_l2_error;
  j["max_abs_recon"] = max_abs_recon;
  j["bie_condition"] = bie_condition;
  j["r0_norms"] = r0_norms;
  j["mean_extraction_residual"] = mean_extraction_residual;
  j["max_eikonal_error"] = max_eikonal_error;
  j["seconds"] = seconds;
  return j.dump(2);
}

double rel_l2_error(const ForwardModel& fm, const VecXc& got, const VecXc& truth) {
  return fm.vol_norm(got - truth) / std::max(fm.vol_norm(truth), 1e-300);
}

namespace {

bool bump_fits_E(const ManifoldGrid& grid, const PolarChart& chart, const Bump& bump,
                 const AngularInterval& E) {
  const int mrim = grid.nrho() - 1;
  for (int l = 0; l < grid.ntheta(); ++l) {
    if (bump(chart.theta[grid.trans_node(mrim, l)]) != 0.0 && !E.contains(grid.theta(l)))
      return false;
  }
  return true;
}

bool chord_in_disk(const Geodesic& geo, const Vec2& c, double r) {
  for (const auto& p : geo.points)
    if ((p - c).norm() > r) return false;
  return true;
}

}  // namespace

VecXc reconstruct_in_memory(const RunConfig& cfg, const ManifoldGrid& grid, const ForwardModel& fm,
                            const PartialDtN& dtn_q, const PartialDtN& dtn_0,
                            ReconstructionReport& report, const VecXc* oracle_q,
                            TransformSamples* samples_out) {
  const auto t_start = std::chrono::steady_clock::now();
  if (grid.metric().preset != MetricPreset::Euclidean)
    throw MetricUnsupported("the reconstruction pipeline inverts transforms on the euclidean disk");

  ModalCarleman mc(fm);
  const CgoMode cmode = cfg.mode == "global" ? CgoMode::Global : CgoMode::Partial;
  const std::vector<double> lams = cfg.lambdas();
  const int nlam = int(lams.size());

  ParallelFamily family = ParallelFamily::uniform(cfg.n_angles, cfg.n_offsets, true);
  const int na = cfg.n_angles, no = cfg.n_offsets;
  const int nchords = na * no;

  // Chords and their polar charts are lambda- and tau-independent.
  std::vector<Geodesic> chords(nchords);
  std::vector<PolarChart> charts(nchords);
  std::vector<std::uint8_t> active(nchords, 1);
  BoundaryDecomposition dec0 =
      classify_boundary(grid, cfg.tau_ladder.front(), cfg.delta, cfg.manifold.gamma_i);
  parallel_for(nchords, [&](int c) {
    chords[c] = make_chord(grid, family.offsets[c % no], family.angles[c / no]);
    charts[c] = build_polar_chart(grid, chords[c], cfg.epsilon);
    if (cmode == CgoMode::Partial) {
      Bump bump{charts[c].theta0, cfg.bump_width};
      if (!bump_fits_E(grid, charts[c], bump, dec0.accessible_arc)) active[c] = 0;
    }
    if (cfg.mode == "local" && !chord_in_disk(chords[c], Vec2(cfg.o_cx, cfg.o_cy), cfg.o_radius))
      active[c] = 0;
  });
  double max_eik = 0.0;
  for (const auto& ch : charts) max_eik = std::max(max_eik, ch.max_eikonal_error);
  report.max_eikonal_error = max_eik;

  const double bump_mass = Bump{0.0, cfg.bump_width}.mass();
  const int ntau = int(cfg.tau_ladder.size());

  // pairings[t][k][c]
  std::vector<std::vector<VecXc>> pairings(ntau, std::vector<VecXc>(nlam, VecXc::Zero(nchords)));
  report.bie_condition.assign(ntau, 0.0);
  report.r0_norms.assign(ntau, 0.0);

  for (int ti = 0; ti < ntau; ++ti) {
    const double tau = cfg.tau_ladder[ti];
    BoundaryDecomposition dec_p = classify_boundary(grid, tau, cfg.delta, cfg.manifold.gamma_i);
    BoundaryDecomposition dec_m = classify_boundary(grid, -tau, cfg.delta, cfg.manifold.gamma_i);
    auto ops_p = mc.ops(tau);
    auto ops_m = mc.ops(-tau);

    std::optional<BoundaryIntegralOperator> bie;
    double gnorm = 0.0;
    if (oracle_q) {
      gnorm = mc.op_norm_G(*ops_p);
    } else {
      SingleLayer sl = assemble_single_layer(mc, *ops_p);
      bie.emplace(assemble_bie(fm, sl, dtn_q, dtn_0));
      report.bie_condition[ti] = bie->condition;
    }

    // Masked DtN difference for the pairing (data entries only).
    std::vector<int> rws, cls;
    for (int b = 0; b < fm.num_boundary(); ++b) {
      if (dtn_q.rows_mask[b]) rws.push_back(b);
      if (dtn_q.cols_mask[b]) cls.push_back(b);
    }
    MatXc diff(rws.size(), cls.size());
    for (size_t r = 0; r < rws.size(); ++r)
      for (size_t c = 0; c < cls.size(); ++c)
        diff(r, c) = dtn_q.lambda(rws[r], cls[c]) - dtn_0.lambda(rws[r], cls[c]);

    std::vector<double> r0_samples(nchords * nlam, 0.0);
    parallel_for(nchords * nlam, [&](int idx) {
      const int c = idx / nlam, k = idx % nlam;
      if (!active[c]) return;
      Bump bump{charts[c].theta0, cfg.bump_width};
      CgoBundle b1 = build_cgo_harmonic(mc, dec_p, charts[c], tau, lams[k], bump, cmode);
      CgoBundle b2 = build_cgo_harmonic(mc, dec_m, charts[c], -tau, lams[k], bump, cmode);
      r0_samples[idx] = b1.r0_norm;
      VecXc tr_u2 = fm.trace(conjugate_partner_u2(b2));
      VecXc tr_u1;
      if (oracle_q) {
        build_cgo_schrodinger(mc, *ops_p, *oracle_q, gnorm, b1);
        tr_u1 = fm.trace(b1.u);
      } else {
        tr_u1 = solve_bie(*bie, fm.trace(b1.u0));
      }
      // <(Lq-L0) tr u1, tr u2> over the data block
      cplx acc = 0.0;
      for (size_t r = 0; r < rws.size(); ++r) {
        if (tr_u2[rws[r]] == 0.0) continue;
        cplx w = 0.0;
        for (size_t cc = 0; cc < cls.size(); ++cc) {
          const cplx v = tr_u1[cls[cc]];
          if (v != 0.0) w += diff(r, cc) * v;
        }
        acc += grid.surface_weight(rws[r]) * w * std::conj(tr_u2[rws[r]]);
      }
      pairings[ti][k][c] = acc;
    });
    double r0max = 0.0;
    for (double v : r0_samples) r0max = std::max(r0max, v);
    report.r0_norms[ti] = r0max;
  }

  // Richardson in 1/tau, chart-offset correction, bump deconvolution.
  std::vector<MatXc> Dmat(nlam, MatXc::Zero(na, no));
  std::vector<MatXd> Dres(nlam, MatXd::Zero(na, no));
  double res_acc = 0.0, dmax = 0.0;
  int res_n = 0;
  for (int k = 0; k < nlam; ++k)
    for (int c = 0; c < nchords; ++c) {
      if (!active[c]) continue;
      std::vector<std::pair<double, cplx>> pts;
      for (int ti = 0; ti < ntau; ++ti) pts.emplace_back(cfg.tau_ladder[ti], pairings[ti][k][c]);
      ExtractionResult er =
          extract_transform_sample(pts, lams[k], cfg.epsilon, bump_mass, cfg.richardson_order);
      Dmat[k](c / no, c % no) = er.value;
      Dres[k](c / no, c % no) = er.residual;
      dmax = std::max(dmax, std::abs(er.value));
      res_acc += er.residual;
      ++res_n;
    }
  report.mean_extraction_residual = res_n ? res_acc / res_n : 0.0;

  // Successive extrapolants must agree within the configured tolerance for
  // the bulk of the family.
  if (cfg.tau_ladder.size() >= 3 && res_n > 0) {
    int unstable = 0;
    for (int k = 0; k < nlam; ++k)
      for (int c = 0; c < nchords; ++c) {
        if (!active[c]) continue;
        const double ref = std::abs(Dmat[k](c / no, c % no)) + 0.02 * dmax + 1e-300;
        if (Dres[k](c / no, c % no) > cfg.extrapolation_tol * ref) ++unstable;
      }
    if (unstable > res_n / 2)
      throw ExtrapolationUnstable(std::to_string(unstable) + " of " + std::to_string(res_n) +
                                  " samples exceed the extrapolation tolerance; raise tau");
  }

  if (samples_out) {
    samples_out->lambdas = lams;
    samples_out->family = family;
    samples_out->values = Dmat;
    samples_out->extrap_residuals = Dres;
    samples_out->provenance = "measured";
  }

  // Per-lambda exponential inversion, then the x1 Fourier synthesis.
  std::vector<double> mus;
  std::vector<VecXc> slices(nlam);
  for (int k = 0; k < nlam; ++k) mus.push_back(2.0 * lams[k]);
  parallel_for(nlam, [&](int k) { slices[k] = per_lambda_invert(grid, family, Dmat[k], lams[k]); });
  VecXc q_rec = fourier_synthesize_slices(grid, mus, slices);

  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return q_rec;
}

ReconstructionReport run_reconstruction(const RunConfig& cfg, const fs::path& dtn_dir,
                                        const fs::path& out_dir, bool emit_plots,
                                        const VecXc* oracle_q, VecXc* recon_out) {
  ManifoldGrid grid = build_manifold(cfg.manifold);
  ForwardModel fm(grid);

  nlohmann::json man = nlohmann::json::parse(read_text(dtn_dir / "manifest.json"));
  const std::string mtext = cfg.manifold.to_json_text();
  if (man["manifold_checksum"].get<std::uint64_t>() != fnv1a(mtext.data(), mtext.size()))
    throw ChecksumMismatch("DtN artifacts were produced for a different manifold config");

  PartialDtN dtn_q = read_dtn(dtn_dir, "lambda_q", grid.num_boundary());
  PartialDtN dtn_0 = read_dtn(dtn_dir, "lambda_0", grid.num_boundary());

  ReconstructionReport report;
  TransformSamples samples;
  VecXc q_rec = reconstruct_in_memory(cfg, grid, fm, dtn_q, dtn_0, report, oracle_q, &samples);
  report.max_abs_recon = q_rec.cwiseAbs().maxCoeff();

  fs::path qtrue_path = dtn_dir / "q_true.cald1";
  if (fs::exists(qtrue_path)) {
    VecXc q_true = read_field(qtrue_path, grid);
    report.rel_l2_error = rel_l2_error(fm, q_rec, q_true);
  }

  fs::create_directories(out_dir);
  write_field(out_dir / "q_rec.cald1", grid, q_rec);
  write_text(out_dir / "report.json", report.to_json_text());
  {
    std::vector<std::vector<double>> rows;
    const int no = int(samples.family.offsets.size());
    for (size_t k = 0; k < samples.lambdas.size(); ++k)
      for (int j = 0; j < int(samples.family.angles.size()); ++j)
        for (int i = 0; i < no; ++i)
          rows.push_back({samples.lambdas[k], double(j * no + i), samples.family.offsets[i],
                          samples.family.angles[j], samples.values[k](j, i).real(),
                          samples.values[k](j, i).imag(), samples.extrap_residuals[k](j, i)});
    write_csv(out_dir / "samples.csv",
              {"lambda", "geodesic_id", "offset_s", "angle_alpha", "re_D", "im_D",
               "tau_extrapolation_residual"},
              rows);
  }
  if (emit_plots) {
    const int imid = grid.n1() / 2;
    VecXc slice(grid.num_transversal());
    for (int t = 0; t < grid.num_transversal(); ++t)
      slice[t] = q_rec[imid * grid.num_transversal() + t];
    write_svg_heatmap(out_dir / "q_rec_mid.svg", grid, slice, "reconstructed q (mid slice)");
    if (fs::exists(qtrue_path)) {
      VecXc q_true = read_field(qtrue_path, grid);
      VecXc ts(grid.num_transversal()), es(grid.num_transversal());
      for (int t = 0; t < grid.num_transversal(); ++t) {
        ts[t] = q_true[imid * grid.num_transversal() + t];
        es[t] = q_rec[imid * grid.num_transversal() + t] - ts[t];
      }
      write_svg_heatmap(out_dir / "q_true_mid.svg", grid, ts, "true q (mid slice)");
      write_svg_heatmap(out_dir / "q_err_mid.svg", grid, es, "error (mid slice)");
    }
  }
  if (recon_out) *recon_out = q_rec;
  return report;
}

void SelftestReport::add(const std::string& name, double value, double threshold,
                         bool smaller_is_pass) {
  CheckResult r;
  r.name = name;
  r.value = value;
  r.threshold = threshold;
  r.pass = smaller_is_pass ? (value <= threshold) : (value >= threshold);
  checks.push_back(r);
  all_pass = all_pass && r.pass;
}

void SelftestReport::add_bound(const std::string& name, double value, double lo, double hi) {
  CheckResult r;
  r.name = name;
  r.value = value;
  r.threshold = hi;
  r.pass = value >= lo && value <= hi;
  checks.push_back(r);
  all_pass = all_pass && r.pass;
}

}  // namespace cald
