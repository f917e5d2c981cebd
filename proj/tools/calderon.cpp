#include <cstdio>
#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "calderon/io.hpp"
#include "calderon/probes.hpp"

using namespace cald;

namespace {

int guarded(int (*fn)(const std::string&, const std::string&, const std::string&, bool),
            const std::string& a, const std::string& b, const std::string& c, bool flag) {
  try {
    return fn(a, b, c, flag);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return int(e.error_class());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

int do_forward(const std::string& config, const std::string& out, const std::string&, bool) {
  RunConfig cfg = RunConfig::from_json_file(config);
  run_forward(cfg, out);
  std::cout << "forward data written to " << out << "\n";
  return 0;
}

int do_reconstruct(const std::string& config, const std::string& dtn, const std::string& out,
                   bool plots) {
  RunConfig cfg = RunConfig::from_json_file(config);
  ReconstructionReport rep = run_reconstruction(cfg, dtn, out, plots);
  std::cout << rep.to_json_text() << "\n";
  return 0;
}

int do_selftest(const std::string& config, const std::string& out, const std::string&, bool quick) {
  RunConfig cfg = config.empty() ? reference_config() : RunConfig::from_json_file(config);
  std::filesystem::path out_dir = out.empty() ? std::filesystem::path("selftest_out")
                                              : std::filesystem::path(out);
  SelftestReport rep = run_selftest(cfg, quick, &out_dir);
  for (const auto& c : rep.checks) {
    std::printf("[%s] %-48s value %.6e  threshold %.6e%s\n", c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.value, c.threshold,
                c.expected_failure ? "  (expected-failure probe)" : "");
  }
  std::printf("%s (%zu checks)\n", rep.all_pass ? "ALL PASS" : "FAILURES PRESENT",
              rep.checks.size());
  return rep.all_pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"calderon: partial-data reconstruction laboratory on the cylinder"};
  app.require_subcommand(1);

  std::string config, out = "out", dtn;
  bool plots = false, quick = false;

  auto* fwd = app.add_subcommand("forward", "solve the forward problem and store DtN data");
  fwd->add_option("--config", config, "run config JSON")->required();
  fwd->add_option("--out", out, "output directory");

  auto* rec = app.add_subcommand("reconstruct", "reconstruct q from stored DtN data");
  rec->add_option("--config", config, "run config JSON")->required();
  rec->add_option("--dtn", dtn, "directory with DtN artifacts")->required();
  rec->add_option("--out", out, "output directory");
  rec->add_flag("--emit-plots", plots, "write SVG heatmaps");

  auto* st = app.add_subcommand("selftest", "run the invariant suites");
  st->add_option("--config", config, "run config JSON (defaults to the reference config)");
  st->add_option("--out", out, "output directory for CSV reports");
  st->add_flag("--quick", quick, "reduced grids and ladders");

  CLI11_PARSE(app, argc, argv);

  if (fwd->parsed()) return guarded(do_forward, config, out, "", false);
  if (rec->parsed()) return guarded(do_reconstruct, config, dtn, out, plots);
  return guarded(do_selftest, config, out, "", quick);
}
