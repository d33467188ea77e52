// extremal-spectra: spectra of rotationally symmetric annuli and numerical
// certificates for conformally extremal metrics. One JSON config per job;
// reports are byte-deterministic for identical configs.

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "../src/cli/commands.hpp"
#include "exs/errors.hpp"

namespace {

int resolve_threads(int flag_value, bool flag_given) {
  int n = flag_value;
  if (!flag_given) {
    if (const char* env = std::getenv("EXTREMAL_SPECTRA_THREADS")) {
      char* end = nullptr;
      const long v = std::strtol(env, &end, 10);
      if (end && *end == '\0' && v >= 0) n = static_cast<int>(v);
    }
  }
  if (n == 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return n > 0 ? n : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Laplace-Beltrami spectra and extremality certificates on annuli of revolution"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  bool threads_given = false;
  app.add_option("--config", config_path, "job configuration (JSON)")->required();
  app.add_option("--out", out_dir, "output directory for reports");
  app.add_option("--threads", threads, "worker threads (0 = auto)")
      ->each([&](const std::string&) { threads_given = true; });

  app.add_subcommand("unduloid-info", "derived parameters, curvature zeros, profile CSV");
  app.add_subcommand("spectrum", "merged Fourier-mode spectrum as JSON");
  app.add_subcommand("verify-extremal", "spectrum, certificate, condition checks, scans");
  app.add_subcommand("derivative-check", "eigenvalue derivative formula vs finite differences");
  app.add_subcommand("certificate", "PSD least-squares certificate only");
  app.add_subcommand("export-profile", "profile samples as CSV");
  app.add_subcommand("export-eigenfunction", "radial eigenfunction as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  exs::cli::RunOptions run;
  run.out_dir = out_dir;
  run.threads = resolve_threads(threads, threads_given);

  try {
    const auto cfg = exs::cli::parse_config_file(config_path);
    const std::string cmd = app.get_subcommands().front()->get_name();
    int rc = 1;
    if (cmd == "unduloid-info") rc = exs::cli::cmd_unduloid_info(cfg, run);
    else if (cmd == "spectrum") rc = exs::cli::cmd_spectrum(cfg, run);
    else if (cmd == "verify-extremal") rc = exs::cli::cmd_verify_extremal(cfg, run);
    else if (cmd == "derivative-check") rc = exs::cli::cmd_derivative_check(cfg, run);
    else if (cmd == "certificate") rc = exs::cli::cmd_certificate(cfg, run);
    else if (cmd == "export-profile") rc = exs::cli::cmd_export_profile(cfg, run);
    else if (cmd == "export-eigenfunction") rc = exs::cli::cmd_export_eigenfunction(cfg, run);
    return rc;
  } catch (const exs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exs::cli::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
