#pragma once

#include <string>

#include "config.hpp"
#include "exs/errors.hpp"

namespace exs::cli {

struct RunOptions {
  std::string out_dir = ".";
  int threads = 1;
};

// Exit codes: 0 success, 2 config error, 3 incomplete spectrum,
// 4 inconclusive certificate, 1 internal error.
int cmd_unduloid_info(const JobConfig& cfg, const RunOptions& run);
int cmd_spectrum(const JobConfig& cfg, const RunOptions& run);
int cmd_verify_extremal(const JobConfig& cfg, const RunOptions& run);
int cmd_derivative_check(const JobConfig& cfg, const RunOptions& run);
int cmd_certificate(const JobConfig& cfg, const RunOptions& run);
int cmd_export_profile(const JobConfig& cfg, const RunOptions& run);
int cmd_export_eigenfunction(const JobConfig& cfg, const RunOptions& run);

// Shared by main(): maps a thrown exs::Error to the documented exit code.
int exit_code_for(const exs::Error& err);

}  // namespace exs::cli
