#pragma once

#include <optional>
#include <string>
#include <vector>

#include "exs/jsonw.hpp"
#include "exs/revolution.hpp"
#include "exs/spectral.hpp"

namespace exs::cli {

// One JSON document per job; every field has an explicit default and the
// resolved configuration is echoed verbatim into each report.

struct FuncDesc {
  std::string kind = "zero";  // zero|constant|cos_mode|coordinate|seeded|metric_uu|metric_vv
  double value = 0.0;         // constant
  int j = 1;                  // cos_mode frequency
  double amplitude = 1.0;     // cos_mode / coordinate scale
  bool mean_zero = true;      // cos_mode (conformal use only)
  int index = 0;              // seeded
};

struct JobConfig {
  // surface
  std::string surface_kind = "unduloid";
  double alpha = 0.8;
  double gamma = 2.4;
  double flat_length = 2.0;

  // domain
  bool has_auto_zeros = false;
  int auto_zero_a = 0;
  int auto_zero_b = 1;
  bool has_bounds = false;
  double v_a = 0.0;
  double v_b = 1.0;

  std::string bc = "neumann";
  std::string conformal_weight = "gauss";
  int mesh_n = 256;

  // spectrum
  int count = 8;
  int m_max = 64;
  std::optional<double> target;

  // check
  std::string check_kind = "conformal";
  int check_k = 1;
  std::vector<double> steps = {1e-3, 5e-4};
  FuncDesc psi{"seeded", 0.0, 1, 1.0, true, 0};
  FuncDesc h_uu;
  FuncDesc h_vv;

  // certificate
  int cert_k = 1;
  std::optional<double> cluster_value;
  long max_iterations = 100000;
  std::string cert_mode = "extremal";

  // scan
  std::vector<double> t_grid = {-2e-2, -1e-2, -5e-3, 5e-3, 1e-2, 2e-2};
  int scan_n_psi = 3;

  // export / info
  int samples = 257;
  int export_k = 1;
  std::optional<std::pair<double, double>> window;
};

JobConfig parse_config_file(const std::string& path);
JobConfig parse_config_text(const std::string& text);

jsonw::Value echo_config(const JobConfig& cfg);

// Resolved geometry for a job.
struct JobDomain {
  revolution::AnnulusDomain domain;
  spectral::Mesh1D mesh;
  std::optional<revolution::UnduloidSurface> surface;  // set for unduloid jobs
  double resolved_v_a = 0.0;
  double resolved_v_b = 0.0;
};

JobDomain build_domain(const JobConfig& cfg);

}  // namespace exs::cli
