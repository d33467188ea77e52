#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "exs/errors.hpp"
#include "exs/extremal.hpp"
#include "exs/jsonw.hpp"

namespace exs::cli {

namespace {

namespace fs = std::filesystem;
using jsonw::Value;
using spectral::Spectrum;

void write_text(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::internal, "cannot write " + path);
  out << text;
}

std::string report_path(const RunOptions& run, const std::string& name) {
  return (fs::path(run.out_dir) / (name + ".json")).string();
}

std::string csv_path(const RunOptions& run, const std::string& name) {
  return (fs::path(run.out_dir) / (name + ".csv")).string();
}

Value report_shell(const std::string& command, const JobConfig& cfg) {
  auto root = Value::object();
  root.set("command", command);
  root.set("config", echo_config(cfg));
  return root;
}

Value spectrum_json(const JobConfig& cfg, const JobDomain& jd, const Spectrum& spec) {
  auto s = Value::object();
  {
    auto d = Value::object();
    d.set("surface", cfg.surface_kind);
    d.set("v_a", jd.resolved_v_a);
    d.set("v_b", jd.resolved_v_b);
    d.set("conformal_weight", cfg.conformal_weight);
    d.set("neumann_compatible", jd.domain.neumann_compatible);
    s.set("domain", std::move(d));
  }
  s.set("bc", cfg.bc);
  s.set("mesh_size", cfg.mesh_n);
  {
    auto entries = Value::array();
    for (const auto& e : spec.entries) {
      auto one = Value::object();
      one.set("value", e.value);
      one.set("m", e.m);
      one.set("parity", spectral::parity_name(e.parity));
      one.set("index_in_block", e.index_in_block);
      entries.push(std::move(one));
    }
    s.set("entries", std::move(entries));
  }
  {
    auto clusters = Value::array();
    for (const auto& [lo, hi] : spec.clusters) {
      auto range = Value::array();
      range.push(Value::integer(lo));
      range.push(Value::integer(hi));
      clusters.push(std::move(range));
    }
    s.set("clusters", std::move(clusters));
  }
  s.set("volume", spec.volume);
  s.set("m_max_used", spec.m_max_used);
  s.set("complete", spec.complete);
  return s;
}

spectral::SpectrumOptions spectrum_options(const JobConfig& cfg, const RunOptions& run,
                                           bool allow_incomplete = false) {
  spectral::SpectrumOptions opt;
  opt.threads = run.threads;
  opt.m_max_cap = cfg.m_max;
  opt.allow_incomplete = allow_incomplete;
  return opt;
}

// Cluster selection for certificate-style commands: by nearest cluster value
// when given, else the cluster containing the k-th eigenvalue (mu_k counts
// from the zero mode, lambda_k from the first Dirichlet value).
int select_cluster(const Spectrum& spec, const JobConfig& cfg) {
  if (cfg.cluster_value) return spec.nearest_cluster(*cfg.cluster_value);
  const int idx = extremal::entry_index(spec.bc, cfg.cert_k);
  if (idx >= static_cast<int>(spec.entries.size()))
    fail(errc::config, "certificate.k beyond the computed spectrum");
  for (size_t c = 0; c < spec.clusters.size(); ++c)
    if (idx >= spec.clusters[c].first && idx <= spec.clusters[c].second)
      return static_cast<int>(c);
  fail(errc::internal, "cluster bookkeeping lost an entry");
}

double cluster_mean(const Spectrum& spec, int c) {
  const auto [lo, hi] = spec.clusters[c];
  double mean = 0.0;
  for (int i = lo; i <= hi; ++i) mean += spec.entries[i].value;
  return mean / (hi - lo + 1);
}

extremal::ConformalPerturbation make_psi(const FuncDesc& f, const revolution::AnnulusDomain& dom,
                                         const spectral::Mesh1D& mesh) {
  using extremal::ConformalPerturbation;
  if (f.kind == "zero")
    return ConformalPerturbation::from_function([](double) { return 0.0; }, true, dom, mesh);
  if (f.kind == "constant") return ConformalPerturbation::constant(f.value, mesh);
  if (f.kind == "cos_mode") {
    const double va = dom.v_a, len = dom.length();
    const double amp = f.amplitude;
    const int j = f.j;
    return ConformalPerturbation::from_function(
        [va, len, amp, j](double v) { return amp * std::cos(j * M_PI * (v - va) / len); },
        f.mean_zero, dom, mesh);
  }
  if (f.kind == "seeded") return ConformalPerturbation::seeded(0xE16, f.index, dom, mesh);
  fail(errc::config, "unsupported conformal perturbation kind \"" + f.kind + "\"");
}

std::function<double(double)> make_h_component(const FuncDesc& f,
                                               const revolution::AnnulusDomain& dom) {
  if (f.kind == "zero") return [](double) { return 0.0; };
  if (f.kind == "constant") {
    const double c = f.value;
    return [c](double) { return c; };
  }
  if (f.kind == "coordinate") {
    const double a = f.amplitude;
    return [a](double v) { return a * v; };
  }
  if (f.kind == "cos_mode") {
    const double va = dom.v_a, len = dom.length(), amp = f.amplitude;
    const int j = f.j;
    return [va, len, amp, j](double v) { return amp * std::cos(j * M_PI * (v - va) / len); };
  }
  const auto metric = extremal::TensorPerturbation::metric(dom);
  if (f.kind == "metric_uu") return metric.h_uu;
  if (f.kind == "metric_vv") return metric.h_vv;
  fail(errc::config, "unsupported tensor perturbation kind \"" + f.kind + "\"");
}

void write_profile_csv(const std::string& path, const JobDomain& jd, double lo, double hi,
                       int samples) {
  std::string csv = "v,x,z,k1,k2,rho,n_rad,n_axial\n";
  for (int i = 0; i < samples; ++i) {
    const double v = lo + (hi - lo) * i / (samples - 1);
    const auto p = jd.domain.profile(v);
    const double z = jd.surface ? jd.surface->height(v) : v;
    csv += jsonw::fmt(v) + "," + jsonw::fmt(p.x) + "," + jsonw::fmt(z) + "," + jsonw::fmt(p.k1) +
           "," + jsonw::fmt(p.k2) + "," + jsonw::fmt(p.rho) + "," + jsonw::fmt(p.n_rad) + "," +
           jsonw::fmt(p.n_axial) + "\n";
  }
  write_text(path, csv);
}

Value certificate_json(const extremal::CertificateResult& cert) {
  auto c = Value::object();
  c.set("status", extremal::status_name(cert.status));
  c.set("d", cert.d);
  c.set("residual", cert.residual);
  c.set("raw_residual", cert.raw_residual);
  c.set("lower_bound", cert.lower_bound);
  c.set("certify_tol", cert.certify_tol);
  c.set("refute_tol", cert.refute_tol);
  c.set("iterations", static_cast<long long>(cert.iterations));
  c.set("s_min_eigenvalue", cert.s_min_eigenvalue);
  auto s = Value::array();
  for (int i = 0; i < cert.d; ++i) {
    auto row = Value::array();
    for (int j = 0; j < cert.d; ++j) row.push(cert.S[static_cast<size_t>(i) * cert.d + j]);
    s.push(std::move(row));
  }
  c.set("S", std::move(s));
  return c;
}

Value scan_json(const extremal::ScanReport& scan) {
  auto s = Value::object();
  auto tg = Value::array();
  for (double t : scan.t_grid) tg.push(t);
  s.set("t_grid", std::move(tg));
  auto vals = Value::array();
  for (double v : scan.values) vals.push(v);
  s.set("values", std::move(vals));
  s.set("slope_plus", scan.slope_plus);
  s.set("slope_minus", scan.slope_minus);
  s.set("quad_plus", scan.quad_plus);
  s.set("quad_minus", scan.quad_minus);
  s.set("tol_slope", scan.tol_slope);
  s.set("pattern", scan.pattern == extremal::ScanPattern::max_type
                       ? "max"
                       : (scan.pattern == extremal::ScanPattern::min_type ? "min"
                                                                          : "indeterminate"));
  s.set("consistent_with_max", scan.consistent_with_max);
  return s;
}

}  // namespace

int cmd_unduloid_info(const JobConfig& cfg, const RunOptions& run) {
  if (cfg.surface_kind != "unduloid")
    fail(errc::config, "unduloid-info needs surface.kind = \"unduloid\"");
  revolution::UnduloidSurface surf(cfg.alpha, cfg.gamma);
  const double lo = cfg.window ? cfg.window->first : 0.0;
  const double hi = cfg.window ? cfg.window->second : 2.0 * surf.period();
  const auto zeros = lo < hi ? surf.curvature_zeros(lo, hi) : std::vector<double>{};

  auto root = report_shell("unduloid-info", cfg);
  auto res = Value::object();
  res.set("alpha", surf.alpha());
  res.set("gamma", surf.gamma());
  res.set("mu", surf.mu());
  res.set("kappa2", surf.kappa2());
  res.set("beta", surf.beta());
  res.set("delta", surf.delta());
  res.set("period", surf.period());
  auto zj = Value::array();
  for (double z : zeros) zj.push(z);
  res.set("curvature_zeros", std::move(zj));
  res.set("window_lo", lo);
  res.set("window_hi", hi);
  res.set("profile_csv", "profile.csv");
  root.set("results", std::move(res));

  if (lo < hi) {
    JobDomain jd;
    jd.surface = surf;
    jd.domain.profile = [surf](double v) { return surf.sample(v); };
    write_profile_csv(csv_path(run, "profile"), jd, lo, hi, cfg.samples);
  }
  write_text(report_path(run, "unduloid_info"), root.dump());
  return 0;
}

int cmd_spectrum(const JobConfig& cfg, const RunOptions& run) {
  const auto jd = build_domain(cfg);
  const auto spec =
      spectral::spectrum(jd.domain, jd.mesh, cfg.count, spectrum_options(cfg, run, true));

  auto root = report_shell("spectrum", cfg);
  root.set("spectrum", spectrum_json(cfg, jd, spec));
  if (cfg.target) {
    const int c = spec.nearest_cluster(*cfg.target);
    auto t = Value::object();
    t.set("target", *cfg.target);
    t.set("cluster_index", c);
    auto range = Value::array();
    range.push(Value::integer(spec.clusters[c].first));
    range.push(Value::integer(spec.clusters[c].second));
    t.set("range", std::move(range));
    t.set("size", spec.clusters[c].second - spec.clusters[c].first + 1);
    t.set("mean", cluster_mean(spec, c));
    root.set("target_cluster", std::move(t));
  }
  if (!spec.complete) root.set("warning", spec.warning);
  write_text(report_path(run, "spectrum"), root.dump());
  return spec.complete ? 0 : 3;
}

int cmd_verify_extremal(const JobConfig& cfg, const RunOptions& run) {
  const auto jd = build_domain(cfg);
  const auto opts = spectrum_options(cfg, run);
  const int need = std::max(cfg.count, extremal::entry_index(jd.domain.bc, cfg.cert_k) + 4);
  const auto spec = spectral::spectrum(jd.domain, jd.mesh, need, opts);

  const int c = select_cluster(spec, cfg);
  const auto [lo, hi] = spec.clusters[c];
  const double mu = cluster_mean(spec, c);
  std::vector<spectral::EigenPair> cluster(spec.entries.begin() + lo,
                                           spec.entries.begin() + hi + 1);

  extremal::CertificateOptions copt;
  copt.max_iterations = cfg.max_iterations;
  const auto cert = extremal::extremal_certificate(cluster, jd.domain, jd.mesh, mu, copt);
  const auto conds = extremal::verify_conditions(cert.recovered, jd.domain, jd.mesh, mu);

  auto root = report_shell("verify-extremal", cfg);
  auto res = Value::object();
  res.set("cluster_index", c);
  auto range = Value::array();
  range.push(Value::integer(lo));
  range.push(Value::integer(hi));
  res.set("cluster_range", std::move(range));
  res.set("mu", mu);
  res.set("k_reported", jd.domain.bc == revolution::BoundaryCondition::neumann ? lo : lo + 1);
  res.set("normalized_eigenvalue", mu * spec.volume);
  res.set("certificate", certificate_json(cert));
  {
    auto cd = Value::object();
    cd.set("sup_defect_density", conds.sup_defect_density);
    cd.set("sup_defect_energy", conds.sup_defect_energy);
    auto tv = Value::array();
    for (double t : conds.trace_values) tv.push(t);
    cd.set("trace_values", std::move(tv));
    auto tb = Value::array();
    for (double t : conds.trace_bounds) tb.push(t);
    cd.set("trace_bounds", std::move(tb));
    cd.set("trace_ok", conds.trace_ok());
    res.set("conditions", std::move(cd));
  }
  {
    auto scans = Value::array();
    for (int i = 0; i < cfg.scan_n_psi; ++i) {
      const auto psi = extremal::ConformalPerturbation::seeded(0xE16, i, jd.domain, jd.mesh);
      const auto scan =
          extremal::extremality_scan(jd.domain, jd.mesh, cfg.cert_k, psi, cfg.t_grid, opts);
      auto s = scan_json(scan);
      s.set("psi_index", i);
      scans.push(std::move(s));
    }
    res.set("scans", std::move(scans));
  }
  res.set("status", extremal::status_name(cert.status));
  root.set("results", std::move(res));
  write_text(report_path(run, "verify_extremal"), root.dump());
  return cert.status == extremal::CertificateStatus::inconclusive ? 4 : 0;
}

int cmd_derivative_check(const JobConfig& cfg, const RunOptions& run) {
  const auto jd = build_domain(cfg);
  const auto opts = spectrum_options(cfg, run);
  extremal::DerivativeCheckReport rep;
  if (cfg.check_kind == "conformal") {
    const auto psi = make_psi(cfg.psi, jd.domain, jd.mesh);
    rep = extremal::conformal_derivative_check(jd.domain, jd.mesh, cfg.check_k, psi, cfg.steps,
                                               opts);
  } else {
    extremal::TensorPerturbation h{make_h_component(cfg.h_uu, jd.domain),
                                   make_h_component(cfg.h_vv, jd.domain)};
    rep = extremal::tensor_derivative_check(jd.domain, jd.mesh, cfg.check_k, h, cfg.steps, opts);
  }

  auto root = report_shell("derivative-check", cfg);
  auto res = Value::object();
  res.set("kind", cfg.check_kind);
  res.set("k", rep.k);
  res.set("m", rep.m);
  res.set("parity", spectral::parity_name(rep.parity));
  res.set("index_in_block", rep.index_in_block);
  res.set("lambda0", rep.lambda0);
  res.set("formula", rep.formula);
  auto steps = Value::array();
  for (double s : rep.steps) steps.push(s);
  res.set("steps", std::move(steps));
  auto fd = Value::array();
  for (double f : rep.fd) fd.push(f);
  res.set("fd", std::move(fd));
  auto re = Value::array();
  for (double r : rep.rel_err) re.push(r);
  res.set("rel_err", std::move(re));
  res.set("richardson", rep.richardson);
  res.set("richardson_rel_err", rep.richardson_rel_err);
  root.set("results", std::move(res));
  write_text(report_path(run, "derivative_check"), root.dump());
  return 0;
}

int cmd_certificate(const JobConfig& cfg, const RunOptions& run) {
  const auto jd = build_domain(cfg);
  const auto opts = spectrum_options(cfg, run);
  const int need = std::max(cfg.count, extremal::entry_index(jd.domain.bc, cfg.cert_k) + 4);
  const auto spec = spectral::spectrum(jd.domain, jd.mesh, need, opts);
  const int c = select_cluster(spec, cfg);
  const auto [lo, hi] = spec.clusters[c];
  const double mu = cluster_mean(spec, c);
  std::vector<spectral::EigenPair> cluster(spec.entries.begin() + lo,
                                           spec.entries.begin() + hi + 1);
  extremal::CertificateOptions copt;
  copt.max_iterations = cfg.max_iterations;
  const auto cert = cfg.cert_mode == "extremal"
                        ? extremal::extremal_certificate(cluster, jd.domain, jd.mesh, mu, copt)
                        : extremal::global_feasibility_residual(cluster, jd.domain, jd.mesh, mu,
                                                                copt);

  auto root = report_shell("certificate", cfg);
  auto res = Value::object();
  res.set("mode", cfg.cert_mode);
  res.set("cluster_index", c);
  res.set("mu", mu);
  res.set("certificate", certificate_json(cert));
  root.set("results", std::move(res));
  write_text(report_path(run, "certificate"), root.dump());
  return cert.status == extremal::CertificateStatus::inconclusive ? 4 : 0;
}

int cmd_export_profile(const JobConfig& cfg, const RunOptions& run) {
  const auto jd = build_domain(cfg);
  const double lo = cfg.window ? cfg.window->first : jd.resolved_v_a;
  const double hi = cfg.window ? cfg.window->second : jd.resolved_v_b;
  if (!(lo < hi)) fail(errc::config, "export window must satisfy lo < hi");
  write_profile_csv(csv_path(run, "profile"), jd, lo, hi, cfg.samples);

  auto root = report_shell("export-profile", cfg);
  auto res = Value::object();
  res.set("profile_csv", "profile.csv");
  res.set("samples", cfg.samples);
  res.set("window_lo", lo);
  res.set("window_hi", hi);
  root.set("results", std::move(res));
  write_text(report_path(run, "export_profile"), root.dump());
  return 0;
}

int cmd_export_eigenfunction(const JobConfig& cfg, const RunOptions& run) {
  const auto jd = build_domain(cfg);
  const int idx = extremal::entry_index(jd.domain.bc, cfg.export_k);
  const auto spec = spectral::spectrum(jd.domain, jd.mesh, idx + 1, spectrum_options(cfg, run));
  const auto& pair = spec.entries[idx];

  std::string csv = "v,a\n";
  for (size_t i = 0; i < jd.mesh.nodes.size(); ++i)
    csv += jsonw::fmt(jd.mesh.nodes[i]) + "," + jsonw::fmt(pair.coeffs[i]) + "\n";
  write_text(csv_path(run, "eigenfunction"), csv);

  auto root = report_shell("export-eigenfunction", cfg);
  auto res = Value::object();
  res.set("eigenfunction_csv", "eigenfunction.csv");
  res.set("k", cfg.export_k);
  res.set("value", pair.value);
  res.set("m", pair.m);
  res.set("parity", spectral::parity_name(pair.parity));
  root.set("results", std::move(res));
  write_text(report_path(run, "export_eigenfunction"), root.dump());
  return 0;
}

int exit_code_for(const Error& err) {
  switch (err.code()) {
    case errc::config:
    case errc::domain:
    case errc::degenerate_surface:
    case errc::divergence:
    case errc::precondition:
    case errc::insufficient_mesh:
      return 2;
    case errc::incomplete_spectrum:
      return 3;
    default:
      return 1;
  }
}

}  // namespace exs::cli
