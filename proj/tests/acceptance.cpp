// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "exs/elliptic.hpp"
#include "exs/extremal.hpp"
#include "support/convergence.hpp"
#include "support/exhaustion.hpp"
#include "support/quadrature.hpp"

namespace sp = exs::spectral;
namespace rv = exs::revolution;
namespace ex = exs::extremal;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Refutation lower bounds frozen from the grid-exhaustion oracle
// (tests/support/exhaustion.hpp) run ahead of the build:
//   dirichlet_residual_bound() -> 0.577292531276
//   global_residual_bound()    -> 0.632455532034
constexpr double kFrozenDirichletBound = 0.577292531276;
constexpr double kFrozenGlobalBound = 0.632455532034;

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

std::vector<double> flat_exact(rv::BoundaryCondition bc, double length, int count) {
  std::vector<double> vals;
  for (int m = 0; m <= 16; ++m)
    for (int j = bc == rv::BoundaryCondition::neumann ? 0 : 1; j <= 40; ++j) {
      const double v = m * m + std::pow(j * kPi / length, 2);
      vals.push_back(v);
      if (m >= 1) vals.push_back(v);
    }
  std::sort(vals.begin(), vals.end());
  vals.resize(count);
  return vals;
}

rv::AnnulusDomain flat_domain(rv::BoundaryCondition bc) {
  return rv::make_domain(rv::flat_profile(), 0.0, 2.0, bc);
}

struct UnduloidGeometry {
  rv::UnduloidSurface surf{0.8, 2.4};
  double v_a = 1.6 * (7.0 * kPi / 6.0);
  double v_b = 1.6 * (11.0 * kPi / 6.0);
  rv::AnnulusDomain domain;

  UnduloidGeometry() { domain = rv::make_domain(surf, v_a, v_b, rv::BoundaryCondition::neumann); }
};

// --------------------------------------------------------------------------

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_rel = 0.0;
  for (const auto bc : {rv::BoundaryCondition::neumann, rv::BoundaryCondition::dirichlet}) {
    const auto spec = sp::spectrum(flat_domain(bc), sp::Mesh1D::uniform(0.0, 2.0, 2048), 10);
    const auto exact = flat_exact(bc, 2.0, 10);
    for (int i = 0; i < 10; ++i) {
      if (exact[i] == 0.0) {
        if (std::fabs(spec.entries[i].value) > 1e-9) worst_rel = 1.0;
      } else {
        worst_rel = std::max(worst_rel,
                             std::fabs(spec.entries[i].value - exact[i]) / exact[i]);
      }
    }
  }

  bool orders_ok = true;
  double order_mean = 0.0;
  {
    std::vector<double> errs;
    for (int n : {64, 128, 256, 512}) {
      const auto spec =
          sp::spectrum(flat_domain(rv::BoundaryCondition::neumann), sp::Mesh1D::uniform(0.0, 2.0, n), 10);
      const auto exact = flat_exact(rv::BoundaryCondition::neumann, 2.0, 10);
      double worst = 0.0;
      for (int i = 1; i < 10; ++i)
        worst = std::max(worst, std::fabs(spec.entries[i].value - exact[i]) / exact[i]);
      errs.push_back(worst);
    }
    const auto orders = testsupport::observed_orders(errs);
    for (double o : orders) {
      order_mean += o / orders.size();
      if (std::fabs(o - 2.0) > 0.2) orders_ok = false;
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_rel <= 1e-6 && orders_ok && secs < 5.0;
  report(1, pass,
         "flat spectra: max rel err " + fmt(worst_rel) + " (tol 1e-6), order " +
             fmt(order_mean) + " (2.0 +/- 0.2), " + fmt(secs) + " s (< 5 s)");
}

void criterion_2() {
  const std::vector<double> k2s = {0.0, 0.1, 0.25, 0.4, 0.55, 0.7, 0.8, 8.0 / 9.0, 0.95, 0.99};
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const double phi = -3.3 + 6.6 * i / 9.0;
    for (double k2 : k2s) {
      const double of = testsupport::integrate(
          [k2](double t) { return 1.0 / std::sqrt(1.0 - k2 * std::sin(t) * std::sin(t)); }, 0.0,
          phi);
      const double oe = testsupport::integrate(
          [k2](double t) { return std::sqrt(1.0 - k2 * std::sin(t) * std::sin(t)); }, 0.0, phi);
      const double ef = exs::elliptic::ellint_f(phi, k2);
      const double ee = exs::elliptic::ellint_e(phi, k2);
      worst = std::max(worst, std::fabs(ef - of) / std::max(std::fabs(of), 1e-300));
      worst = std::max(worst, std::fabs(ee - oe) / std::max(std::fabs(oe), 1e-300));
    }
  }
  report(2, worst <= 1e-12,
         "elliptic integrals vs quadrature oracle on 100-point grid: max rel err " + fmt(worst) +
             " (tol 1e-12)");
}

void criterion_3() {
  double worst = 0.0;
  for (auto [a, g] : {std::pair{0.8, 2.4}, {0.5, 1.0}, {1.0, 5.0}}) {
    const auto s = rv::unduloid(a, g);
    const double target = 2.0 / (a + g);
    for (int i = 0; i < 1000; ++i) {
      const double v = -1.5 * s.period() + 3.0 * s.period() * i / 999.0;
      const auto p = s.sample(v);
      worst = std::max(worst, std::fabs(p.k1 + p.k2 - target));
    }
  }
  report(3, worst <= 1e-12,
         "CMC identity k1 + k2 = 2/(alpha+gamma) at 1000 samples x 3 surfaces: max defect " +
             fmt(worst) + " (tol 1e-12)");
}

void criterion_4() {
  const auto s = rv::unduloid(0.8, 2.4);
  const auto zeros = s.curvature_zeros(-5.0, 10.0);
  const std::vector<double> analytic = {1.6 * (-5.0 * kPi / 6.0), 1.6 * (-kPi / 6.0),
                                        1.6 * (7.0 * kPi / 6.0), 1.6 * (11.0 * kPi / 6.0)};
  const std::vector<double> rounded = {-4.22, -0.78, 5.81, 9.26};
  bool pass = zeros.size() == 4;
  double worst = 0.0, worst_fig = 0.0;
  if (pass)
    for (size_t i = 0; i < 4; ++i) {
      worst = std::max(worst, std::fabs(zeros[i] - analytic[i]));
      worst_fig = std::max(worst_fig, std::fabs(zeros[i] - rounded[i]));
    }
  pass = pass && worst <= 1e-10 && worst_fig <= 0.06;
  report(4, pass,
         "curvature zeros: analytic defect " + fmt(worst) + " (tol 1e-10), rounded-reference defect " +
             fmt(worst_fig) + " (tol 0.06)");
}

void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  UnduloidGeometry geo;

  // eigenvalue branches per mesh: (m=0, j=1) and (m=1, j=0)
  std::vector<double> m0_vals, m1_vals;
  for (int n : {256, 512, 1024, 2048}) {
    const auto spec = sp::spectrum(geo.domain, sp::Mesh1D::uniform(geo.v_a, geo.v_b, n), 6);
    double v0 = 0.0, v1 = 0.0;
    for (const auto& e : spec.entries) {
      if (e.m == 0 && e.index_in_block == 1) v0 = e.value;
      if (e.m == 1 && e.index_in_block == 0 && e.parity == sp::Parity::cos) v1 = e.value;
    }
    m0_vals.push_back(v0);
    m1_vals.push_back(v1);
  }
  const double lim0 = testsupport::richardson_limit(m0_vals);
  const double lim1 = testsupport::richardson_limit(m1_vals);

  bool orders_ok = true;
  double order_sum = 0.0;
  int order_count = 0;
  for (const auto& vals : {m0_vals, m1_vals}) {
    std::vector<double> errs;
    for (double v : vals) errs.push_back(std::fabs(v - 1.0));
    for (double o : testsupport::observed_orders(errs)) {
      order_sum += o;
      ++order_count;
      if (std::fabs(o - 2.0) > 0.3) orders_ok = false;
    }
  }

  // eigenfunction match at the finest mesh: m=0 against -x'/sqrt(G), m=1
  // against z'/sqrt(G), relative L2 error after projection
  const auto mesh = sp::Mesh1D::uniform(geo.v_a, geo.v_b, 2048);
  const auto spec = sp::spectrum(geo.domain, mesh, 6);
  double err_m0 = 1.0, err_m1 = 1.0;
  for (const auto& e : spec.entries) {
    const bool is_m0 = e.m == 0 && e.index_in_block == 1;
    const bool is_m1 = e.m == 1 && e.index_in_block == 0 && e.parity == sp::Parity::cos;
    if (!is_m0 && !is_m1) continue;
    std::vector<double> truth(mesh.nodes.size());
    for (size_t i = 0; i < truth.size(); ++i) {
      const auto p = geo.surf.sample(mesh.nodes[i]);
      truth[i] = is_m0 ? p.n_axial : p.n_rad;
    }
    const auto blk = sp::assemble_block(geo.domain, e.m, mesh);
    const double tt = blk.inner_mass(truth, truth);
    const double ta = blk.inner_mass(truth, e.coeffs);
    const double c = ta / tt;
    std::vector<double> diff(truth.size());
    for (size_t i = 0; i < truth.size(); ++i) diff[i] = e.coeffs[i] - c * truth[i];
    const double rel = std::sqrt(blk.inner_mass(diff, diff) / (c * c * tt));
    (is_m0 ? err_m0 : err_m1) = rel;
  }

  const double secs = seconds_since(t0);
  const bool pass = std::fabs(lim0 - 1.0) <= 1e-6 && std::fabs(lim1 - 1.0) <= 1e-6 &&
                    orders_ok && err_m0 <= 1e-3 && err_m1 <= 1e-3 && secs < 60.0;
  report(5, pass,
         "Gauss-map eigenvalue: extrapolated defects " + fmt(std::fabs(lim0 - 1.0)) + ", " +
             fmt(std::fabs(lim1 - 1.0)) + " (tol 1e-6), order " +
             fmt(order_sum / order_count) + " (2.0 +/- 0.3), eigenfunction L2 errs " +
             fmt(err_m0) + ", " + fmt(err_m1) + " (tol 1e-3), " + fmt(secs) + " s (< 60 s)");
}

void criterion_6() {
  UnduloidGeometry geo;

  // certificate at the finest mesh
  const auto mesh = sp::Mesh1D::uniform(geo.v_a, geo.v_b, 2048);
  const auto spec = sp::spectrum(geo.domain, mesh, 6);
  std::vector<sp::EigenPair> cluster(spec.entries.begin() + 1, spec.entries.begin() + 4);
  const double mu = (cluster[0].value + cluster[1].value + cluster[2].value) / 3.0;
  const auto cert = ex::extremal_certificate(cluster, geo.domain, mesh, mu);
  const bool cert_ok =
      cert.status == ex::CertificateStatus::certified && cert.residual <= cert.certify_tol;

  // defect convergence under refinement
  std::vector<double> dens, ener;
  for (int n : {256, 512, 1024}) {
    const auto m = sp::Mesh1D::uniform(geo.v_a, geo.v_b, n);
    const auto s = sp::spectrum(geo.domain, m, 6);
    std::vector<sp::EigenPair> cl(s.entries.begin() + 1, s.entries.begin() + 4);
    const double mm = (cl[0].value + cl[1].value + cl[2].value) / 3.0;
    const auto c = ex::extremal_certificate(cl, geo.domain, m, mm);
    const auto conds = ex::verify_conditions(c.recovered, geo.domain, m, mm);
    dens.push_back(conds.sup_defect_density);
    ener.push_back(conds.sup_defect_energy);
  }
  bool orders_ok = true;
  double order_sum = 0.0;
  int norder = 0;
  for (const auto& seq : {dens, ener})
    for (double o : testsupport::observed_orders(seq)) {
      order_sum += o;
      ++norder;
      if (std::fabs(o - 2.0) > 0.5) orders_ok = false;
    }

  // trace identity for 5 seeded mean-zero directions at the finest mesh
  const auto conds = ex::verify_conditions(cert.recovered, geo.domain, mesh, mu);
  const bool trace_ok = conds.trace_ok();
  double worst_trace = 0.0;
  for (size_t i = 0; i < conds.trace_values.size(); ++i)
    worst_trace = std::max(worst_trace, conds.trace_values[i] / conds.trace_bounds[i]);

  const bool pass = cert_ok && orders_ok && trace_ok;
  report(6, pass,
         "certificate residual " + fmt(cert.residual) + " (tol " + fmt(cert.certify_tol) +
             ", " + ex::status_name(cert.status) + "), defect order " +
             fmt(order_sum / norder) + " (~2), trace identity margin " + fmt(worst_trace) +
             " (<= 1)");
}

void criterion_7() {
  const auto flat = flat_domain(rv::BoundaryCondition::neumann);
  const auto fmesh = sp::Mesh1D::uniform(0.0, 2.0, 256);
  UnduloidGeometry geo;
  const auto umesh = sp::Mesh1D::uniform(geo.v_a, geo.v_b, 256);
  const std::vector<double> steps = {1e-3, 5e-4};

  std::vector<ex::DerivativeCheckReport> reports;
  // six precondition-satisfying cases with nonzero derivative values
  reports.push_back(ex::conformal_derivative_check(
      flat, fmesh, 3,
      ex::ConformalPerturbation::from_function([](double v) { return std::cos(kPi * v); }, true,
                                               flat, fmesh),
      steps));
  // the mu_1 branch has constant density, so its conformal derivative
  // vanishes for every mean-zero direction; use the (m=1, j=1) branch
  reports.push_back(ex::conformal_derivative_check(
      flat, fmesh, 4, ex::ConformalPerturbation::seeded(0xE16, 0, flat, fmesh), steps));
  reports.push_back(ex::tensor_derivative_check(
      flat, fmesh, 1,
      ex::TensorPerturbation{[](double v) { return v; }, [](double) { return 0.0; }}, steps));
  reports.push_back(ex::tensor_derivative_check(
      flat, fmesh, 3,
      ex::TensorPerturbation{[](double v) { return std::cos(kPi * v); },
                             [](double v) { return 0.5 * v; }},
      steps));
  reports.push_back(ex::conformal_derivative_check(
      geo.domain, umesh, 4, ex::ConformalPerturbation::seeded(0xE16, 1, geo.domain, umesh),
      steps));
  reports.push_back(ex::tensor_derivative_check(
      geo.domain, umesh, 4,
      ex::TensorPerturbation{[](double v) { return std::sin(v); }, [](double v) { return v; }},
      steps));

  bool pass = true;
  double worst_raw = 0.0, worst_rich = 0.0;
  for (const auto& r : reports) {
    if (std::fabs(r.formula) < 1e-6) pass = false;  // cases must exercise a nonzero value
    worst_raw = std::max(worst_raw, r.rel_err[0]);
    worst_rich = std::max(worst_rich, r.richardson_rel_err);
  }
  pass = pass && worst_raw <= 1e-4 && worst_rich <= 1e-6;

  // pure scaling, exact through Richardson
  const auto scaling = ex::conformal_derivative_check(
      flat, fmesh, 3, ex::ConformalPerturbation::constant(0.8, fmesh), steps);
  const auto scaling_t =
      ex::tensor_derivative_check(flat, fmesh, 1, ex::TensorPerturbation::metric(flat), steps);
  pass = pass && scaling.richardson_rel_err <= 1e-8 && scaling_t.richardson_rel_err <= 1e-8;

  report(7, pass,
         "derivative formulas on 6 cases: raw rel err " + fmt(worst_raw) +
             " (tol 1e-4), Richardson " + fmt(worst_rich) + " (tol 1e-6), scaling " +
             fmt(std::max(scaling.richardson_rel_err, scaling_t.richardson_rel_err)) +
             " (tol 1e-8)");
}

void criterion_8() {
  const auto mesh = sp::Mesh1D::uniform(0.0, 2.0, 256);

  const auto dird = flat_domain(rv::BoundaryCondition::dirichlet);
  const auto dspec = sp::spectrum(dird, mesh, 4);
  std::vector<sp::EigenPair> dcl = {dspec.entries[0]};
  const auto dcert = ex::extremal_certificate(dcl, dird, mesh, dspec.entries[0].value);

  const auto neum = flat_domain(rv::BoundaryCondition::neumann);
  const auto nspec = sp::spectrum(neum, mesh, 6);
  std::vector<sp::EigenPair> ncl = {nspec.entries[1], nspec.entries[2]};
  const auto gcert = ex::global_feasibility_residual(ncl, neum, mesh, 1.0);

  const bool pass = dcert.status == ex::CertificateStatus::refuted &&
                    dcert.residual >= kFrozenDirichletBound &&
                    gcert.status == ex::CertificateStatus::refuted &&
                    gcert.residual >= kFrozenGlobalBound;
  report(8, pass,
         "nonexistence: Dirichlet residual " + fmt(dcert.residual) + " >= " +
             fmt(kFrozenDirichletBound) + ", global residual " + fmt(gcert.residual) + " >= " +
             fmt(kFrozenGlobalBound) + " (both " + ex::status_name(dcert.status) + "/" +
             ex::status_name(gcert.status) + ")");
}

void criterion_9() {
  bool pass = true;
  double worst_scale = 0.0;

  UnduloidGeometry geo;
  const auto umesh = sp::Mesh1D::uniform(geo.v_a, geo.v_b, 256);
  const auto fmesh = sp::Mesh1D::uniform(0.0, 2.0, 256);

  struct Case {
    rv::AnnulusDomain dom;
    sp::Mesh1D mesh;
    int k;
  };
  const std::vector<Case> cases = {{flat_domain(rv::BoundaryCondition::neumann), fmesh, 1},
                                   {geo.domain, umesh, 1}};
  for (const auto& c : cases) {
    const auto base = sp::spectrum(c.dom, c.mesh, 10);
    const auto seven = sp::spectrum(rv::scaled(c.dom, 7.0), c.mesh, 10);
    const double a = ex::normalized_eigenvalue(base, c.k);
    const double b = ex::normalized_eigenvalue(seven, c.k);
    worst_scale = std::max(worst_scale, std::fabs(a - b) / std::fabs(a));
  }
  pass = pass && worst_scale <= 1e-12;

  // Neumann <= Dirichlet entrywise for the first 10 eigenvalues
  bool order_ok = true;
  {
    const auto nf = sp::spectrum(flat_domain(rv::BoundaryCondition::neumann), fmesh, 10);
    const auto df = sp::spectrum(flat_domain(rv::BoundaryCondition::dirichlet), fmesh, 10);
    for (int i = 0; i < 10; ++i)
      if (nf.entries[i].value > df.entries[i].value + 1e-12) order_ok = false;
    const auto nu = sp::spectrum(geo.domain, umesh, 10);
    const auto du = sp::spectrum(
        rv::make_domain(geo.surf, geo.v_a, geo.v_b, rv::BoundaryCondition::dirichlet), umesh, 10);
    for (int i = 0; i < 10; ++i)
      if (nu.entries[i].value > du.entries[i].value + 1e-12) order_ok = false;
  }
  pass = pass && order_ok;
  report(9, pass,
         "scale invariance at c = 7: max defect " + fmt(worst_scale) +
             " (tol 1e-12); Neumann <= Dirichlet entrywise: " + (order_ok ? "yes" : "NO"));
}

void criterion_10() {
  const char* bin = std::getenv("EXS_CLI_BIN");
  const char* tmp_env = std::getenv("EXS_TEST_TMP");
  if (!bin || !tmp_env) {
    report(10, false, "CLI determinism: EXS_CLI_BIN / EXS_TEST_TMP not set");
    return;
  }
  const fs::path tmp = fs::path(tmp_env) / "c10";
  fs::create_directories(tmp);
  const fs::path cfg = tmp / "job.json";
  {
    std::ofstream out(cfg);
    out << R"({
  "surface": {"kind": "unduloid", "alpha": 0.8, "gamma": 2.4},
  "domain": {"auto_zeros": [0, 1]},
  "bc": "neumann",
  "conformal_weight": "gauss",
  "mesh_n": 1024,
  "spectrum": {"count": 6, "target": 1.0},
  "certificate": {"k": 1}
})";
  }
  auto run = [&](const std::string& out_dir, int threads) {
    const std::string cmd = std::string(bin) + " verify-extremal --config " + cfg.string() +
                            " --out " + (tmp / out_dir).string() + " --threads " +
                            std::to_string(threads) + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  auto slurp = [&](const std::string& out_dir) {
    std::ifstream in(tmp / out_dir / "verify_extremal.json", std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const int r1 = run("a", 1), r2 = run("b", 1), r4 = run("c", 4);
  const std::string ja = slurp("a"), jb = slurp("b"), jc = slurp("c");
  const bool pass = r1 == 0 && r2 == 0 && r4 == 0 && !ja.empty() && ja == jb && ja == jc &&
                    ja.find("\"status\": \"certified\"") != std::string::npos;
  report(10, pass,
         std::string("verify-extremal byte-identical across reruns and threads {1,4}: ") +
             (pass ? "yes" : "NO") + " (exits " + std::to_string(r1) + "," + std::to_string(r2) +
             "," + std::to_string(r4) + ")");
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criteria FAILED\n", g_failures);
  return 1;
}
