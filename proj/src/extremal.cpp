// Variational machinery for eigenvalue extremality: the quadratic forms from
// the eigenvalue derivative formulas, finite-difference validation of those
// formulas, and PSD least-squares certificates fitting eigenfunction products
// to the targets of the extremality characterization. Angular integrals are
// evaluated exactly through a small trigonometric-polynomial algebra; radial
// integrals by per-element Gauss quadrature.

#include "exs/extremal.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <string>

#include "exs/errors.hpp"
#include "exs/rng.hpp"

namespace exs::extremal {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kTwoPi = 2.0 * kPi;

// 2-point Gauss (consistent with the mass matrix quadrature).
constexpr double kG2Xi[2] = {0.21132486540518711775, 0.78867513459481288225};
constexpr double kG2W[2] = {0.5, 0.5};
// 3-point Gauss, exact through degree 5; used for quartic product integrals.
constexpr double kG3Xi[3] = {0.11270166537925831148, 0.5, 0.88729833462074168852};
constexpr double kG3W[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

// ---------------------------------------------------------------------------
// Trigonometric polynomials on the circle: f(u) = sum c_q cos(qu) + s_q sin(qu).

struct TrigPoly {
  std::vector<double> c;  // c[q]
  std::vector<double> s;  // s[q], s[0] unused

  void ensure(int q) {
    if (static_cast<int>(c.size()) <= q) {
      c.resize(q + 1, 0.0);
      s.resize(q + 1, 0.0);
    }
  }
  void add_cos(int q, double w) {
    if (q < 0) q = -q;
    ensure(q);
    c[q] += w;
  }
  void add_sin(int q, double w) {
    if (q == 0) return;
    if (q < 0) { q = -q; w = -w; }
    ensure(q);
    s[q] += w;
  }
};

TrigPoly trig_mul(const TrigPoly& a, const TrigPoly& b) {
  TrigPoly out;
  for (int p = 0; p < static_cast<int>(a.c.size()); ++p) {
    if (a.c[p] == 0.0 && (p == 0 || a.s[p] == 0.0)) continue;
    for (int q = 0; q < static_cast<int>(b.c.size()); ++q) {
      const double ca = a.c[p], cb = b.c[q];
      const double sa = p > 0 ? a.s[p] : 0.0, sb = q > 0 ? b.s[q] : 0.0;
      if (ca != 0.0 && cb != 0.0) {
        out.add_cos(p - q, 0.5 * ca * cb);
        out.add_cos(p + q, 0.5 * ca * cb);
      }
      if (ca != 0.0 && sb != 0.0) {
        out.add_sin(p + q, 0.5 * ca * sb);
        out.add_sin(q - p, 0.5 * ca * sb);
      }
      if (sa != 0.0 && cb != 0.0) {
        out.add_sin(p + q, 0.5 * sa * cb);
        out.add_sin(p - q, 0.5 * sa * cb);
      }
      if (sa != 0.0 && sb != 0.0) {
        out.add_cos(p - q, 0.5 * sa * sb);
        out.add_cos(p + q, -0.5 * sa * sb);
      }
    }
  }
  return out;
}

double trig_integral(const TrigPoly& a) { return a.c.empty() ? 0.0 : kTwoPi * a.c[0]; }

double trig_inner(const TrigPoly& a, const TrigPoly& b) {
  const int n = std::min(a.c.size(), b.c.size());
  if (n == 0) return 0.0;
  double acc = kTwoPi * a.c[0] * b.c[0];
  for (int q = 1; q < n; ++q) acc += kPi * (a.c[q] * b.c[q] + a.s[q] * b.s[q]);
  return acc;
}

TrigPoly mode_value(int m, Parity parity) {
  TrigPoly t;
  if (parity == Parity::cos) t.add_cos(m, 1.0);
  else t.add_sin(m, 1.0);
  return t;
}

TrigPoly mode_deriv(int m, Parity parity) {
  TrigPoly t;
  if (m == 0) return t;
  if (parity == Parity::cos) t.add_sin(m, -static_cast<double>(m));
  else t.add_cos(m, static_cast<double>(m));
  return t;
}

// ---------------------------------------------------------------------------
// Dense symmetric eigensolver (cyclic Jacobi) for the small matrices here.

void jacobi_eigen(std::vector<double> a, int n, std::vector<double>& evals,
                  std::vector<double>& evecs) {
  evecs.assign(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) evecs[static_cast<size_t>(i) * n + i] = 1.0;
  auto at = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };
  for (int sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (int i = 0; i < n; ++i) {
      diag += std::fabs(at(i, i));
      for (int j = i + 1; j < n; ++j) off += std::fabs(at(i, j));
    }
    if (off <= 1e-15 * (diag + DBL_MIN)) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = 0.5 * (at(q, q) - at(p, p)) / apq;
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int i = 0; i < n; ++i) {
          const double aip = at(i, p), aiq = at(i, q);
          at(i, p) = c * aip - s * aiq;
          at(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = at(p, i), aqi = at(q, i);
          at(p, i) = c * api - s * aqi;
          at(q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = evecs[static_cast<size_t>(i) * n + p];
          const double viq = evecs[static_cast<size_t>(i) * n + q];
          evecs[static_cast<size_t>(i) * n + p] = c * vip - s * viq;
          evecs[static_cast<size_t>(i) * n + q] = s * vip + c * viq;
        }
      }
    }
  }
  evals.resize(n);
  for (int i = 0; i < n; ++i) evals[i] = at(i, i);
  // ascending order, columns permuted alongside
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return evals[i] < evals[j]; });
  std::vector<double> ev2(n);
  std::vector<double> vv2(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    ev2[j] = evals[order[j]];
    for (int i = 0; i < n; ++i)
      vv2[static_cast<size_t>(i) * n + j] = evecs[static_cast<size_t>(i) * n + order[j]];
  }
  evals = std::move(ev2);
  evecs = std::move(vv2);
}

std::vector<double> psd_project(const std::vector<double>& sym, int n, double* min_eig = nullptr) {
  std::vector<double> evals, v;
  jacobi_eigen(sym, n, evals, v);
  if (min_eig) *min_eig = evals.empty() ? 0.0 : evals.front();
  std::vector<double> out(static_cast<size_t>(n) * n, 0.0);
  for (int k = 0; k < n; ++k) {
    const double lam = std::max(evals[k], 0.0);
    if (lam == 0.0) continue;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out[static_cast<size_t>(i) * n + j] +=
            lam * v[static_cast<size_t>(i) * n + k] * v[static_cast<size_t>(j) * n + k];
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double m = 0.5 * (out[static_cast<size_t>(i) * n + j] + out[static_cast<size_t>(j) * n + i]);
      out[static_cast<size_t>(i) * n + j] = out[static_cast<size_t>(j) * n + i] = m;
    }
  return out;
}

std::vector<double> psd_sqrt(const std::vector<double>& sym, int n) {
  std::vector<double> evals, v;
  jacobi_eigen(sym, n, evals, v);
  std::vector<double> out(static_cast<size_t>(n) * n, 0.0);
  for (int k = 0; k < n; ++k) {
    const double lam = std::sqrt(std::max(evals[k], 0.0));
    if (lam == 0.0) continue;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out[static_cast<size_t>(i) * n + j] +=
            lam * v[static_cast<size_t>(i) * n + k] * v[static_cast<size_t>(j) * n + k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mesh access helpers.

struct ElementFrame {
  double v, w;        // quadrature point and weight (element-scaled)
  double xi;          // local coordinate
  int e;
};

template <typename F>
void for_gauss2(const Mesh1D& mesh, F&& f) {
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double va = mesh.nodes[e], h = mesh.nodes[e + 1] - mesh.nodes[e];
    for (int g = 0; g < 2; ++g)
      f(ElementFrame{va + kG2Xi[g] * h, kG2W[g] * h, kG2Xi[g], e});
  }
}

template <typename F>
void for_gauss3(const Mesh1D& mesh, F&& f) {
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double va = mesh.nodes[e], h = mesh.nodes[e + 1] - mesh.nodes[e];
    for (int g = 0; g < 3; ++g)
      f(ElementFrame{va + kG3Xi[g] * h, kG3W[g] * h, kG3Xi[g], e});
  }
}

inline double p1_value(const std::vector<double>& nodal, const ElementFrame& fr) {
  return nodal[fr.e] * (1.0 - fr.xi) + nodal[fr.e + 1] * fr.xi;
}

inline double p1_slope(const std::vector<double>& nodal, const Mesh1D& mesh, int e) {
  return (nodal[e + 1] - nodal[e]) / (mesh.nodes[e + 1] - mesh.nodes[e]);
}

void require_mesh_match(const std::vector<double>& nodal, const Mesh1D& mesh) {
  if (nodal.size() != mesh.nodes.size())
    fail(errc::precondition, "nodal data does not match the mesh");
}

struct MetricAt {
  double ebar, gbar, massw;
};

MetricAt metric_at(const AnnulusDomain& domain, double v) {
  const auto p = domain.profile(v);
  const double rho = domain.rho_at(p);
  return {rho * p.big_e, rho * p.big_g, rho * p.x * std::sqrt(p.big_g)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Perturbations.

ConformalPerturbation ConformalPerturbation::from_samples(std::vector<double> nodal,
                                                          bool make_mean_zero,
                                                          const AnnulusDomain& domain,
                                                          const Mesh1D& mesh) {
  require_mesh_match(nodal, mesh);
  ConformalPerturbation out;
  out.psi = std::move(nodal);
  if (make_mean_zero) {
    double num = 0.0, den = 0.0;
    for_gauss2(mesh, [&](const ElementFrame& fr) {
      const double w = metric_at(domain, fr.v).massw * fr.w;
      num += w * p1_value(out.psi, fr);
      den += w;
    });
    const double mean = num / den;
    for (double& p : out.psi) p -= mean;
    out.mean_zero = true;
  }
  return out;
}

ConformalPerturbation ConformalPerturbation::from_function(const std::function<double(double)>& f,
                                                           bool make_mean_zero,
                                                           const AnnulusDomain& domain,
                                                           const Mesh1D& mesh) {
  std::vector<double> nodal(mesh.nodes.size());
  for (size_t i = 0; i < nodal.size(); ++i) nodal[i] = f(mesh.nodes[i]);
  return from_samples(std::move(nodal), make_mean_zero, domain, mesh);
}

ConformalPerturbation ConformalPerturbation::constant(double c, const Mesh1D& mesh) {
  ConformalPerturbation out;
  out.psi.assign(mesh.nodes.size(), c);
  out.mean_zero = false;
  return out;
}

ConformalPerturbation ConformalPerturbation::seeded(std::uint64_t seed, int index,
                                                    const AnnulusDomain& domain,
                                                    const Mesh1D& mesh) {
  rng::SplitMix64 gen(seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(index + 1));
  double coeff[4];
  for (double& c : coeff) c = gen.symmetric();
  const double va = domain.v_a, len = domain.length();
  std::vector<double> nodal(mesh.nodes.size());
  for (size_t i = 0; i < nodal.size(); ++i) {
    const double x = (mesh.nodes[i] - va) / len;
    double s = 0.0;
    for (int j = 0; j < 4; ++j) s += coeff[j] * std::cos((j + 1) * kPi * x);
    nodal[i] = s;
  }
  return from_samples(std::move(nodal), true, domain, mesh);
}

TensorPerturbation TensorPerturbation::zero() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }};
}

TensorPerturbation TensorPerturbation::metric(const AnnulusDomain& domain) {
  const AnnulusDomain d = domain;
  return {[d](double v) {
            const auto p = d.profile(v);
            return d.rho_at(p) * p.big_e;
          },
          [d](double v) {
            const auto p = d.profile(v);
            return d.rho_at(p) * p.big_g;
          }};
}

double integral_dV(const std::vector<double>& nodal, const AnnulusDomain& domain,
                   const Mesh1D& mesh) {
  require_mesh_match(nodal, mesh);
  double acc = 0.0;
  for_gauss2(mesh, [&](const ElementFrame& fr) {
    acc += fr.w * metric_at(domain, fr.v).massw * p1_value(nodal, fr);
  });
  return kTwoPi * acc;
}

double l2_norm_dV(const std::vector<double>& nodal, const AnnulusDomain& domain,
                  const Mesh1D& mesh) {
  require_mesh_match(nodal, mesh);
  double acc = 0.0;
  for_gauss2(mesh, [&](const ElementFrame& fr) {
    const double p = p1_value(nodal, fr);
    acc += fr.w * metric_at(domain, fr.v).massw * p * p;
  });
  return std::sqrt(kTwoPi * acc);
}

// ---------------------------------------------------------------------------
// The quadratic forms P_psi and Q_h. Different angular modes never couple, so
// both reduce to 1D integrals over same-mode pairs of terms.

namespace {

bool same_mode(const ModeTerm& a, const ModeTerm& b) {
  return a.m == b.m && a.parity == b.parity;
}

// int trig^2 du and int (d trig/du)^2 du for one mode.
inline double ang_val(int m) { return m == 0 ? kTwoPi : kPi; }
inline double ang_grad(int m) { return m == 0 ? 0.0 : kPi * m * m; }

double p_bilinear(const ModeTerm& a, const ModeTerm& b, const ConformalPerturbation& psi,
                  const AnnulusDomain& domain, const Mesh1D& mesh, double lambda) {
  if (!same_mode(a, b)) return 0.0;
  require_mesh_match(a.radial, mesh);
  require_mesh_match(b.radial, mesh);
  require_mesh_match(psi.psi, mesh);
  constexpr double dim = 2.0;  // p(f) carries the general-n coefficients
  const double grad_coef = 0.5 * (2.0 - dim);
  const double val_coef = 0.5 * dim * lambda;
  const double cv = ang_val(a.m), cg = ang_grad(a.m);
  double acc = 0.0;
  for_gauss2(mesh, [&](const ElementFrame& fr) {
    const MetricAt mt = metric_at(domain, fr.v);
    const double fa = p1_value(a.radial, fr), fb = p1_value(b.radial, fr);
    const double da = p1_slope(a.radial, mesh, fr.e), db = p1_slope(b.radial, mesh, fr.e);
    const double grad_pair = cg * fa * fb / mt.ebar + cv * da * db / mt.gbar;
    const double val_pair = cv * fa * fb;
    acc += fr.w * mt.massw * p1_value(psi.psi, fr) * (grad_coef * grad_pair + val_coef * val_pair);
  });
  return -acc;
}

double q_bilinear(const ModeTerm& a, const ModeTerm& b, const TensorPerturbation& h,
                  const AnnulusDomain& domain, const Mesh1D& mesh, double lambda) {
  if (!same_mode(a, b)) return 0.0;
  require_mesh_match(a.radial, mesh);
  require_mesh_match(b.radial, mesh);
  const double cv = ang_val(a.m), cg = ang_grad(a.m);
  double acc = 0.0;
  for_gauss2(mesh, [&](const ElementFrame& fr) {
    const MetricAt mt = metric_at(domain, fr.v);
    const double fa = p1_value(a.radial, fr), fb = p1_value(b.radial, fr);
    const double da = p1_slope(a.radial, mesh, fr.e), db = p1_slope(b.radial, mesh, fr.e);
    const double huu = h.h_uu(fr.v), hvv = h.h_vv(fr.v);
    const double grad_u = cg * fa * fb;       // int f_u g_u du
    const double grad_v = cv * da * db;       // int f_v g_v du
    const double val = cv * fa * fb;          // int f g du
    const double trace_part = grad_u / mt.ebar + grad_v / mt.gbar - lambda * val;
    acc += fr.w * mt.massw *
           (grad_u * huu / (mt.ebar * mt.ebar) + grad_v * hvv / (mt.gbar * mt.gbar) -
            0.5 * trace_part * (huu / mt.ebar + hvv / mt.gbar));
  });
  return -acc;
}

}  // namespace

double p_form(const ModeCombo& u, const ConformalPerturbation& psi, const AnnulusDomain& domain,
              const Mesh1D& mesh, double lambda) {
  double acc = 0.0;
  for (const auto& a : u.terms)
    for (const auto& b : u.terms) acc += p_bilinear(a, b, psi, domain, mesh, lambda);
  return acc;
}

double q_form(const ModeCombo& u, const TensorPerturbation& h, const AnnulusDomain& domain,
              const Mesh1D& mesh, double lambda) {
  double acc = 0.0;
  for (const auto& a : u.terms)
    for (const auto& b : u.terms) acc += q_bilinear(a, b, h, domain, mesh, lambda);
  return acc;
}

FormMatrix conformal_form_matrix(std::span<const EigenPair> basis,
                                 const ConformalPerturbation& psi, const AnnulusDomain& domain,
                                 const Mesh1D& mesh, double lambda) {
  const int d = static_cast<int>(basis.size());
  FormMatrix out;
  out.d = d;
  out.entries.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const ModeTerm a{basis[i].m, basis[i].parity, basis[i].coeffs};
      const ModeTerm b{basis[j].m, basis[j].parity, basis[j].coeffs};
      const double v = p_bilinear(a, b, psi, domain, mesh, lambda);
      out.entries[static_cast<size_t>(i) * d + j] = v;
      out.entries[static_cast<size_t>(j) * d + i] = v;
    }
  return out;
}

FormMatrix tensor_form_matrix(std::span<const EigenPair> basis, const TensorPerturbation& h,
                              const AnnulusDomain& domain, const Mesh1D& mesh, double lambda) {
  const int d = static_cast<int>(basis.size());
  FormMatrix out;
  out.d = d;
  out.entries.assign(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      const ModeTerm a{basis[i].m, basis[i].parity, basis[i].coeffs};
      const ModeTerm b{basis[j].m, basis[j].parity, basis[j].coeffs};
      const double v = q_bilinear(a, b, h, domain, mesh, lambda);
      out.entries[static_cast<size_t>(i) * d + j] = v;
      out.entries[static_cast<size_t>(j) * d + i] = v;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Derivative checks.

int entry_index(BoundaryCondition bc, int k) {
  if (bc == BoundaryCondition::neumann) {
    if (k < 0) fail(errc::domain, "Neumann index must be >= 0");
    return k;
  }
  if (k < 1) fail(errc::domain, "Dirichlet index must be >= 1");
  return k - 1;
}

namespace {

struct BranchSetup {
  EigenPair entry;
  double lambda0 = 0.0;
  int block_count = 0;       // eigenvalues solved per block
  std::vector<double> base;  // block eigenvalues at t = 0
  double guard = 0.0;        // half-gap movement bound for crossing detection
};

BranchSetup prepare_branch(const AnnulusDomain& domain, const Mesh1D& mesh, int k,
                           const SpectrumOptions& options) {
  const int idx = entry_index(domain.bc, k);
  const int count = idx + 6;
  const auto spec = spectral::spectrum(domain, mesh, count, options);
  if (idx >= static_cast<int>(spec.entries.size()))
    fail(errc::precondition, "eigenvalue index beyond the computed spectrum");
  const EigenPair entry = spec.entries[idx];

  // The merged cluster containing the target must consist of one branch only
  // (the sin/cos parity twins of a single (m, j) count as one branch).
  const double tol = 10.0 * spec.cluster_tol(entry.value);
  for (const auto& [lo, hi] : spec.clusters) {
    if (idx < lo || idx > hi) continue;
    for (int i = lo; i <= hi; ++i)
      if (spec.entries[i].m != entry.m || spec.entries[i].index_in_block != entry.index_in_block)
        fail(errc::precondition,
             "degenerate target eigenvalue: cluster mixes branches (m=" +
                 std::to_string(spec.entries[i].m) + ", j=" +
                 std::to_string(spec.entries[i].index_in_block) + ") and (m=" +
                 std::to_string(entry.m) + ", j=" + std::to_string(entry.index_in_block) + ")");
    if (lo > 0 && spec.entries[lo].value - spec.entries[lo - 1].value <= tol)
      fail(errc::precondition, "target cluster is not isolated below");
    if (hi + 1 < static_cast<int>(spec.entries.size()) &&
        spec.entries[hi + 1].value - spec.entries[hi].value <= tol)
      fail(errc::precondition, "target cluster is not isolated above");
    break;
  }

  BranchSetup setup;
  setup.entry = entry;
  setup.lambda0 = entry.value;

  const auto blk = spectral::assemble_block(domain, entry.m, mesh);
  setup.block_count = std::min(entry.index_in_block + 2, blk.n_active);
  auto pairs = spectral::solve_block(blk, setup.block_count);
  setup.base.resize(pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i) setup.base[i] = pairs[i].value;

  const int j = entry.index_in_block;
  double gap = std::numeric_limits<double>::infinity();
  if (j > 0) gap = std::min(gap, setup.base[j] - setup.base[j - 1]);
  if (j + 1 < static_cast<int>(setup.base.size())) gap = std::min(gap, setup.base[j + 1] - setup.base[j]);
  if (gap <= tol) fail(errc::precondition, "target eigenvalue is not simple within its block");
  setup.guard = std::isfinite(gap) ? 0.45 * gap : std::numeric_limits<double>::infinity();
  return setup;
}

double tracked_branch_value(const spectral::AssemblyCoeffs& coeffs, const AnnulusDomain& domain,
                            const Mesh1D& mesh, const BranchSetup& setup, double t) {
  const auto blk = spectral::assemble_block(coeffs, domain.bc, setup.entry.m, mesh);
  const auto pairs = spectral::solve_block(blk, setup.block_count);
  const int j = setup.entry.index_in_block;
  for (int i = std::max(j - 1, 0); i < static_cast<int>(pairs.size()); ++i) {
    if (std::fabs(pairs[i].value - setup.base[i]) >= setup.guard) {
      const int other = pairs[i].value > setup.base[i] ? i + 1 : i - 1;
      fail(errc::branch_crossing,
           "eigenvalue branches (m=" + std::to_string(setup.entry.m) + ", j=" +
               std::to_string(i) + ") and (m=" + std::to_string(setup.entry.m) + ", j=" +
               std::to_string(other) + ") collided at step t=" + std::to_string(t));
    }
  }
  return pairs[j].value;
}

void finish_report(DerivativeCheckReport& rep) {
  const double denom = std::max(std::fabs(rep.formula), 1e-14);
  rep.rel_err.resize(rep.fd.size());
  for (size_t i = 0; i < rep.fd.size(); ++i)
    rep.rel_err[i] = std::fabs(rep.fd[i] - rep.formula) / denom;
  if (rep.fd.size() >= 2) {
    // h^2 extrapolation on the two smallest steps
    const size_t n = rep.fd.size();
    const double s1 = rep.steps[n - 2], s2 = rep.steps[n - 1];
    rep.richardson = (s1 * s1 * rep.fd[n - 1] - s2 * s2 * rep.fd[n - 2]) / (s1 * s1 - s2 * s2);
  } else {
    rep.richardson = rep.fd.empty() ? 0.0 : rep.fd[0];
  }
  rep.richardson_rel_err = std::fabs(rep.richardson - rep.formula) / denom;
}

std::vector<double> sorted_steps(std::vector<double> steps) {
  if (steps.empty()) fail(errc::precondition, "derivative check needs at least one step");
  for (double s : steps)
    if (!(s > 0.0)) fail(errc::precondition, "derivative steps must be positive");
  std::sort(steps.begin(), steps.end(), std::greater<>());
  return steps;
}

}  // namespace

DerivativeCheckReport conformal_derivative_check(const AnnulusDomain& domain, const Mesh1D& mesh,
                                                 int k, const ConformalPerturbation& psi,
                                                 std::vector<double> steps,
                                                 const SpectrumOptions& options) {
  require_mesh_match(psi.psi, mesh);
  const auto setup = prepare_branch(domain, mesh, k, options);

  DerivativeCheckReport rep;
  rep.k = k;
  rep.m = setup.entry.m;
  rep.parity = setup.entry.parity;
  rep.index_in_block = setup.entry.index_in_block;
  rep.lambda0 = setup.lambda0;
  rep.formula = p_form(ModeCombo::from_pair(setup.entry), psi, domain, mesh, setup.lambda0);
  rep.steps = sorted_steps(std::move(steps));
  for (const double s : rep.steps) {
    const double up =
        tracked_branch_value(spectral::conformal_coeffs(domain, mesh, psi.psi, s), domain, mesh, setup, s);
    const double dn =
        tracked_branch_value(spectral::conformal_coeffs(domain, mesh, psi.psi, -s), domain, mesh, setup, -s);
    rep.fd.push_back((up - dn) / (2.0 * s));
  }
  finish_report(rep);
  return rep;
}

DerivativeCheckReport tensor_derivative_check(const AnnulusDomain& domain, const Mesh1D& mesh,
                                              int k, const TensorPerturbation& h,
                                              std::vector<double> steps,
                                              const SpectrumOptions& options) {
  const auto setup = prepare_branch(domain, mesh, k, options);

  DerivativeCheckReport rep;
  rep.k = k;
  rep.m = setup.entry.m;
  rep.parity = setup.entry.parity;
  rep.index_in_block = setup.entry.index_in_block;
  rep.lambda0 = setup.lambda0;
  rep.formula = q_form(ModeCombo::from_pair(setup.entry), h, domain, mesh, setup.lambda0);
  rep.steps = sorted_steps(std::move(steps));
  for (const double s : rep.steps) {
    const double up =
        tracked_branch_value(spectral::tensor_coeffs(domain, h.h_uu, h.h_vv, s), domain, mesh, setup, s);
    const double dn =
        tracked_branch_value(spectral::tensor_coeffs(domain, h.h_uu, h.h_vv, -s), domain, mesh, setup, -s);
    rep.fd.push_back((up - dn) / (2.0 * s));
  }
  finish_report(rep);
  return rep;
}

// ---------------------------------------------------------------------------
// PSD least-squares certificates. Both certificates minimize a convex
// quadratic R(S) over the PSD cone by projected gradient descent with a
// fixed step set from the top eigenvalue of the product Gram operator.

namespace {

struct QuadModel {
  int d = 0;
  std::vector<double> gram;  // (d^2) x (d^2), pair index p = i*d + j
  std::vector<double> lin;   // d^2
  double constant = 0.0;
  double normalizer = 1.0;
};

double model_value(const QuadModel& mdl, const std::vector<double>& s) {
  const int n = mdl.d * mdl.d;
  double quad = 0.0, lin = 0.0;
  for (int p = 0; p < n; ++p) {
    double row = 0.0;
    for (int q = 0; q < n; ++q) row += mdl.gram[static_cast<size_t>(p) * n + q] * s[q];
    quad += s[p] * row;
    lin += mdl.lin[p] * s[p];
  }
  return quad - 2.0 * lin + mdl.constant;
}

std::vector<double> model_gradient(const QuadModel& mdl, const std::vector<double>& s) {
  const int n = mdl.d * mdl.d;
  std::vector<double> g(n);
  for (int p = 0; p < n; ++p) {
    double row = 0.0;
    for (int q = 0; q < n; ++q) row += mdl.gram[static_cast<size_t>(p) * n + q] * s[q];
    g[p] = 2.0 * (row - mdl.lin[p]);
  }
  return g;
}

// Extreme eigenvalues of the Gram operator restricted to symmetric matrices,
// in the orthonormal basis {e_ii} u {(e_ij + e_ji)/sqrt(2)}.
void gram_operator_range(const QuadModel& mdl, double& lam_min, double& lam_max) {
  const int d = mdl.d;
  const int nb = d * (d + 1) / 2;
  std::vector<std::vector<double>> basis(nb, std::vector<double>(d * d, 0.0));
  {
    int b = 0;
    for (int i = 0; i < d; ++i) basis[b++][i * d + i] = 1.0;
    const double r = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        basis[b][i * d + j] = r;
        basis[b][j * d + i] = r;
        ++b;
      }
  }
  const int n = d * d;
  std::vector<double> rep(static_cast<size_t>(nb) * nb, 0.0);
  for (int p = 0; p < nb; ++p) {
    std::vector<double> gb(n, 0.0);
    for (int a = 0; a < n; ++a) {
      double row = 0.0;
      for (int bq = 0; bq < n; ++bq) row += mdl.gram[static_cast<size_t>(a) * n + bq] * basis[p][bq];
      gb[a] = row;
    }
    for (int q = 0; q < nb; ++q) {
      double v = 0.0;
      for (int a = 0; a < n; ++a) v += basis[q][a] * gb[a];
      rep[static_cast<size_t>(q) * nb + p] = v;
    }
  }
  std::vector<double> evals, evecs;
  jacobi_eigen(rep, nb, evals, evecs);
  lam_min = evals.front();
  lam_max = evals.back();
}

CertificateResult solve_psd_model(const QuadModel& mdl, const Mesh1D& mesh,
                                  CertificateOptions options) {
  const int d = mdl.d;
  const int n = d * d;
  CertificateResult res;
  res.d = d;
  const double h = mesh.spacing_max();
  res.certify_tol = options.certify_tol > 0.0 ? options.certify_tol : 50.0 * h * h;
  res.refute_tol = options.refute_tol > 0.0 ? options.refute_tol : 10.0 * res.certify_tol;

  double lam_min_g = 0.0, lam_max_g = 0.0;
  gram_operator_range(mdl, lam_min_g, lam_max_g);
  if (!(lam_max_g > 0.0)) fail(errc::internal, "degenerate product Gram operator");
  // The gradient of R is 2(Gram S - b), Lipschitz with constant 2 lambda_max,
  // so 1/(2 lambda_max) is the largest step with guaranteed monotone descent.
  // A step of 1/lambda_max sits exactly at the oscillation threshold and
  // stalls whenever b has weight on the top eigendirection.
  const double step = 0.5 / lam_max_g;

  std::vector<double> s(n, 0.0);
  double value = model_value(mdl, s);
  if (options.objective_trace) options.objective_trace->push_back(value);
  const double scale0 = std::fabs(mdl.constant) + 1.0;
  bool converged = false;
  long it = 0;
  int stagnant = 0;
  for (; it < options.max_iterations; ++it) {
    const auto g = model_gradient(mdl, s);
    std::vector<double> trial(n);
    for (int p = 0; p < n; ++p) trial[p] = s[p] - step * g[p];
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        const double m = 0.5 * (trial[i * d + j] + trial[j * d + i]);
        trial[i * d + j] = trial[j * d + i] = m;
      }
    double smin = 0.0;
    trial = psd_project(trial, d, &smin);
    const double value_new = model_value(mdl, trial);
    if (options.objective_trace) options.objective_trace->push_back(value_new);
    if (value_new > value + 1e-10 * scale0)
      fail(errc::internal, "projected gradient objective increased");
    double delta = 0.0, norm = 0.0;
    for (int p = 0; p < n; ++p) {
      delta += (trial[p] - s[p]) * (trial[p] - s[p]);
      norm += s[p] * s[p];
    }
    const bool small_step = std::sqrt(delta) <= 1e-15 * (1.0 + std::sqrt(norm));
    stagnant = (std::fabs(value_new - value) <= 1e-17 * scale0) ? stagnant + 1 : 0;
    s = std::move(trial);
    value = value_new;
    if (small_step || stagnant >= 64) {
      converged = true;
      ++it;
      break;
    }
  }
  res.iterations = it;
  res.S = s;
  res.raw_residual = std::sqrt(std::max(value, 0.0));
  res.residual = res.raw_residual / mdl.normalizer;

  {
    std::vector<double> evals, evecs;
    jacobi_eigen(s, d, evals, evecs);
    res.s_min_eigenvalue = evals.front();
  }

  // Convexity lower bound on the PSD-constrained minimum:
  //   R(S) >= R(Sbar) + <Grad, S - Sbar>  for all S,
  // minimized over {S psd, ||S||_F <= Rmax} with Rmax from coercivity.
  double lb = 0.0;
  if (lam_min_g > 1e-14 * lam_max_g) {
    const auto g = model_gradient(mdl, s);
    double gs = 0.0, bnorm = 0.0;
    for (int p = 0; p < n; ++p) {
      gs += g[p] * s[p];
      bnorm += mdl.lin[p] * mdl.lin[p];
    }
    bnorm = std::sqrt(bnorm);
    const double disc = std::max(bnorm * bnorm + lam_min_g * (value - mdl.constant), 0.0);
    const double rmax = (bnorm + std::sqrt(disc)) / lam_min_g;
    std::vector<double> evals, evecs;
    jacobi_eigen(g, d, evals, evecs);
    lb = value - gs + rmax * std::min(0.0, evals.front());
  }
  res.lower_bound = std::sqrt(std::max(lb, 0.0)) / mdl.normalizer;

  if (converged && res.residual <= res.certify_tol)
    res.status = CertificateStatus::certified;
  else if (res.lower_bound > res.refute_tol)
    res.status = CertificateStatus::refuted;
  else
    res.status = CertificateStatus::inconclusive;
  return res;
}

void attach_recovered(CertificateResult& res, std::span<const EigenPair> cluster) {
  const int d = res.d;
  const auto root = psd_sqrt(res.S, d);
  res.recovered.clear();
  res.recovered.reserve(d);
  for (int i = 0; i < d; ++i) {
    ModeCombo combo;
    for (int j = 0; j < d; ++j) {
      ModeTerm term;
      term.m = cluster[j].m;
      term.parity = cluster[j].parity;
      term.radial = cluster[j].coeffs;
      const double c = root[static_cast<size_t>(i) * d + j];
      for (double& x : term.radial) x *= c;
      combo.terms.push_back(std::move(term));
    }
    res.recovered.push_back(std::move(combo));
  }
}

void check_cluster(std::span<const EigenPair> cluster, const Mesh1D& mesh) {
  if (cluster.empty()) fail(errc::precondition, "certificate needs a nonempty cluster");
  if (cluster.size() > 8) fail(errc::precondition, "certificate cluster too large");
  for (const auto& p : cluster) require_mesh_match(p.coeffs, mesh);
}

}  // namespace

CertificateResult extremal_certificate(std::span<const EigenPair> cluster,
                                       const AnnulusDomain& domain, const Mesh1D& mesh, double mu,
                                       CertificateOptions options) {
  check_cluster(cluster, mesh);
  if (!(mu > 0.0)) fail(errc::precondition, "certificate needs a positive eigenvalue");
  const int d = static_cast<int>(cluster.size());
  const int n = d * d;

  // Angular tables for the products phi_i phi_j (v-independent).
  std::vector<TrigPoly> prod(n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      prod[i * d + j] = trig_mul(mode_value(cluster[i].m, cluster[i].parity),
                                 mode_value(cluster[j].m, cluster[j].parity));
  std::vector<double> ang_inner(static_cast<size_t>(n) * n);
  std::vector<double> ang_mean(n);
  for (int p = 0; p < n; ++p) {
    ang_mean[p] = trig_integral(prod[p]);
    for (int q = 0; q < n; ++q) ang_inner[static_cast<size_t>(p) * n + q] = trig_inner(prod[p], prod[q]);
  }

  QuadModel mdl;
  mdl.d = d;
  mdl.gram.assign(static_cast<size_t>(n) * n, 0.0);
  mdl.lin.assign(n, 0.0);
  std::vector<double> r4(static_cast<size_t>(n) * n, 0.0);
  std::vector<double> r2(n, 0.0);
  std::vector<double> av(d);
  double vol_w = 0.0;
  for_gauss3(mesh, [&](const ElementFrame& fr) {
    const double w = fr.w * metric_at(domain, fr.v).massw;
    vol_w += w;
    for (int i = 0; i < d; ++i) av[i] = p1_value(cluster[i].coeffs, fr);
    for (int p = 0; p < n; ++p) {
      const double rp = av[p / d] * av[p % d];
      r2[p] += w * rp;
      for (int q = 0; q < n; ++q) r4[static_cast<size_t>(p) * n + q] += w * rp * av[q / d] * av[q % d];
    }
  });
  const double vol = kTwoPi * vol_w;
  for (int p = 0; p < n; ++p) {
    mdl.lin[p] = ang_mean[p] * r2[p] / mu;
    for (int q = 0; q < n; ++q)
      mdl.gram[static_cast<size_t>(p) * n + q] =
          ang_inner[static_cast<size_t>(p) * n + q] * r4[static_cast<size_t>(p) * n + q];
  }
  mdl.constant = vol / (mu * mu);
  mdl.normalizer = std::sqrt(vol) / mu;

  CertificateResult res = solve_psd_model(mdl, mesh, options);
  attach_recovered(res, cluster);
  return res;
}

CertificateResult global_feasibility_residual(std::span<const EigenPair> cluster,
                                              const AnnulusDomain& domain, const Mesh1D& mesh,
                                              double mu, CertificateOptions options) {
  check_cluster(cluster, mesh);
  if (!(mu > 0.0)) fail(errc::precondition, "certificate needs a positive eigenvalue");
  const int d = static_cast<int>(cluster.size());
  const int n = d * d;

  // q(phi_i, phi_j) componentwise in the (u, v) frame:
  //   uu = A DD - (Ebar/2) (Dv - mu A) TT          with A = a_i a_j, Dv = a_i' a_j' / Gbar
  //   vv = -(Gbar/(2 Ebar)) Du TT-part ...          assembled below
  //   uv = (a_i a_j'/2) D_i T_j + (a_i' a_j/2) T_i D_j
  // where TT, DD, DT, TD are angular products; all v-independent.
  std::vector<TrigPoly> tt(n), dd(n), dt(n), td(n);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const TrigPoly ti = mode_value(cluster[i].m, cluster[i].parity);
      const TrigPoly tj = mode_value(cluster[j].m, cluster[j].parity);
      const TrigPoly di = mode_deriv(cluster[i].m, cluster[i].parity);
      const TrigPoly dj = mode_deriv(cluster[j].m, cluster[j].parity);
      tt[i * d + j] = trig_mul(ti, tj);
      dd[i * d + j] = trig_mul(di, dj);
      dt[i * d + j] = trig_mul(di, tj);
      td[i * d + j] = trig_mul(ti, dj);
    }
  auto table = [&](const std::vector<TrigPoly>& a, const std::vector<TrigPoly>& b) {
    std::vector<double> t(static_cast<size_t>(n) * n);
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) t[static_cast<size_t>(p) * n + q] = trig_inner(a[p], b[q]);
    return t;
  };
  const auto i_dd_dd = table(dd, dd), i_dd_tt = table(dd, tt), i_tt_tt = table(tt, tt);
  const auto i_dt_dt = table(dt, dt), i_dt_td = table(dt, td), i_td_td = table(td, td);
  std::vector<double> int_dd(n), int_tt(n);
  for (int p = 0; p < n; ++p) {
    int_dd[p] = trig_integral(dd[p]);
    int_tt[p] = trig_integral(tt[p]);
  }

  QuadModel mdl;
  mdl.d = d;
  mdl.gram.assign(static_cast<size_t>(n) * n, 0.0);
  mdl.lin.assign(n, 0.0);
  std::vector<double> av(d), ap(d);
  std::vector<double> uu_a(n), uu_b(n), vv_a(n), vv_b(n), uv_a(n), uv_b(n);
  double vol_w = 0.0;
  for_gauss3(mesh, [&](const ElementFrame& fr) {
    const MetricAt mt = metric_at(domain, fr.v);
    const double w = fr.w * mt.massw;
    vol_w += w;
    for (int i = 0; i < d; ++i) {
      av[i] = p1_value(cluster[i].coeffs, fr);
      ap[i] = p1_slope(cluster[i].coeffs, mesh, fr.e);
    }
    for (int p = 0; p < n; ++p) {
      const int i = p / d, j = p % d;
      const double aa = av[i] * av[j];
      const double pp = ap[i] * ap[j];
      // uu = uu_a * DD + uu_b * TT ; vv, uv likewise in their angular bases
      uu_a[p] = 0.5 * aa;
      uu_b[p] = -0.5 * mt.ebar * (pp / mt.gbar - mu * aa);
      vv_a[p] = -0.5 * mt.gbar / mt.ebar * aa;
      vv_b[p] = 0.5 * pp + 0.5 * mt.gbar * mu * aa;
      uv_a[p] = 0.5 * av[i] * ap[j];  // coefficient of D_i T_j
      uv_b[p] = 0.5 * ap[i] * av[j];  // coefficient of T_i D_j
    }
    const double wee = w / (mt.ebar * mt.ebar);
    const double wgg = w / (mt.gbar * mt.gbar);
    const double weg = 2.0 * w / (mt.ebar * mt.gbar);
    for (int p = 0; p < n; ++p) {
      mdl.lin[p] += w * (uu_a[p] * int_dd[p] + uu_b[p] * int_tt[p]) / mt.ebar +
                    w * (vv_a[p] * int_dd[p] + vv_b[p] * int_tt[p]) / mt.gbar;
      for (int q = 0; q < n; ++q) {
        const size_t pq = static_cast<size_t>(p) * n + q;
        const size_t qp = static_cast<size_t>(q) * n + p;  // int TT_p DD_q = i_dd_tt transposed
        const double uu = uu_a[p] * uu_a[q] * i_dd_dd[pq] + uu_a[p] * uu_b[q] * i_dd_tt[pq] +
                          uu_b[p] * uu_a[q] * i_dd_tt[qp] + uu_b[p] * uu_b[q] * i_tt_tt[pq];
        const double vv = vv_a[p] * vv_a[q] * i_dd_dd[pq] + vv_a[p] * vv_b[q] * i_dd_tt[pq] +
                          vv_b[p] * vv_a[q] * i_dd_tt[qp] + vv_b[p] * vv_b[q] * i_tt_tt[pq];
        const double uv = uv_a[p] * uv_a[q] * i_dt_dt[pq] + uv_a[p] * uv_b[q] * i_dt_td[pq] +
                          uv_b[p] * uv_a[q] * i_dt_td[qp] + uv_b[p] * uv_b[q] * i_td_td[pq];
        mdl.gram[pq] += wee * uu + wgg * vv + weg * uv;
      }
    }
  });
  const double vol = kTwoPi * vol_w;
  mdl.constant = 2.0 * vol;  // || ghat ||^2 = int <g, g> dV = 2 Vol in dimension 2
  mdl.normalizer = std::sqrt(2.0 * vol);

  CertificateResult res = solve_psd_model(mdl, mesh, options);
  attach_recovered(res, cluster);
  return res;
}

// ---------------------------------------------------------------------------

ConditionsReport verify_conditions(const std::vector<ModeCombo>& combo,
                                   const AnnulusDomain& domain, const Mesh1D& mesh, double mu,
                                   int n_psi, std::uint64_t seed) {
  ConditionsReport rep;
  const int nu = 32;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double v = 0.5 * (mesh.nodes[e] + mesh.nodes[e + 1]);
    const MetricAt mt = metric_at(domain, v);
    for (int iu = 0; iu < nu; ++iu) {
      const double u = kTwoPi * iu / nu;
      double density = 0.0, energy = 0.0;
      for (const auto& c : combo) {
        double f = 0.0, fu = 0.0, fv = 0.0;
        for (const auto& t : c.terms) {
          const double a = 0.5 * (t.radial[e] + t.radial[e + 1]);
          const double apr = p1_slope(t.radial, mesh, e);
          const double md = static_cast<double>(t.m);
          const double trig = t.parity == Parity::cos ? std::cos(md * u) : std::sin(md * u);
          const double dtrig =
              t.parity == Parity::cos ? -md * std::sin(md * u) : md * std::cos(md * u);
          f += a * trig;
          fu += a * dtrig;
          fv += apr * trig;
        }
        density += f * f;
        energy += fu * fu / mt.ebar + fv * fv / mt.gbar;
      }
      rep.sup_defect_density = std::max(rep.sup_defect_density, std::fabs(mu * density - 1.0));
      rep.sup_defect_energy = std::max(rep.sup_defect_energy, std::fabs(energy - 1.0));
    }
  }

  const double vol = spectral::metric_volume(domain, mesh);
  for (int i = 0; i < n_psi; ++i) {
    const auto psi = ConformalPerturbation::seeded(seed, i, domain, mesh);
    double acc = 0.0;
    for (const auto& c : combo) acc += p_form(c, psi, domain, mesh, mu);
    rep.trace_values.push_back(std::fabs(acc));
    rep.trace_bounds.push_back(1e-6 * l2_norm_dV(psi.psi, domain, mesh) * std::sqrt(vol));
  }
  return rep;
}

double normalized_eigenvalue(const spectral::Spectrum& spectrum, int k) {
  const int idx = entry_index(spectrum.bc, k);
  if (idx >= static_cast<int>(spectrum.entries.size()))
    fail(errc::domain, "eigenvalue index beyond the computed spectrum");
  return spectrum.entries[idx].value * spectrum.volume;
}

ScanReport extremality_scan(const AnnulusDomain& domain, const Mesh1D& mesh, int k,
                            const ConformalPerturbation& psi, std::vector<double> t_grid,
                            const SpectrumOptions& options) {
  require_mesh_match(psi.psi, mesh);
  {
    const double mean = std::fabs(integral_dV(psi.psi, domain, mesh));
    const double scale = l2_norm_dV(psi.psi, domain, mesh) *
                             std::sqrt(spectral::metric_volume(domain, mesh)) +
                         DBL_MIN;
    if (mean > 1e-10 * scale) fail(errc::precondition, "scan direction must be mean-zero");
  }
  bool has_zero = false;
  for (double t : t_grid) has_zero = has_zero || t == 0.0;
  if (!has_zero) t_grid.push_back(0.0);
  std::sort(t_grid.begin(), t_grid.end());
  const int nt = static_cast<int>(t_grid.size());
  const double t_max = std::max(std::fabs(t_grid.front()), std::fabs(t_grid.back()));
  for (int i = 0; i < nt; ++i)
    if (std::fabs(t_grid[i] + t_grid[nt - 1 - i]) > 1e-12 * (1.0 + t_max))
      fail(errc::precondition, "scan grid must be symmetric around 0");

  const int idx = entry_index(domain.bc, k);
  ScanReport rep;
  rep.t_grid = t_grid;
  rep.values.resize(nt);
  for (int i = 0; i < nt; ++i) {
    const auto coeffs = spectral::conformal_coeffs(domain, mesh, psi.psi, t_grid[i]);
    const auto spec = spectral::spectrum(coeffs, domain.bc, mesh, idx + 3, options);
    rep.values[i] = spec.entries[idx].value * spec.volume;
  }
  const double f0 = rep.values[nt / 2];  // t = 0 sits in the middle of a symmetric grid

  // Least-squares fit dF = s t + q t^2 through the origin, per side.
  auto fit_side = [&](bool positive, double& slope, double& quad) {
    double s2 = 0.0, s3 = 0.0, s4 = 0.0, r1 = 0.0, r2 = 0.0;
    int count = 0;
    for (int i = 0; i < nt; ++i) {
      const double t = rep.t_grid[i];
      if (t == 0.0 || (t > 0.0) != positive) continue;
      const double df = rep.values[i] - f0;
      s2 += t * t;
      s3 += t * t * t;
      s4 += t * t * t * t;
      r1 += df * t;
      r2 += df * t * t;
      ++count;
    }
    if (count == 0) fail(errc::precondition, "scan grid needs points on both sides of 0");
    if (count == 1) {
      slope = r1 / s2;
      quad = 0.0;
      return;
    }
    const double det = s2 * s4 - s3 * s3;
    slope = (r1 * s4 - r2 * s3) / det;
    quad = (r2 * s2 - r1 * s3) / det;
  };
  fit_side(true, rep.slope_plus, rep.quad_plus);
  fit_side(false, rep.slope_minus, rep.quad_minus);

  rep.tol_slope = 1e-6 * std::max(std::fabs(f0), 1.0) +
                  0.75 * std::max(std::fabs(rep.quad_plus), std::fabs(rep.quad_minus)) * t_max;
  const bool max_ok = rep.slope_plus <= rep.tol_slope && rep.slope_minus >= -rep.tol_slope;
  const bool min_ok = rep.slope_plus >= -rep.tol_slope && rep.slope_minus <= rep.tol_slope;
  rep.consistent_with_max = max_ok;
  rep.pattern = max_ok ? ScanPattern::max_type
                       : (min_ok ? ScanPattern::min_type : ScanPattern::indeterminate);
  return rep;
}

}  // namespace exs::extremal
