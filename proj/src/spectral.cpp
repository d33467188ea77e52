// Fourier-mode decomposition of the Laplace-Beltrami eigenproblem on a
// rotationally symmetric annulus. Each angular mode m yields a generalized
// symmetric tridiagonal eigenproblem K a = value M a, solved by Sturm-sequence
// bisection on LDL^T inertia counts followed by inverse iteration.

#include "exs/spectral.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <future>
#include <limits>
#include <string>
#include <tuple>

#include "exs/errors.hpp"
#include "exs/rng.hpp"

namespace exs::spectral {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
// 2-point Gauss on [0,1].
constexpr double kGaussXi[2] = {0.21132486540518711775, 0.78867513459481288225};
constexpr double kGaussW[2] = {0.5, 0.5};

}  // namespace

Mesh1D Mesh1D::uniform(double v_a, double v_b, int n_elements) {
  if (!(v_a < v_b)) fail(errc::domain, "mesh requires v_a < v_b");
  if (n_elements < 4) fail(errc::domain, "mesh needs at least 4 elements");
  Mesh1D mesh;
  mesh.nodes.resize(n_elements + 1);
  const double h = (v_b - v_a) / n_elements;
  for (int i = 0; i <= n_elements; ++i) mesh.nodes[i] = v_a + h * i;
  mesh.nodes.back() = v_b;
  return mesh;
}

Mesh1D Mesh1D::from_nodes(std::vector<double> nodes) {
  if (nodes.size() < 5) fail(errc::domain, "mesh needs at least 4 elements");
  for (size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) fail(errc::domain, "mesh nodes must increase strictly");
  Mesh1D mesh;
  mesh.nodes = std::move(nodes);
  return mesh;
}

double Mesh1D::spacing_max() const {
  double h = 0.0;
  for (size_t i = 1; i < nodes.size(); ++i) h = std::max(h, nodes[i] - nodes[i - 1]);
  return h;
}

AssemblyCoeffs domain_coeffs(const AnnulusDomain& domain) {
  AssemblyCoeffs c;
  const auto prof = domain.profile;
  c.grad = [prof](double v) {
    const auto p = prof(v);
    return p.x / std::sqrt(p.big_g);
  };
  c.ang = [prof](double v) {
    const auto p = prof(v);
    return std::sqrt(p.big_g) / p.x;
  };
  c.mass = [domain](double v) {
    const auto p = domain.profile(v);
    return domain.rho_at(p) * p.x * std::sqrt(p.big_g);
  };
  return c;
}

namespace {

double interp_nodal(const Mesh1D& mesh, const std::vector<double>& values, double v) {
  const auto& nd = mesh.nodes;
  auto it = std::upper_bound(nd.begin(), nd.end(), v);
  int e = static_cast<int>(it - nd.begin()) - 1;
  e = std::clamp(e, 0, mesh.n_elements() - 1);
  const double h = nd[e + 1] - nd[e];
  const double xi = (v - nd[e]) / h;
  return values[e] * (1.0 - xi) + values[e + 1] * xi;
}

}  // namespace

AssemblyCoeffs conformal_coeffs(const AnnulusDomain& domain, const Mesh1D& mesh,
                                const std::vector<double>& psi_nodes, double t) {
  if (psi_nodes.size() != mesh.nodes.size())
    fail(errc::precondition, "conformal factor not sampled on this mesh");
  AssemblyCoeffs c = domain_coeffs(domain);
  auto base_mass = c.mass;
  c.mass = [base_mass, mesh, psi_nodes, t](double v) {
    return base_mass(v) * std::exp(t * interp_nodal(mesh, psi_nodes, v));
  };
  return c;
}

AssemblyCoeffs tensor_coeffs(const AnnulusDomain& domain,
                             const std::function<double(double)>& h_uu,
                             const std::function<double(double)>& h_vv, double t) {
  AssemblyCoeffs c;
  const AnnulusDomain d = domain;
  auto full = [d, h_uu, h_vv, t](double v) {
    const auto p = d.profile(v);
    const double rho = d.rho_at(p);
    const double ebar = rho * p.big_e + t * h_uu(v);
    const double gbar = rho * p.big_g + t * h_vv(v);
    if (!(ebar > 0.0) || !(gbar > 0.0))
      fail(errc::assembly_integrity, "perturbed metric lost positivity");
    return std::pair<double, double>(ebar, gbar);
  };
  c.grad = [full](double v) {
    auto [e, g] = full(v);
    return std::sqrt(e / g);
  };
  c.ang = [full](double v) {
    auto [e, g] = full(v);
    return std::sqrt(g / e);
  };
  c.mass = [full](double v) {
    auto [e, g] = full(v);
    return std::sqrt(e * g);
  };
  return c;
}

FourierBlock assemble_block(const AnnulusDomain& domain, int m, const Mesh1D& mesh) {
  return assemble_block(domain_coeffs(domain), domain.bc, m, mesh);
}

FourierBlock assemble_block(const AssemblyCoeffs& coeffs, BoundaryCondition bc, int m,
                            const Mesh1D& mesh) {
  if (m < 0) fail(errc::domain, "angular mode must be nonnegative");
  const int ne = mesh.n_elements();
  if (ne < 4) fail(errc::domain, "mesh needs at least 4 elements");

  FourierBlock blk;
  blk.m = m;
  blk.bc = bc;
  blk.c_m = (m == 0) ? 2.0 * kPi : kPi;
  blk.n_nodes = ne + 1;
  blk.first_active = (bc == BoundaryCondition::dirichlet) ? 1 : 0;
  blk.n_active = (bc == BoundaryCondition::dirichlet) ? blk.n_nodes - 2 : blk.n_nodes;
  if (blk.n_active < 2)
    fail(errc::insufficient_mesh, "fewer than 2 active nodes for this boundary condition");

  blk.e_grad.resize(ne);
  blk.e_ang.resize(ne);
  blk.e_mass.resize(ne);

  const double m2 = static_cast<double>(m) * static_cast<double>(m);
  for (int e = 0; e < ne; ++e) {
    const double va = mesh.nodes[e], vb = mesh.nodes[e + 1];
    const double h = vb - va;
    double grad_sum = 0.0;
    std::array<double, 3> ang{0.0, 0.0, 0.0}, mass{0.0, 0.0, 0.0};
    for (int g = 0; g < 2; ++g) {
      const double xi = kGaussXi[g];
      const double w = kGaussW[g] * h;
      const double v = va + xi * h;
      const double p1 = 1.0 - xi, p2 = xi;
      grad_sum += w * coeffs.grad(v);
      const double ca = w * coeffs.ang(v);
      ang[0] += ca * p1 * p1;
      ang[1] += ca * p1 * p2;
      ang[2] += ca * p2 * p2;
      const double cm = w * coeffs.mass(v);
      mass[0] += cm * p1 * p1;
      mass[1] += cm * p1 * p2;
      mass[2] += cm * p2 * p2;
    }
    blk.e_grad[e] = blk.c_m * grad_sum / (h * h);
    for (int i = 0; i < 3; ++i) {
      blk.e_ang[e][i] = blk.c_m * m2 * ang[i];
      blk.e_mass[e][i] = blk.c_m * mass[i];
    }
  }

  blk.k_diag.assign(blk.n_active, 0.0);
  blk.k_off.assign(std::max(blk.n_active - 1, 0), 0.0);
  blk.m_diag.assign(blk.n_active, 0.0);
  blk.m_off.assign(std::max(blk.n_active - 1, 0), 0.0);
  for (int e = 0; e < ne; ++e) {
    const int ai = e - blk.first_active;
    const int aj = ai + 1;
    const bool ia = ai >= 0 && ai < blk.n_active;
    const bool ja = aj >= 0 && aj < blk.n_active;
    if (ia) blk.k_diag[ai] += blk.e_grad[e] + blk.e_ang[e][0];
    if (ja) blk.k_diag[aj] += blk.e_grad[e] + blk.e_ang[e][2];
    if (ia && ja) blk.k_off[ai] += -blk.e_grad[e] + blk.e_ang[e][1];
    if (ia) blk.m_diag[ai] += blk.e_mass[e][0];
    if (ja) blk.m_diag[aj] += blk.e_mass[e][2];
    if (ia && ja) blk.m_off[ai] += blk.e_mass[e][1];
  }
  return blk;
}

namespace {

// y += contribution of element e applied to (xi, xj).
inline void element_apply(double grad, const std::array<double, 3>& quad, double xi, double xj,
                          double& yi, double& yj) {
  const double d = grad * (xi - xj);
  yi += d + quad[0] * xi + quad[1] * xj;
  yj += -d + quad[1] * xi + quad[2] * xj;
}

}  // namespace

void FourierBlock::apply_stiffness(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(n_active, 0.0);
  const int ne = n_nodes - 1;
  for (int e = 0; e < ne; ++e) {
    const int ai = e - first_active, aj = ai + 1;
    const double xi = (ai >= 0 && ai < n_active) ? x[ai] : 0.0;
    const double xj = (aj >= 0 && aj < n_active) ? x[aj] : 0.0;
    double yi = 0.0, yj = 0.0;
    element_apply(e_grad[e], e_ang[e], xi, xj, yi, yj);
    if (ai >= 0 && ai < n_active) y[ai] += yi;
    if (aj >= 0 && aj < n_active) y[aj] += yj;
  }
}

void FourierBlock::apply_mass(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(n_active, 0.0);
  const int ne = n_nodes - 1;
  for (int e = 0; e < ne; ++e) {
    const int ai = e - first_active, aj = ai + 1;
    const double xi = (ai >= 0 && ai < n_active) ? x[ai] : 0.0;
    const double xj = (aj >= 0 && aj < n_active) ? x[aj] : 0.0;
    double yi = 0.0, yj = 0.0;
    element_apply(0.0, e_mass[e], xi, xj, yi, yj);
    if (ai >= 0 && ai < n_active) y[ai] += yi;
    if (aj >= 0 && aj < n_active) y[aj] += yj;
  }
}

double FourierBlock::inner_stiffness(const std::vector<double>& x,
                                     const std::vector<double>& y) const {
  std::vector<double> t;
  apply_stiffness(y, t);
  double s = 0.0;
  for (int i = 0; i < n_active; ++i) s += x[i] * t[i];
  return s;
}

double FourierBlock::inner_mass(const std::vector<double>& x, const std::vector<double>& y) const {
  std::vector<double> t;
  apply_mass(y, t);
  double s = 0.0;
  for (int i = 0; i < n_active; ++i) s += x[i] * t[i];
  return s;
}

namespace {

struct Pencil {
  const std::vector<double>&kd, &ko, &md, &mo;
  int n;
  double pivmin;
};

// Inertia count: number of eigenvalues of the pencil below sigma.
int sturm_count(const Pencil& p, double sigma) {
  int count = 0;
  double d = p.kd[0] - sigma * p.md[0];
  if (std::fabs(d) < p.pivmin) d = -p.pivmin;
  if (d < 0.0) ++count;
  for (int i = 1; i < p.n; ++i) {
    const double o = p.ko[i - 1] - sigma * p.mo[i - 1];
    d = (p.kd[i] - sigma * p.md[i]) - o * o / d;
    if (std::fabs(d) < p.pivmin) d = -p.pivmin;
    if (d < 0.0) ++count;
  }
  return count;
}

struct Factorization {
  std::vector<double> d, l;
};

Factorization ldlt_factor(const Pencil& p, double sigma, double clamp) {
  Factorization f;
  f.d.resize(p.n);
  f.l.resize(std::max(p.n - 1, 0));
  double d = p.kd[0] - sigma * p.md[0];
  if (std::fabs(d) < clamp) d = (d < 0.0) ? -clamp : clamp;
  f.d[0] = d;
  for (int i = 1; i < p.n; ++i) {
    const double o = p.ko[i - 1] - sigma * p.mo[i - 1];
    f.l[i - 1] = o / f.d[i - 1];
    d = (p.kd[i] - sigma * p.md[i]) - f.l[i - 1] * o;
    if (std::fabs(d) < clamp) d = (d < 0.0) ? -clamp : clamp;
    f.d[i] = d;
  }
  return f;
}

void ldlt_solve(const Factorization& f, const std::vector<double>& rhs, std::vector<double>& y) {
  const int n = static_cast<int>(f.d.size());
  y = rhs;
  for (int i = 1; i < n; ++i) y[i] -= f.l[i - 1] * y[i - 1];
  for (int i = 0; i < n; ++i) y[i] /= f.d[i];
  for (int i = n - 2; i >= 0; --i) y[i] -= f.l[i] * y[i + 1];
}

double norm2(const std::vector<double>& x) {
  double s = 0.0;
  for (double xi : x) s += xi * xi;
  return std::sqrt(s);
}

void check_mass_spd(const FourierBlock& blk) {
  double d = blk.m_diag[0];
  if (!(d > 0.0)) fail(errc::assembly_integrity, "mass matrix is not positive definite");
  for (int i = 1; i < blk.n_active; ++i) {
    const double o = blk.m_off[i - 1];
    d = blk.m_diag[i] - o * o / d;
    if (!(d > 0.0)) fail(errc::assembly_integrity, "mass matrix is not positive definite");
  }
}

std::vector<double> start_vector(int n, int j, int attempt) {
  rng::SplitMix64 gen(0xE5EED5EEDull + 7919ull * static_cast<std::uint64_t>(j) +
                      104729ull * static_cast<std::uint64_t>(attempt));
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = 1.0 + 0.25 * gen.symmetric();
  return x;
}

std::vector<double> embed_full(const FourierBlock& blk, const std::vector<double>& active) {
  std::vector<double> full(blk.n_nodes, 0.0);
  for (int i = 0; i < blk.n_active; ++i) full[blk.first_active + i] = active[i];
  return full;
}

}  // namespace

std::vector<EigenPair> solve_block(const FourierBlock& blk, int count) {
  if (count < 1) fail(errc::precondition, "eigenvalue count must be at least 1");
  if (count > blk.n_active)
    fail(errc::precondition, "requested more eigenvalues than degrees of freedom");
  check_mass_spd(blk);

  const int n = blk.n_active;
  double offmax = 1.0;
  for (int i = 0; i + 1 < n; ++i)
    offmax = std::max(offmax, std::fabs(blk.k_off[i]) + std::fabs(blk.m_off[i]));
  Pencil pencil{blk.k_diag, blk.k_off, blk.m_diag, blk.m_off, n,
                DBL_MIN / DBL_EPSILON * offmax * offmax};

  // Bracket of the spectrum by doubling on the inertia count.
  double upper = 1.0;
  while (sturm_count(pencil, upper) < count) {
    upper *= 2.0;
    if (upper > 1e60) fail(errc::internal, "eigenvalue bracket expansion failed");
  }
  double lower = -1.0;
  while (sturm_count(pencil, lower) > 0) {
    lower *= 2.0;
    if (lower < -1e60) fail(errc::internal, "eigenvalue bracket expansion failed");
  }

  const bool deflate_constant = (blk.bc == BoundaryCondition::neumann && blk.m == 0);

  std::vector<EigenPair> pairs;
  std::vector<std::vector<double>> vectors;   // converged, active space
  std::vector<std::vector<double>> m_vectors; // M * vector, cached for projections

  double anorm = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = std::fabs(blk.k_diag[i]) + std::fabs(blk.m_diag[i]);
    if (i > 0) row += std::fabs(blk.k_off[i - 1]) + std::fabs(blk.m_off[i - 1]);
    if (i + 1 < n) row += std::fabs(blk.k_off[i]) + std::fabs(blk.m_off[i]);
    anorm = std::max(anorm, row);
  }
  const double clamp = DBL_EPSILON * anorm + pencil.pivmin;

  if (deflate_constant) {
    // Constants span the exact kernel: element stiffness annihilates them by
    // construction, so the pair (0, const) is exact with zero residual.
    std::vector<double> ones(n, 1.0);
    std::vector<double> m_ones;
    blk.apply_mass(ones, m_ones);
    double q = 0.0;
    for (int i = 0; i < n; ++i) q += ones[i] * m_ones[i];
    const double c = 1.0 / std::sqrt(q);
    std::vector<double> vec(n, c);
    for (double& w : m_ones) w *= c;
    EigenPair p;
    p.value = 0.0;
    p.m = blk.m;
    p.parity = Parity::cos;
    p.index_in_block = 0;
    p.coeffs = embed_full(blk, vec);
    p.residual = 0.0;
    pairs.push_back(std::move(p));
    vectors.push_back(std::move(vec));
    m_vectors.push_back(std::move(m_ones));
  }

  const int j_begin = deflate_constant ? 1 : 0;
  for (int j = j_begin; j < count; ++j) {
    // Bisection on the inertia count isolates the j-th eigenvalue.
    double a = lower, b = upper;
    for (int it = 0; it < 220 && (b - a) > 2.0 * DBL_EPSILON * (std::fabs(a) + std::fabs(b)) + 1e-280;
         ++it) {
      const double mid = 0.5 * (a + b);
      if (sturm_count(pencil, mid) > j) b = mid; else a = mid;
    }
    const double sigma = 0.5 * (a + b);

    const Factorization fac = ldlt_factor(pencil, sigma, clamp);

    std::vector<double> x, y, mx, kx, best_vec;
    double best_rel = std::numeric_limits<double>::infinity();
    double best_val = sigma;
    int attempt = 0;
    x = start_vector(n, j, attempt);
    for (int it = 0; it < 40; ++it) {
      blk.apply_mass(x, mx);
      ldlt_solve(fac, mx, y);
      // Project out converged directions (twice, for stability).
      for (int pass = 0; pass < 2; ++pass) {
        for (size_t k = 0; k < vectors.size(); ++k) {
          double proj = 0.0;
          for (int i = 0; i < n; ++i) proj += m_vectors[k][i] * y[i];
          for (int i = 0; i < n; ++i) y[i] -= proj * vectors[k][i];
        }
      }
      blk.apply_mass(y, mx);
      double q = 0.0;
      for (int i = 0; i < n; ++i) q += y[i] * mx[i];
      if (!(q > 0.0) || !std::isfinite(q)) {
        x = start_vector(n, j, ++attempt);
        continue;
      }
      const double inv = 1.0 / std::sqrt(q);
      for (int i = 0; i < n; ++i) y[i] *= inv;
      blk.apply_stiffness(y, kx);
      blk.apply_mass(y, mx);
      double rayleigh = 0.0;
      for (int i = 0; i < n; ++i) rayleigh += y[i] * kx[i];
      double res = 0.0;
      for (int i = 0; i < n; ++i) {
        const double r = kx[i] - rayleigh * mx[i];
        res += r * r;
      }
      res = std::sqrt(res);
      const double scale = std::max(norm2(kx), std::fabs(rayleigh) * norm2(mx)) + DBL_MIN;
      const double rel = res / scale;
      if (rel < best_rel) {
        best_rel = rel;
        best_val = rayleigh;
        best_vec = y;
      }
      x = y;
      if (rel <= 1e-13) break;
    }
    if (best_vec.empty()) fail(errc::internal, "inverse iteration failed to produce a vector");

    // Deterministic sign: largest-magnitude entry positive.
    int imax = 0;
    for (int i = 1; i < n; ++i)
      if (std::fabs(best_vec[i]) > std::fabs(best_vec[imax])) imax = i;
    if (best_vec[imax] < 0.0)
      for (double& w : best_vec) w = -w;

    blk.apply_stiffness(best_vec, kx);
    const double knorm = norm2(kx);
    blk.apply_mass(best_vec, mx);
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = kx[i] - best_val * mx[i];
      res += r * r;
    }
    EigenPair p;
    p.value = best_val;
    p.m = blk.m;
    p.parity = Parity::cos;
    p.index_in_block = j;
    p.coeffs = embed_full(blk, best_vec);
    p.residual = std::sqrt(res) / (knorm + DBL_MIN);
    pairs.push_back(std::move(p));
    vectors.push_back(best_vec);
    m_vectors.push_back(mx);
  }

  for (size_t j = 1; j < pairs.size(); ++j)
    if (pairs[j].value < pairs[j - 1].value - DBL_EPSILON * anorm)
      fail(errc::internal, "block eigenvalues came out of order");
  return pairs;
}

double Spectrum::cluster_tol(double value) const {
  return std::max(1e-8, 10.0 * mesh_h * mesh_h * std::fabs(value));
}

int Spectrum::nearest_cluster(double target) const {
  if (clusters.empty()) fail(errc::precondition, "empty spectrum has no clusters");
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < clusters.size(); ++c) {
    double mean = 0.0;
    for (int i = clusters[c].first; i <= clusters[c].second; ++i) mean += entries[i].value;
    mean /= (clusters[c].second - clusters[c].first + 1);
    const double dist = std::fabs(mean - target);
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double metric_volume(const AssemblyCoeffs& coeffs, const Mesh1D& mesh) {
  double total = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double va = mesh.nodes[e], h = mesh.nodes[e + 1] - mesh.nodes[e];
    for (int g = 0; g < 2; ++g) total += kGaussW[g] * h * coeffs.mass(va + kGaussXi[g] * h);
  }
  return 2.0 * kPi * total;
}

double metric_volume(const AnnulusDomain& domain, const Mesh1D& mesh) {
  return metric_volume(domain_coeffs(domain), mesh);
}

namespace {

std::vector<EigenPair> expand_parities(std::vector<EigenPair> block_pairs) {
  std::vector<EigenPair> out;
  for (auto& p : block_pairs) {
    if (p.m == 0) {
      out.push_back(std::move(p));
    } else {
      EigenPair twin = p;
      twin.parity = Parity::sin;
      out.push_back(std::move(p));
      out.push_back(std::move(twin));
    }
  }
  return out;
}

void sort_entries(std::vector<EigenPair>& entries) {
  std::sort(entries.begin(), entries.end(), [](const EigenPair& a, const EigenPair& b) {
    return std::make_tuple(a.value, a.m, static_cast<int>(a.parity), a.index_in_block) <
           std::make_tuple(b.value, b.m, static_cast<int>(b.parity), b.index_in_block);
  });
}

}  // namespace

Spectrum spectrum(const AssemblyCoeffs& coeffs, BoundaryCondition bc, const Mesh1D& mesh,
                  int count, const SpectrumOptions& options) {
  if (count < 1) fail(errc::precondition, "spectrum count must be at least 1");

  // Rigorous mode lower bound: the discrete Rayleigh quotient of a mode-m
  // function is at least m^2 min over quadrature points of ang/mass = 1/(rho E).
  double min_inv_rho_e = std::numeric_limits<double>::infinity();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const double va = mesh.nodes[e], h = mesh.nodes[e + 1] - mesh.nodes[e];
    for (int g = 0; g < 2; ++g) {
      const double v = va + kGaussXi[g] * h;
      min_inv_rho_e = std::min(min_inv_rho_e, coeffs.ang(v) / coeffs.mass(v));
    }
  }

  Spectrum spec;
  spec.bc = bc;
  spec.mesh_h = mesh.spacing_max();
  spec.volume = metric_volume(coeffs, mesh);

  auto solve_mode = [&](int m) {
    FourierBlock blk = assemble_block(coeffs, bc, m, mesh);
    const int want = std::min(count, blk.n_active);
    return expand_parities(solve_block(blk, want));
  };

  std::vector<EigenPair> merged;
  bool closed = false;
  int m = 0;
  const int threads = std::max(options.threads, 1);
  while (!closed) {
    const int batch_end = std::min(m + threads, options.m_max_cap + 1);
    std::vector<std::vector<EigenPair>> batch(batch_end - m);
    if (threads > 1 && batch_end - m > 1) {
      std::vector<std::future<std::vector<EigenPair>>> futs;
      futs.reserve(batch.size());
      for (int mm = m; mm < batch_end; ++mm)
        futs.push_back(std::async(std::launch::async, solve_mode, mm));
      for (size_t i = 0; i < futs.size(); ++i) batch[i] = futs[i].get();
    } else {
      for (int mm = m; mm < batch_end; ++mm) batch[mm - m] = solve_mode(mm);
    }
    for (int mm = m; mm < batch_end && !closed; ++mm) {
      auto& pairs = batch[mm - m];
      merged.insert(merged.end(), std::make_move_iterator(pairs.begin()),
                    std::make_move_iterator(pairs.end()));
      sort_entries(merged);
      spec.m_max_used = mm;
      if (static_cast<int>(merged.size()) >= count) {
        const double kth = merged[count - 1].value;
        const double next_lb =
            static_cast<double>(mm + 1) * static_cast<double>(mm + 1) * min_inv_rho_e;
        if (next_lb > kth) closed = true;
      }
    }
    m = batch_end;
    if (!closed && m > options.m_max_cap) {
      const std::string msg = "spectrum incomplete: angular mode cap m_max = " +
                              std::to_string(options.m_max_cap) + " reached";
      if (!options.allow_incomplete) fail(errc::incomplete_spectrum, msg);
      spec.complete = false;
      spec.warning = msg;
      break;
    }
  }

  if (static_cast<int>(merged.size()) > count) merged.resize(count);
  spec.entries = std::move(merged);

  // Degeneracy clusters: consecutive values within cluster_tol.
  int start = 0;
  for (int i = 1; i <= static_cast<int>(spec.entries.size()); ++i) {
    const bool split =
        i == static_cast<int>(spec.entries.size()) ||
        spec.entries[i].value - spec.entries[i - 1].value >
            spec.cluster_tol(std::max(std::fabs(spec.entries[i].value),
                                      std::fabs(spec.entries[i - 1].value)));
    if (split) {
      spec.clusters.emplace_back(start, i - 1);
      start = i;
    }
  }
  return spec;
}

Spectrum spectrum(const AnnulusDomain& domain, const Mesh1D& mesh, int count,
                  const SpectrumOptions& options) {
  return spectrum(domain_coeffs(domain), domain.bc, mesh, count, options);
}

PointValue eval_eigenfunction(const EigenPair& pair, const AnnulusDomain& domain,
                              const Mesh1D& mesh, double u, double v) {
  if (v < domain.v_a || v > domain.v_b)
    fail(errc::domain, "evaluation point outside domain");
  const auto& nd = mesh.nodes;
  auto it = std::upper_bound(nd.begin(), nd.end(), v);
  int e = static_cast<int>(it - nd.begin()) - 1;
  e = std::clamp(e, 0, mesh.n_elements() - 1);
  const double h = nd[e + 1] - nd[e];
  const double xi = (v - nd[e]) / h;
  const double a = pair.coeffs[e] * (1.0 - xi) + pair.coeffs[e + 1] * xi;
  const double ap = (pair.coeffs[e + 1] - pair.coeffs[e]) / h;

  const auto p = domain.profile(v);
  const double rho = domain.rho_at(p);
  const double md = static_cast<double>(pair.m);
  const double trig = pair.parity == Parity::cos ? std::cos(md * u) : std::sin(md * u);
  const double cotrig = pair.parity == Parity::cos ? std::sin(md * u) : std::cos(md * u);

  PointValue out;
  out.value = a * trig;
  out.grad_sq = (ap * ap / p.big_g * trig * trig + md * md * a * a / p.big_e * cotrig * cotrig) / rho;
  return out;
}

}  // namespace exs::spectral
