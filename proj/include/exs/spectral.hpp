#pragma once

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "exs/revolution.hpp"

namespace exs::spectral {

using revolution::AnnulusDomain;
using revolution::BoundaryCondition;

struct Mesh1D {
  std::vector<double> nodes;

  static Mesh1D uniform(double v_a, double v_b, int n_elements);
  static Mesh1D from_nodes(std::vector<double> nodes);

  int n_elements() const { return static_cast<int>(nodes.size()) - 1; }
  double spacing_max() const;
};

enum class Parity { cos, sin };

inline const char* parity_name(Parity p) { return p == Parity::cos ? "cos" : "sin"; }

// Coefficient functions of the separated 1D forms for angular mode m:
//   K(a,b) = c_m int [ a' b' grad(v) + m^2 a b ang(v) ] dv
//   M(a,b) = c_m int a b mass(v) dv
// For a domain with metric rho (E du^2 + G dv^2): grad = x/sqrt(G),
// ang = sqrt(G)/x and mass = rho x sqrt(G). The stiffness coefficients are
// built from E and G only, so K never sees the conformal weight.
struct AssemblyCoeffs {
  std::function<double(double)> grad;
  std::function<double(double)> ang;
  std::function<double(double)> mass;
};

AssemblyCoeffs domain_coeffs(const AnnulusDomain& domain);
// mass multiplied by exp(t psi(v)) with psi piecewise linear on the mesh.
AssemblyCoeffs conformal_coeffs(const AnnulusDomain& domain, const Mesh1D& mesh,
                                const std::vector<double>& psi_nodes, double t);
// metric (Ebar + t h_uu) du^2 + (Gbar + t h_vv) dv^2 with Ebar = rho E, Gbar = rho G.
AssemblyCoeffs tensor_coeffs(const AnnulusDomain& domain,
                             const std::function<double(double)>& h_uu,
                             const std::function<double(double)>& h_vv, double t);

// Piecewise-linear discretization of one angular mode: symmetric tridiagonal
// stiffness K (positive semidefinite) and mass M (positive definite).
// Dirichlet boundary nodes are eliminated; Neumann is natural.
struct FourierBlock {
  int m = 0;
  BoundaryCondition bc = BoundaryCondition::neumann;
  double c_m = 0.0;
  int n_nodes = 0;
  int first_active = 0;
  int n_active = 0;

  std::vector<double> k_diag, k_off, m_diag, m_off;

  // Element-level data; applying K through these keeps constants exactly in
  // the kernel of the m = 0 Neumann block.
  std::vector<double> e_grad;
  std::vector<std::array<double, 3>> e_ang;   // (11, 12, 22) per element
  std::vector<std::array<double, 3>> e_mass;

  void apply_stiffness(const std::vector<double>& x, std::vector<double>& y) const;
  void apply_mass(const std::vector<double>& x, std::vector<double>& y) const;
  double inner_stiffness(const std::vector<double>& x, const std::vector<double>& y) const;
  double inner_mass(const std::vector<double>& x, const std::vector<double>& y) const;
};

FourierBlock assemble_block(const AnnulusDomain& domain, int m, const Mesh1D& mesh);
FourierBlock assemble_block(const AssemblyCoeffs& coeffs, BoundaryCondition bc, int m,
                            const Mesh1D& mesh);

struct EigenPair {
  double value = 0.0;
  int m = 0;
  Parity parity = Parity::cos;
  int index_in_block = 0;
  std::vector<double> coeffs;  // nodal radial values on the full mesh, M-normalized
  double residual = 0.0;       // ||K a - value M a|| / ||K a||
};

// The `count` smallest eigenpairs of K a = value M a, M-orthonormal,
// deterministic. For the Neumann m = 0 block the zero eigenvalue is deflated
// exactly (constant eigenvector, zero residual).
std::vector<EigenPair> solve_block(const FourierBlock& block, int count);

struct SpectrumOptions {
  int m_max_cap = 64;
  int threads = 1;
  double cluster_floor = 1e-8;
  bool allow_incomplete = false;
};

struct Spectrum {
  std::vector<EigenPair> entries;                 // ascending
  std::vector<std::pair<int, int>> clusters;      // inclusive index ranges
  double volume = 0.0;
  BoundaryCondition bc = BoundaryCondition::neumann;
  int m_max_used = 0;
  double mesh_h = 0.0;
  bool complete = true;
  std::string warning;

  double cluster_tol(double value) const;
  // Cluster whose mean value is closest to `target`.
  int nearest_cluster(double target) const;
};

Spectrum spectrum(const AnnulusDomain& domain, const Mesh1D& mesh, int count,
                  const SpectrumOptions& options = {});
Spectrum spectrum(const AssemblyCoeffs& coeffs, BoundaryCondition bc, const Mesh1D& mesh,
                  int count, const SpectrumOptions& options = {});

double metric_volume(const AnnulusDomain& domain, const Mesh1D& mesh);
double metric_volume(const AssemblyCoeffs& coeffs, const Mesh1D& mesh);

struct PointValue {
  double value = 0.0;
  double grad_sq = 0.0;  // |grad f|^2 in the full metric, conformal weight included
};

PointValue eval_eigenfunction(const EigenPair& pair, const AnnulusDomain& domain,
                              const Mesh1D& mesh, double u, double v);

}  // namespace exs::spectral
