#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "exs/spectral.hpp"

namespace exs::extremal {

using revolution::AnnulusDomain;
using revolution::BoundaryCondition;
using spectral::EigenPair;
using spectral::Mesh1D;
using spectral::Parity;
using spectral::SpectrumOptions;

// Finite combination of separated eigenfunctions a_t(v) * trig(m_t u).
struct ModeTerm {
  int m = 0;
  Parity parity = Parity::cos;
  std::vector<double> radial;  // nodal values on the full mesh
};

struct ModeCombo {
  std::vector<ModeTerm> terms;

  static ModeCombo from_pair(const EigenPair& pair) {
    return ModeCombo{{ModeTerm{pair.m, pair.parity, pair.coeffs}}};
  }
};

// Rotationally symmetric conformal direction psi(v), piecewise linear on the
// mesh. When mean_zero is set the ghat-mean has been subtracted.
struct ConformalPerturbation {
  std::vector<double> psi;
  bool mean_zero = false;

  static ConformalPerturbation from_samples(std::vector<double> nodal, bool make_mean_zero,
                                            const AnnulusDomain& domain, const Mesh1D& mesh);
  static ConformalPerturbation from_function(const std::function<double(double)>& f,
                                             bool make_mean_zero, const AnnulusDomain& domain,
                                             const Mesh1D& mesh);
  static ConformalPerturbation constant(double c, const Mesh1D& mesh);
  // Reproducible low-frequency cosine mix, mean-zero.
  static ConformalPerturbation seeded(std::uint64_t seed, int index, const AnnulusDomain& domain,
                                      const Mesh1D& mesh);
};

// Diagonal rotationally symmetric metric direction h = h_uu du^2 + h_vv dv^2.
struct TensorPerturbation {
  std::function<double(double)> h_uu;
  std::function<double(double)> h_vv;

  static TensorPerturbation zero();
  // h = ghat itself (h_uu = rho E, h_vv = rho G).
  static TensorPerturbation metric(const AnnulusDomain& domain);
};

// int f dV_ghat and the L^2(ghat) norm for nodal data, by the mass quadrature.
double integral_dV(const std::vector<double>& nodal, const AnnulusDomain& domain,
                   const Mesh1D& mesh);
double l2_norm_dV(const std::vector<double>& nodal, const AnnulusDomain& domain,
                  const Mesh1D& mesh);

// Quadratic forms from the eigenvalue derivative formulas, evaluated on a
// combination u with eigenvalue `lambda`:
//   P_psi(u) = -int [ (2-n)/2 |grad u|^2 + (n lambda / 2) u^2 ] psi dV
//   Q_h(u)   = -int < du (x) du - (|grad u|^2 - lambda u^2) g/2 , h > dV
// with n = 2, so p(u) reduces to lambda u^2.
double p_form(const ModeCombo& u, const ConformalPerturbation& psi, const AnnulusDomain& domain,
              const Mesh1D& mesh, double lambda);
double q_form(const ModeCombo& u, const TensorPerturbation& h, const AnnulusDomain& domain,
              const Mesh1D& mesh, double lambda);

struct FormMatrix {
  int d = 0;
  std::vector<double> entries;  // row-major d x d, symmetric

  double at(int i, int j) const { return entries[static_cast<size_t>(i) * d + j]; }
};

FormMatrix conformal_form_matrix(std::span<const EigenPair> basis,
                                 const ConformalPerturbation& psi, const AnnulusDomain& domain,
                                 const Mesh1D& mesh, double lambda);
FormMatrix tensor_form_matrix(std::span<const EigenPair> basis, const TensorPerturbation& h,
                              const AnnulusDomain& domain, const Mesh1D& mesh, double lambda);

// Merged-spectrum position of the eigenvalue index k in the usual counting:
// Neumann mu_k starts from mu_0 at position 0, Dirichlet lambda_k from
// lambda_1 at position 0.
int entry_index(BoundaryCondition bc, int k);

struct DerivativeCheckReport {
  int k = 0;
  int m = 0;
  Parity parity = Parity::cos;
  int index_in_block = 0;
  double lambda0 = 0.0;
  double formula = 0.0;
  std::vector<double> steps;
  std::vector<double> fd;
  std::vector<double> rel_err;
  double richardson = 0.0;
  double richardson_rel_err = 0.0;
};

// Central finite differences of the tracked eigenvalue branch along
// ghat_t = exp(t psi) ghat, against the closed-form derivative -int p(u) psi dV.
DerivativeCheckReport conformal_derivative_check(const AnnulusDomain& domain, const Mesh1D& mesh,
                                                 int k, const ConformalPerturbation& psi,
                                                 std::vector<double> steps,
                                                 const SpectrumOptions& options = {});
// Same along ghat_t = (Ebar + t h_uu) du^2 + (Gbar + t h_vv) dv^2, against Q_h.
DerivativeCheckReport tensor_derivative_check(const AnnulusDomain& domain, const Mesh1D& mesh,
                                              int k, const TensorPerturbation& h,
                                              std::vector<double> steps,
                                              const SpectrumOptions& options = {});

enum class CertificateStatus { certified, refuted, inconclusive };

inline const char* status_name(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::certified: return "certified";
    case CertificateStatus::refuted: return "refuted";
    default: return "inconclusive";
  }
}

struct CertificateOptions {
  double certify_tol = 0.0;  // 0 -> 50 h^2
  double refute_tol = 0.0;   // 0 -> 10 x certify_tol
  long max_iterations = 100000;
  std::vector<double>* objective_trace = nullptr;  // filled per iteration when set
};

struct CertificateResult {
  int d = 0;
  std::vector<double> S;  // row-major d x d PSD weight matrix
  double residual = 0.0;        // normalized
  double raw_residual = 0.0;    // L^2 value
  double lower_bound = 0.0;     // normalized convexity bound on the PSD minimum
  double certify_tol = 0.0;
  double refute_tol = 0.0;
  CertificateStatus status = CertificateStatus::inconclusive;
  long iterations = 0;
  double s_min_eigenvalue = 0.0;
  std::vector<ModeCombo> recovered;  // u_i = sum_j (S^{1/2})_ij phi_j
};

// PSD least-squares fit of sum_ij S_ij phi_i phi_j to the constant 1/mu
// (condition (i) of the extremality characterization).
CertificateResult extremal_certificate(std::span<const EigenPair> cluster,
                                       const AnnulusDomain& domain, const Mesh1D& mesh, double mu,
                                       CertificateOptions options = {});

// PSD least-squares fit of sum_ij S_ij q(phi_i, phi_j) to the metric tensor
// itself; on surfaces the minimum is strictly positive.
CertificateResult global_feasibility_residual(std::span<const EigenPair> cluster,
                                              const AnnulusDomain& domain, const Mesh1D& mesh,
                                              double mu, CertificateOptions options = {});

struct ConditionsReport {
  double sup_defect_density = 0.0;  // sup |sum u_i^2 - 1/mu| scaled by mu
  double sup_defect_energy = 0.0;   // sup |sum |grad u_i|^2 - 1|
  std::vector<double> trace_values;  // |sum_i P_psi(u_i)| per seeded psi
  std::vector<double> trace_bounds;  // 1e-6 ||psi|| sqrt(Vol) per seeded psi

  bool trace_ok() const {
    for (size_t i = 0; i < trace_values.size(); ++i)
      if (trace_values[i] > trace_bounds[i]) return false;
    return true;
  }
};

ConditionsReport verify_conditions(const std::vector<ModeCombo>& combo,
                                   const AnnulusDomain& domain, const Mesh1D& mesh, double mu,
                                   int n_psi = 5, std::uint64_t seed = 0xE16);

double normalized_eigenvalue(const spectral::Spectrum& spectrum, int k);

enum class ScanPattern { max_type, min_type, indeterminate };

struct ScanReport {
  std::vector<double> t_grid;
  std::vector<double> values;  // normalized eigenvalue F(t)
  double slope_plus = 0.0, slope_minus = 0.0;
  double quad_plus = 0.0, quad_minus = 0.0;
  double tol_slope = 0.0;
  ScanPattern pattern = ScanPattern::indeterminate;
  bool consistent_with_max = false;
};

// Normalized k-th eigenvalue along exp(t psi) ghat over a symmetric t-grid,
// with one-sided slope fits at 0. Report-only: a max-type pattern is
// consistent with extremality but cannot confirm it.
ScanReport extremality_scan(const AnnulusDomain& domain, const Mesh1D& mesh, int k,
                            const ConformalPerturbation& psi, std::vector<double> t_grid,
                            const SpectrumOptions& options = {});

}  // namespace exs::extremal
