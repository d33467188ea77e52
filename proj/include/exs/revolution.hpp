#pragma once

#include <functional>
#include <vector>

namespace exs::revolution {

enum class BoundaryCondition { neumann, dirichlet };
enum class ConformalWeight { gauss, none };

// One sample of a generating curve v -> (x(v), z(v)) together with the
// induced surface-of-revolution data: metric coefficients E = x^2 and
// G = x'^2 + z'^2, principal curvatures, Gauss map components and the
// Gauss-map energy density rho = k1^2 + k2^2.
struct ProfilePoint {
  double v = 0.0;
  double x = 0.0;
  double xp = 0.0;
  double zp = 0.0;
  double big_e = 0.0;
  double big_g = 0.0;
  double curv = 0.0;  // meridian curvature, the signed curvature of the curve
  double k1 = 0.0;
  double k2 = 0.0;
  double rho = 0.0;
  double n_rad = 0.0;    // z' / sqrt(G)
  double n_axial = 0.0;  // -x' / sqrt(G)
};

// Constant-mean-curvature unduloid with neck radius alpha and bulge radius
// gamma, profile x(v) = sqrt(beta sin(mu v) + delta). The parametrization is
// by arc length, so G(v) = 1 and the period equals pi (alpha + gamma).
class UnduloidSurface {
 public:
  UnduloidSurface(double alpha, double gamma);

  double alpha() const noexcept { return alpha_; }
  double gamma() const noexcept { return gamma_; }
  double mu() const noexcept { return mu_; }
  double kappa2() const noexcept { return kappa2_; }
  double beta() const noexcept { return beta_; }
  double delta() const noexcept { return delta_; }
  double period() const noexcept { return period_; }

  ProfilePoint sample(double v) const;
  double height(double v) const;  // z(v), via incomplete elliptic integrals

  // All zeros of the meridian curvature in [v_lo, v_hi], ascending, from the
  // closed-form inversion sin(mu v) = -(gamma - alpha)/(gamma + alpha).
  std::vector<double> curvature_zeros(double v_lo, double v_hi) const;

 private:
  double alpha_, gamma_, mu_, kappa2_, beta_, delta_, period_;
};

inline UnduloidSurface unduloid(double alpha, double gamma) { return {alpha, gamma}; }

// Profile defined by user-supplied evaluators; second derivatives for the
// curvature are formed by central differences of radius_d / height_d.
struct GenericProfile {
  std::function<double(double)> radius;    // x(v) > 0
  std::function<double(double)> radius_d;  // x'(v)
  std::function<double(double)> height_d;  // z'(v)
  std::function<double(double)> height;    // z(v), used only by exports
  double fd_step = 1e-5;

  ProfilePoint sample(double v) const;
};

// Cylinder fixture: x = radius, z = v, so E = radius^2, G = 1 and curv = 0.
GenericProfile flat_profile(double radius = 1.0);

// Bracketing + bisection on curv for profiles without a closed form.
std::vector<double> curvature_zeros_sampled(const std::function<ProfilePoint(double)>& prof,
                                            double v_lo, double v_hi, int n_grid = 256);

// Rotationally symmetric annulus [v_a, v_b] x S^1 carrying the metric
// ghat = rho (E du^2 + G dv^2), where rho is the selected conformal weight.
struct AnnulusDomain {
  std::function<ProfilePoint(double)> profile;
  double v_a = 0.0;
  double v_b = 1.0;
  BoundaryCondition bc = BoundaryCondition::neumann;
  ConformalWeight weight = ConformalWeight::none;
  bool neumann_compatible = false;
  double conformal_scale = 1.0;  // uniform factor c in ghat -> c ghat

  double rho_at(const ProfilePoint& p) const {
    return conformal_scale * (weight == ConformalWeight::gauss ? p.rho : 1.0);
  }
  double length() const { return v_b - v_a; }
};

AnnulusDomain make_domain(const UnduloidSurface& surface, double v_a, double v_b,
                          BoundaryCondition bc,
                          ConformalWeight weight = ConformalWeight::gauss);
AnnulusDomain make_domain(const GenericProfile& profile, double v_a, double v_b,
                          BoundaryCondition bc,
                          ConformalWeight weight = ConformalWeight::none);

// Same domain with metric scaled by c > 0.
AnnulusDomain scaled(AnnulusDomain domain, double c);

}  // namespace exs::revolution
