#include "exs/revolution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "exs/elliptic.hpp"
#include "exs/errors.hpp"

namespace exs::revolution {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

UnduloidSurface::UnduloidSurface(double alpha, double gamma) : alpha_(alpha), gamma_(gamma) {
  if (!(alpha > 0.0) || !(gamma > 0.0) || !std::isfinite(alpha) || !std::isfinite(gamma))
    fail(errc::domain, "unduloid parameters must be positive and finite");
  if (alpha >= gamma)
    fail(errc::degenerate_surface,
         "unduloid requires alpha < gamma (alpha = gamma is the cylinder limit)");
  mu_ = 2.0 / (alpha + gamma);
  kappa2_ = (gamma * gamma - alpha * alpha) / (gamma * gamma);
  beta_ = (gamma * gamma - alpha * alpha) / 2.0;
  delta_ = (gamma * gamma + alpha * alpha) / 2.0;
  period_ = kPi * (alpha + gamma);
}

ProfilePoint UnduloidSurface::sample(double v) const {
  ProfilePoint p;
  p.v = v;
  const double s = std::sin(mu_ * v);
  const double c = std::cos(mu_ * v);
  p.x = std::sqrt(beta_ * s + delta_);
  p.xp = beta_ * mu_ * c / (2.0 * p.x);

  const double phi = 0.5 * mu_ * v - kPi / 4.0;
  const double sphi = std::sin(phi);
  const double w = std::sqrt(1.0 - kappa2_ * sphi * sphi);
  p.zp = 0.5 * mu_ * (alpha_ / w + gamma_ * w);

  p.big_e = p.x * p.x;
  p.big_g = p.xp * p.xp + p.zp * p.zp;

  const double sum = alpha_ + gamma_;
  const double dif = gamma_ - alpha_;
  const double den = alpha_ * alpha_ + gamma_ * gamma_ + (gamma_ * gamma_ - alpha_ * alpha_) * s;
  p.k1 = dif * (dif + sum * s) / (sum * den);
  p.k2 = (sum + dif * s) / den;
  p.curv = p.k1;
  p.rho = p.k1 * p.k1 + p.k2 * p.k2;

  const double sg = std::sqrt(p.big_g);
  p.n_rad = p.zp / sg;
  p.n_axial = -p.xp / sg;
  return p;
}

double UnduloidSurface::height(double v) const {
  const double phi = 0.5 * mu_ * v - kPi / 4.0;
  return alpha_ * elliptic::ellint_f(phi, kappa2_) + gamma_ * elliptic::ellint_e(phi, kappa2_);
}

std::vector<double> UnduloidSurface::curvature_zeros(double v_lo, double v_hi) const {
  if (!(v_lo < v_hi)) return {};
  // k1 = 0  <=>  sin(mu v) = -(gamma - alpha)/(gamma + alpha) =: sigma.
  const double sigma = -(gamma_ - alpha_) / (gamma_ + alpha_);
  const double theta = std::asin(sigma);  // in (-pi/2, 0)
  const double scale = 1.0 / mu_;
  std::vector<double> zeros;
  // Two solution families per period: mu v = theta + 2 pi n and pi - theta + 2 pi n.
  for (const double base : {theta, kPi - theta}) {
    const long long n_lo = static_cast<long long>(std::floor((v_lo * mu_ - base) / (2.0 * kPi))) - 1;
    const long long n_hi = static_cast<long long>(std::ceil((v_hi * mu_ - base) / (2.0 * kPi))) + 1;
    for (long long n = n_lo; n <= n_hi; ++n) {
      const double v = scale * (base + 2.0 * kPi * static_cast<double>(n));
      if (v >= v_lo && v <= v_hi) zeros.push_back(v);
    }
  }
  std::sort(zeros.begin(), zeros.end());
  return zeros;
}

ProfilePoint GenericProfile::sample(double v) const {
  ProfilePoint p;
  p.v = v;
  p.x = radius(v);
  if (!(p.x > 0.0)) fail(errc::domain, "profile radius must stay positive");
  p.xp = radius_d(v);
  p.zp = height_d(v);
  p.big_e = p.x * p.x;
  p.big_g = p.xp * p.xp + p.zp * p.zp;
  if (!(p.big_g > 0.0)) fail(errc::domain, "profile with vanishing speed");

  const double h = fd_step;
  const double xpp = (radius_d(v + h) - radius_d(v - h)) / (2.0 * h);
  const double zpp = (height_d(v + h) - height_d(v - h)) / (2.0 * h);
  const double sg = std::sqrt(p.big_g);
  p.k1 = (p.xp * zpp - xpp * p.zp) / (p.big_g * sg);
  p.k2 = p.zp / (p.x * sg);
  p.curv = p.k1;
  p.rho = p.k1 * p.k1 + p.k2 * p.k2;
  p.n_rad = p.zp / sg;
  p.n_axial = -p.xp / sg;
  return p;
}

GenericProfile flat_profile(double radius) {
  if (!(radius > 0.0)) fail(errc::domain, "flat profile radius must be positive");
  GenericProfile p;
  p.radius = [radius](double) { return radius; };
  p.radius_d = [](double) { return 0.0; };
  p.height_d = [](double) { return 1.0; };
  p.height = [](double v) { return v; };
  return p;
}

std::vector<double> curvature_zeros_sampled(const std::function<ProfilePoint(double)>& prof,
                                            double v_lo, double v_hi, int n_grid) {
  if (!(v_lo < v_hi)) return {};
  if (n_grid < 2) fail(errc::domain, "curvature grid needs at least 2 cells");
  std::vector<double> zeros;
  const double h = (v_hi - v_lo) / n_grid;
  double prev_v = v_lo;
  double prev_k = prof(prev_v).curv;
  for (int i = 1; i <= n_grid; ++i) {
    const double cur_v = v_lo + i * h;
    const double cur_k = prof(cur_v).curv;
    if (prev_k == 0.0) {
      zeros.push_back(prev_v);
    } else if (prev_k * cur_k < 0.0) {
      double a = prev_v, b = cur_v, ka = prev_k;
      for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + std::fabs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const double km = prof(m).curv;
        if (km == 0.0) { a = b = m; break; }
        if (ka * km < 0.0) b = m; else { a = m; ka = km; }
      }
      zeros.push_back(0.5 * (a + b));
    }
    prev_v = cur_v;
    prev_k = cur_k;
  }
  if (prev_k == 0.0) zeros.push_back(prev_v);
  std::sort(zeros.begin(), zeros.end());
  zeros.erase(std::unique(zeros.begin(), zeros.end(),
                          [&](double a, double b) { return std::fabs(a - b) < 1e-10 * (1.0 + std::fabs(a)); }),
              zeros.end());
  return zeros;
}

namespace {

template <typename Sampler>
AnnulusDomain build_domain(Sampler sampler, double v_a, double v_b, BoundaryCondition bc,
                           ConformalWeight weight) {
  if (!(v_a < v_b)) fail(errc::domain, "domain requires v_a < v_b");
  AnnulusDomain d;
  d.profile = std::move(sampler);
  d.v_a = v_a;
  d.v_b = v_b;
  d.bc = bc;
  d.weight = weight;

  // Neumann compatibility: both endpoints are curvature zeros relative to the
  // curvature scale of the domain.
  const int n_samples = 512;
  double max_curv = 0.0;
  for (int i = 0; i <= n_samples; ++i) {
    const double v = v_a + (v_b - v_a) * i / n_samples;
    max_curv = std::max(max_curv, std::fabs(d.profile(v).curv));
  }
  const double tol = 1e-9 * max_curv;
  d.neumann_compatible = std::fabs(d.profile(v_a).curv) <= tol &&
                         std::fabs(d.profile(v_b).curv) <= tol;
  return d;
}

}  // namespace

AnnulusDomain make_domain(const UnduloidSurface& surface, double v_a, double v_b,
                          BoundaryCondition bc, ConformalWeight weight) {
  return build_domain([surface](double v) { return surface.sample(v); }, v_a, v_b, bc, weight);
}

AnnulusDomain make_domain(const GenericProfile& profile, double v_a, double v_b,
                          BoundaryCondition bc, ConformalWeight weight) {
  return build_domain([profile](double v) { return profile.sample(v); }, v_a, v_b, bc, weight);
}

AnnulusDomain scaled(AnnulusDomain domain, double c) {
  if (!(c > 0.0)) fail(errc::domain, "metric scale must be positive");
  domain.conformal_scale *= c;
  return domain;
}

}  // namespace exs::revolution
