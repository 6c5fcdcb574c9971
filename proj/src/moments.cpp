#include "affine_cdo/moments.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include "affine_cdo/errors.hpp"
#include "affine_cdo/parallel.hpp"
#include "affine_cdo/rng.hpp"

namespace affine_cdo {

namespace {

// (1 - e^{-x}) / x for x >= 0.
double phi1(double x) {
  if (x < 1e-8) return 1.0 - 0.5 * x;
  return -std::expm1(-x) / x;
}

// Integral over [0, t] of e^{-p (t - s)} e^{-q s} ds for p, q >= 0.
double decay_integral(double p, double q, double t) {
  const double lo = std::min(p, q);
  const double hi = std::max(p, q);
  return std::exp(-lo * t) * t * phi1((hi - lo) * t);
}

struct Term {
  double coef;
  double rate;
};

// Sum over a x b of coef_a coef_b times the decay integral, with a in the propagator (rate in
// t - s) and b in the mean (rate in s).
double convolve(const std::vector<Term>& kernel, const std::vector<Term>& mean, double t) {
  double sum = 0.0;
  for (const auto& k : kernel)
    for (const auto& m : mean) sum += k.coef * m.coef * decay_integral(k.rate, m.rate, t);
  return sum;
}

ModelParams resolve(const ModelParams& p, SingularPolicy policy) {
  if (!is_near_singular(p)) return p;
  if (policy == SingularPolicy::raise)
    throw SingularityError("mean-reversion speeds within singular tolerance; closed-form moments degenerate");
  ModelParams q = p;
  perturb_off_singular(q);
  std::cerr << "warning: kappa_z moved from " << p.kappa_z << " to " << q.kappa_z
            << " to avoid singular moment formulas\n";
  return q;
}

}  // namespace

MomentSet cond_moments(const ModelParams& p_in, double y0, double z0, double t, SingularPolicy policy) {
  if (!(t >= 0.0)) throw DomainError("moment horizon must be nonnegative");
  MomentSet out;
  out.horizon = t;
  const ModelParams p = resolve(p_in, policy);
  const FactorDynamics d = dynamics(p);
  if (d.frozen_z) z0 = d.theta;
  if (t == 0.0) {
    out.mean_y = y0;
    out.mean_z = z0;
    return out;
  }
  const double ky = d.kappa_y;
  const double kz = d.kappa_z;
  const double th = d.theta;
  const double delta = kz - ky;

  const std::vector<Term> my{{th, 0.0}, {y0 + (ky * z0 - kz * th) / delta, ky}, {ky * (th - z0) / delta, kz}};
  const std::vector<Term> mz{{th, 0.0}, {z0 - th, kz}};
  auto eval = [t](const std::vector<Term>& terms) {
    double s = 0.0;
    for (const auto& term : terms) s += term.coef * std::exp(-term.rate * t);
    return s;
  };
  out.mean_y = eval(my);
  out.mean_z = eval(mz);

  const double c = ky / delta;
  const double sy2 = d.sigma_y * d.sigma_y;
  const double sz2 = d.sigma_z * d.sigma_z;
  const std::vector<Term> phi11_sq{{1.0, 2.0 * ky}};
  const std::vector<Term> phi12_sq{{c * c, 2.0 * ky}, {-2.0 * c * c, ky + kz}, {c * c, 2.0 * kz}};
  const std::vector<Term> phi12_phi22{{c, ky + kz}, {-c, 2.0 * kz}};
  const std::vector<Term> phi22_sq{{1.0, 2.0 * kz}};

  out.var_y = sy2 * convolve(phi11_sq, my, t) + sz2 * convolve(phi12_sq, mz, t);
  out.cov_yz = sz2 * convolve(phi12_phi22, mz, t);
  out.var_z = sz2 * convolve(phi22_sq, mz, t);
  return out;
}

MomentSet uncond_moments(const ModelParams& p) {
  const FactorDynamics d = dynamics(p);
  if (!(d.kappa_y > 0.0) || (!d.frozen_z && !(d.kappa_z > 0.0)))
    throw DomainError("no stationary law without positive mean reversion");
  MomentSet out;
  out.horizon = INFINITY;
  out.mean_y = d.theta;
  out.mean_z = d.theta;
  if (d.frozen_z) {
    out.var_y = d.sigma_y * d.sigma_y * d.theta / (2.0 * d.kappa_y);
    return out;
  }
  const double ky = d.kappa_y, kz = d.kappa_z;
  out.var_z = d.sigma_z * d.sigma_z * d.theta / (2.0 * kz);
  out.var_y = d.sigma_y * d.sigma_y * d.theta / (2.0 * ky) + ky * d.theta * d.sigma_z * d.sigma_z / (2.0 * (kz + ky) * kz);
  out.cov_yz = ky / (kz + ky) * out.var_z;
  return out;
}

MomentEstimate mc_moment_oracle(const ModelParams& p, double y0, double z0, double t, std::size_t n_paths,
                                double step, std::uint64_t seed) {
  if (n_paths < 1000) throw DomainError("Monte Carlo oracle needs at least 1000 paths");
  if (!(step > 0.0 && step <= t)) throw DomainError("Euler step must lie in (0, t]");
  const FactorDynamics d = dynamics(p);
  if (d.frozen_z) z0 = d.theta;
  const std::size_t n_steps = static_cast<std::size_t>(std::ceil(t / step - 1e-9));
  const double dt = t / static_cast<double>(n_steps);
  const double sq = std::sqrt(dt);
  std::vector<double> ys(n_paths), zs(n_paths);
  parallel_for(n_paths, [&](std::size_t i) {
    RandomStream rng(seed, i, StreamPurpose::factor);
    double y = y0, z = z0;
    for (std::size_t k = 0; k < n_steps; ++k) {
      const double yp = std::max(y, 0.0);
      const double zp = std::max(z, 0.0);
      const double wy = rng.normal();
      const double wz = rng.normal();
      y += d.kappa_y * (zp - yp) * dt + d.sigma_y * std::sqrt(yp) * sq * wy;
      z += d.kappa_z * (d.theta - zp) * dt + d.sigma_z * std::sqrt(zp) * sq * wz;
    }
    ys[i] = std::max(y, 0.0);
    zs[i] = std::max(z, 0.0);
  });

  const double n = static_cast<double>(n_paths);
  double my = 0.0, mz = 0.0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    my += ys[i];
    mz += zs[i];
  }
  my /= n;
  mz /= n;
  double vy = 0.0, vz = 0.0, cyz = 0.0, m4y = 0.0, m4z = 0.0, m22 = 0.0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    const double a = ys[i] - my, b = zs[i] - mz;
    vy += a * a;
    vz += b * b;
    cyz += a * b;
    m4y += a * a * a * a;
    m4z += b * b * b * b;
    m22 += a * a * b * b;
  }
  vy /= n - 1.0;
  vz /= n - 1.0;
  cyz /= n - 1.0;
  m4y /= n;
  m4z /= n;
  m22 /= n;

  MomentEstimate est;
  est.paths = n_paths;
  est.moments = {my, mz, vy, vz, cyz, t};
  est.std_errors.mean_y = std::sqrt(vy / n);
  est.std_errors.mean_z = std::sqrt(vz / n);
  est.std_errors.var_y = std::sqrt(std::max(0.0, m4y - vy * vy) / n);
  est.std_errors.var_z = std::sqrt(std::max(0.0, m4z - vz * vz) / n);
  est.std_errors.cov_yz = std::sqrt(std::max(0.0, m22 - cyz * cyz) / n);
  est.std_errors.horizon = t;
  return est;
}

namespace {

using Coeffs = std::array<double, 6>;  // 1, y, z, z^2, zy, y^2

Coeffs coefficient_rhs(const FactorDynamics& d, const Coeffs& c) {
  const double ky = d.kappa_y, kz = d.kappa_z, th = d.theta;
  const double sy2 = d.sigma_y * d.sigma_y, sz2 = d.sigma_z * d.sigma_z;
  Coeffs r{};
  r[0] = kz * th * c[2];
  r[1] = -ky * c[1] + kz * th * c[4] + sy2 * c[5];
  r[2] = ky * c[1] - kz * c[2] + (2.0 * kz * th + sz2) * c[3];
  r[3] = ky * c[4] - 2.0 * kz * c[3];
  r[4] = 2.0 * ky * c[5] - (ky + kz) * c[4];
  r[5] = -2.0 * ky * c[5];
  return r;
}

Coeffs integrate_coefficients(const FactorDynamics& d, Coeffs c, double t, double step) {
  if (t == 0.0) return c;
  const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t / step)));
  const double h = t / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Coeffs k1 = coefficient_rhs(d, c);
    Coeffs tmp;
    for (int i = 0; i < 6; ++i) tmp[i] = c[i] + 0.5 * h * k1[i];
    const Coeffs k2 = coefficient_rhs(d, tmp);
    for (int i = 0; i < 6; ++i) tmp[i] = c[i] + 0.5 * h * k2[i];
    const Coeffs k3 = coefficient_rhs(d, tmp);
    for (int i = 0; i < 6; ++i) tmp[i] = c[i] + h * k3[i];
    const Coeffs k4 = coefficient_rhs(d, tmp);
    for (int i = 0; i < 6; ++i) c[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return c;
}

double polynomial(const Coeffs& c, double y, double z) {
  return c[0] + c[1] * y + c[2] * z + c[3] * z * z + c[4] * z * y + c[5] * y * y;
}

}  // namespace

MomentCoefficients moment_coefficient_oracle(const ModelParams& p, double t, double step) {
  if (!(t >= 0.0)) throw DomainError("horizon must be nonnegative");
  const FactorDynamics d = dynamics(p);
  MomentCoefficients out;
  out.g = integrate_coefficients(d, {0, 0, 1, 0, 0, 0}, t, step);
  out.h = integrate_coefficients(d, {0, 1, 0, 0, 0, 0}, t, step);
  out.f = integrate_coefficients(d, {0, 0, 0, 0, 1, 0}, t, step);
  out.q = integrate_coefficients(d, {0, 0, 0, 1, 0, 0}, t, step);
  out.p = integrate_coefficients(d, {0, 0, 0, 0, 0, 1}, t, step);
  return out;
}

MomentSet MomentCoefficients::moments(double y, double z, double t) const {
  MomentSet m;
  m.horizon = t;
  m.mean_y = polynomial(h, y, z);
  m.mean_z = polynomial(g, y, z);
  m.var_y = polynomial(p, y, z) - m.mean_y * m.mean_y;
  m.var_z = polynomial(q, y, z) - m.mean_z * m.mean_z;
  m.cov_yz = polynomial(f, y, z) - m.mean_y * m.mean_z;
  return m;
}

}  // namespace affine_cdo
