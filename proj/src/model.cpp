#include "affine_cdo/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <boost/math/tools/roots.hpp>

#include "affine_cdo/errors.hpp"

namespace affine_cdo {

namespace {

// (e^{-a l} - e^{-a u}) for 0 <= l <= u, without cancellation.
double exp_gap(double a, double l, double u) { return -std::exp(-a * l) * std::expm1(-a * (u - l)); }

// (1 - e^{-a u}) / a with the a -> 0 limit u.
double decay_mean(double a, double u) {
  if (a * u < 1e-300 || a == 0.0) return u;
  return -std::expm1(-a * u) / a;
}

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::two_factor ? "two-factor" : "one-factor"; }

ModelKind parse_model_kind(const std::string& text) {
  if (text == "two-factor" || text == "2f" || text == "two_factor") return ModelKind::two_factor;
  if (text == "one-factor" || text == "1f" || text == "one_factor") return ModelKind::one_factor;
  throw DomainError("unknown model kind '" + text + "'");
}

std::vector<double> standard_boundaries() { return {0.0, 0.03, 0.06, 0.09, 0.12, 0.22, 1.0}; }

ModelParams ModelParams::reference_two_factor() {
  ModelParams p;
  p.theta_z = 0.0055;
  p.kappa_y = 0.5223;
  p.kappa_z = 0.2209;
  p.sigma_y = 0.3806;
  p.sigma_z = 0.2588;
  p.lambda_y = -0.6671;
  p.lambda_z = -0.3096;
  p.a0 = 98.7846;
  p.gamma = 0.3279;
  p.b0 = 26.4061;
  p.c0 = 0.0911;
  p.r = 0.05;
  p.h = {4e-6, 1e-6, 2.5e-7, 9e-8, 2.25e-8, 9e-10};
  p.kind = ModelKind::two_factor;
  return p;
}

ModelParams ModelParams::reference_one_factor() {
  ModelParams p;
  p.theta_z = 0.03;
  p.kappa_z = 6.96e-5;
  p.sigma_z = 0.15;
  p.lambda_z = 1.44e-4;
  p.a0 = 3.23e-5;
  p.gamma = 26.08;
  p.b0 = 23.96;
  p.c0 = 0.0;
  p.r = 0.05;
  p.h = {4e-6, 1e-6, 2.5e-7, 9e-8, 2.25e-8, 9e-10};
  p.kind = ModelKind::one_factor;
  return p;
}

bool is_near_singular(const ModelParams& p, double eps) {
  if (p.kind == ModelKind::one_factor) return !(p.kappa_z > eps);
  const double ky = p.kappa_y;
  const double kz = p.kappa_z;
  return !(std::abs(kz - ky) > eps && std::abs(kz - 2.0 * ky) > eps && ky > eps && kz > eps && kz + ky > eps);
}

void validate(const ModelParams& p, double eps) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("invalid parameters: ") + what);
  };
  const bool finite = std::isfinite(p.kappa_y) && std::isfinite(p.kappa_z) && std::isfinite(p.theta_z) &&
                      std::isfinite(p.sigma_y) && std::isfinite(p.sigma_z) && std::isfinite(p.lambda_y) &&
                      std::isfinite(p.lambda_z) && std::isfinite(p.gamma) && std::isfinite(p.a0) &&
                      std::isfinite(p.b0) && std::isfinite(p.c0) && std::isfinite(p.r);
  require(finite, "non-finite value");
  require(p.kappa_y >= 0.0, "kappa_y < 0");
  require(p.kappa_z * p.theta_z >= 0.0, "kappa_z * theta_z < 0");
  require(p.theta_z >= 0.0, "theta_z < 0");
  require(p.sigma_y >= 0.0 && p.sigma_z >= 0.0, "negative volatility");
  require(p.gamma >= 0.0 && p.a0 >= 0.0 && p.b0 >= 0.0 && p.c0 >= 0.0, "negative contract-function parameter");
  require(p.kind == ModelKind::two_factor || p.c0 == 0.0, "one-factor model requires c0 = 0");
  for (double h : p.h) require(h > 0.0 && std::isfinite(h), "measurement variance must be positive");
  if (is_near_singular(p, eps)) throw SingularityError("mean-reversion speeds within singular tolerance");
}

bool perturb_off_singular(ModelParams& p, double eps) {
  bool moved = false;
  for (int i = 0; i < 1000000 && is_near_singular(p, eps); ++i) {
    p.kappa_z += kSingularShift;
    moved = true;
  }
  return moved;
}

FactorDynamics dynamics(const ModelParams& p) {
  if (p.kind == ModelKind::one_factor)
    return {p.kappa_z, 0.0, p.theta_z, p.sigma_z, 0.0, p.lambda_z, 0.0, true};
  return {p.kappa_y, p.kappa_z, p.theta_z, p.sigma_y, p.sigma_z, p.lambda_y, p.lambda_z, false};
}

double effective_z(const ModelParams& p, const FactorState& f) {
  return p.kind == ModelKind::one_factor ? p.theta_z : f.z;
}

ContractValues contract_functions(double x, const ModelParams& p) {
  if (!(x >= 0.0)) throw DomainError("loss level must be nonnegative");
  if (x >= 1.0) return {p.r, 0.0, 0.0};
  return {p.gamma * exp_gap(p.a0, x, 1.0) + p.r, exp_gap(p.b0, x, 1.0), p.c0};
}

std::vector<double> piecewise_beta(const ModelParams& p, const std::vector<double>& boundaries) {
  if (boundaries.size() < 2) throw ShapeError("need at least two tranche boundaries");
  std::vector<double> beta;
  beta.reserve(boundaries.size() - 1);
  for (std::size_t j = 1; j < boundaries.size(); ++j) {
    const double lo = std::clamp(boundaries[j - 1], 0.0, 1.0);
    const double hi = std::clamp(boundaries[j], 0.0, 1.0);
    if (!(hi > lo)) throw DomainError("tranche boundaries must be strictly increasing");
    // mean over [lo, hi] of e^{-b0 x} - e^{-b0}
    const double mean_exp = std::exp(-p.b0 * lo) * decay_mean(p.b0, hi - lo) / (hi - lo);
    beta.push_back(mean_exp - std::exp(-p.b0));
  }
  return beta;
}

double jump_intensity(const ModelParams& p, const FactorState& f, double l_pre) {
  if (l_pre >= 1.0) return 0.0;
  const double l = std::max(0.0, l_pre);
  const double z = effective_z(p, f);
  return p.gamma * exp_gap(p.a0, l, 1.0) + exp_gap(p.b0, l, 1.0) * f.y + p.c0 * z;
}

namespace {

// Continuous part of nu((0, x]) for 0 <= x < 1 - l.
double continuous_mass(const ModelParams& p, const FactorState& f, double l, double x) {
  return p.gamma * exp_gap(p.a0, l, l + x) + exp_gap(p.b0, l, l + x) * f.y;
}

double require_intensity(const ModelParams& p, const FactorState& f, double l_pre) {
  const double lambda = jump_intensity(p, f, l_pre);
  if (!(lambda > 0.0)) throw UndefinedError("jump intensity is zero; loss-given-default law undefined");
  return lambda;
}

}  // namespace

double lgd_cdf(const ModelParams& p, const FactorState& f, double l_pre, double x) {
  const double lambda = require_intensity(p, f, l_pre);
  if (!(x >= 0.0)) throw DomainError("jump size must be nonnegative");
  const double room = 1.0 - l_pre;
  if (x >= room) return 1.0;
  return std::min(1.0, continuous_mass(p, f, l_pre, x) / lambda);
}

double lgd_inverse_cdf(const ModelParams& p, const FactorState& f, double l_pre, double s) {
  const double lambda = require_intensity(p, f, l_pre);
  if (!(s > 0.0 && s < 1.0)) throw DomainError("uniform variate must lie in (0, 1)");
  const double room = 1.0 - l_pre;
  const double left_limit = continuous_mass(p, f, l_pre, room) / lambda;
  if (s > left_limit) return room;
  auto g = [&](double x) { return continuous_mass(p, f, l_pre, x) / lambda - s; };
  std::uintmax_t max_iter = 200;
  const auto bracket = boost::math::tools::toms748_solve(
      g, 0.0, room, -s, left_limit - s, [](double a, double b) { return b - a <= 1e-13; }, max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

double expected_lgd(const ModelParams& p, const FactorState& f, double l_pre, bool include_catastrophe) {
  if (l_pre >= 1.0) return 0.0;
  const double l = std::max(0.0, l_pre);
  const double room = 1.0 - l;
  const double c0 = include_catastrophe ? p.c0 : 0.0;
  const double z = effective_z(p, f);
  const double denom = p.gamma * exp_gap(p.a0, l, 1.0) + exp_gap(p.b0, l, 1.0) * f.y + c0 * z;
  if (!(denom > 0.0)) throw UndefinedError("jump intensity is zero; expected loss given default undefined");
  // integral over [0, room] of (e^{-a(l+x)} - e^{-a}) dx
  auto tail = [&](double a) { return std::exp(-a * l) * decay_mean(a, room) - room * std::exp(-a); };
  const double numer = p.gamma * tail(p.a0) + tail(p.b0) * f.y + c0 * room * z;
  return std::clamp(numer / denom, 0.0, room);
}

}  // namespace affine_cdo
