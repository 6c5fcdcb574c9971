#include "affine_cdo/riccati.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "affine_cdo/errors.hpp"

namespace affine_cdo {

namespace {

using State = std::array<double, 4>;  // b_y, b_z, shift, b_z integral

State rhs(const FactorDynamics& d, const ContractValues& in, const State& s) {
  const double by = s[0];
  const double bz = s[1];
  State out{};
  out[0] = in.beta_y - (d.kappa_y + d.lambda_y) * by - 0.5 * d.sigma_y * d.sigma_y * by * by;
  if (d.frozen_z) {
    out[1] = 0.0;
    out[2] = d.kappa_y * d.theta * by;
  } else {
    out[1] = in.beta_z + d.kappa_y * by - (d.kappa_z + d.lambda_z) * bz - 0.5 * d.sigma_z * d.sigma_z * bz * bz;
    out[2] = d.kappa_z * d.theta * bz;
  }
  out[3] = bz;
  return out;
}

std::size_t step_count(double tau_max, double step) {
  if (!(tau_max > 0.0)) throw DomainError("tau_max must be positive");
  if (!(step > 0.0 && step <= tau_max)) throw DomainError("Riccati step must lie in (0, tau_max]");
  return static_cast<std::size_t>(std::ceil(tau_max / step - 1e-9));
}

}  // namespace

RiccatiColumn solve_riccati(const ModelParams& p, const ContractValues& inputs, double tau_max, double step) {
  const std::size_t n = step_count(tau_max, step);
  const double h = tau_max / static_cast<double>(n);
  const FactorDynamics d = dynamics(p);
  ContractValues in = inputs;
  if (d.frozen_z) in.beta_z = 0.0;

  RiccatiColumn col;
  col.alpha = in.alpha;
  col.beta_y = in.beta_y;
  col.beta_z = in.beta_z;
  col.tau.resize(n + 1);
  col.a.resize(n + 1);
  col.b_y.resize(n + 1);
  col.b_z.resize(n + 1);
  col.b_z_integral.resize(n + 1);
  col.shift.resize(n + 1);

  State s{0.0, 0.0, 0.0, 0.0};
  auto store = [&](std::size_t k) {
    const double tau = tau_max * static_cast<double>(k) / static_cast<double>(n);
    col.tau[k] = tau;
    col.b_y[k] = s[0];
    col.b_z[k] = s[1];
    col.shift[k] = s[2];
    col.b_z_integral[k] = s[3];
    col.a[k] = in.alpha * tau + s[2];
  };
  store(0);
  for (std::size_t k = 1; k <= n; ++k) {
    const State k1 = rhs(d, in, s);
    State tmp;
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
    const State k2 = rhs(d, in, tmp);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
    const State k3 = rhs(d, in, tmp);
    for (int i = 0; i < 4; ++i) tmp[i] = s[i] + h * k3[i];
    const State k4 = rhs(d, in, tmp);
    for (int i = 0; i < 4; ++i) s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!(std::abs(s[0]) <= kRiccatiOverflow && std::abs(s[1]) <= kRiccatiOverflow)) {
      const double tau = tau_max * static_cast<double>(k) / static_cast<double>(n);
      std::ostringstream msg;
      msg << "Riccati coefficients exceeded " << kRiccatiOverflow << " at tau = " << tau;
      throw ExplosionError(msg.str(), tau);
    }
    store(k);
  }
  return col;
}

RiccatiColumn solve_riccati(const ModelParams& p, double x, double tau_max, double step) {
  return solve_riccati(p, contract_functions(x, p), tau_max, step);
}

double cir_riccati_closed_form(double beta, double k, double sigma, double tau) {
  const double psi = std::sqrt(k * k + 2.0 * sigma * sigma * beta);
  const double e = std::expm1(psi * tau);
  return 2.0 * beta * e / ((psi + k) * e + 2.0 * psi);
}

CoefficientCurve::CoefficientCurve(const ModelParams& p, std::vector<double> boundaries, double tau_max,
                                   double step)
    : params_(p), boundaries_(std::move(boundaries)) {
  if (boundaries_.size() < 2) throw ShapeError("coefficient curve needs at least one cell");
  if (!std::is_sorted(boundaries_.begin(), boundaries_.end()) || boundaries_.front() < 0.0 ||
      boundaries_.back() > 1.0)
    throw DomainError("boundaries must be sorted within [0, 1]");
  const auto beta = piecewise_beta(p, boundaries_);
  columns_.reserve(beta.size() + 1);
  for (std::size_t j = 0; j < beta.size(); ++j) {
    const double beta_z = boundaries_[j] < 1.0 ? p.c0 : 0.0;
    columns_.push_back(solve_riccati(p, ContractValues{p.r, beta[j], beta_z}, tau_max, step));
  }
  columns_.push_back(solve_riccati(p, ContractValues{p.r, 0.0, 0.0}, tau_max, step));
  tau_ = columns_.front().tau;
}

std::size_t CoefficientCurve::cell_of(double x) const {
  if (!(x >= 0.0)) throw DomainError("loss level must be nonnegative");
  if (x >= 1.0 || x >= boundaries_.back()) return cells();
  const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), x);
  return static_cast<std::size_t>(it - boundaries_.begin()) - 1;
}

void CoefficientCurve::locate(double tau, std::size_t& k, double& w) const {
  const double tmax = tau_.back();
  if (!(tau >= 0.0) || tau > tmax * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "maturity " << tau << " outside coefficient grid [0, " << tmax << "]";
    throw RangeError(msg.str());
  }
  const std::size_t n = tau_.size() - 1;
  const double pos = std::min(tau, tmax) / tmax * static_cast<double>(n);
  k = std::min(static_cast<std::size_t>(pos), n - 1);
  w = pos - static_cast<double>(k);
  if (w >= 1.0) {
    w = 1.0;
  }
}

CoefficientCurve::Node CoefficientCurve::at(std::size_t cell, double tau) const {
  std::size_t k;
  double w;
  locate(tau, k, w);
  const RiccatiColumn& c = columns_[cell];
  if (w == 0.0) return {c.shift[k], c.b_y[k], c.b_z[k]};
  const double v = 1.0 - w;
  return {v * c.shift[k] + w * c.shift[k + 1], v * c.b_y[k] + w * c.b_y[k + 1], v * c.b_z[k] + w * c.b_z[k + 1]};
}

double CoefficientCurve::a(double tau, double x) const {
  const std::size_t j = cell_of(x);
  return contract_functions(x, params_).alpha * tau + at(j, tau).shift;
}

double CoefficientCurve::b_y(double tau, double x) const { return at(cell_of(x), tau).b_y; }

double CoefficientCurve::b_z(double tau, double x) const { return at(cell_of(x), tau).b_z; }

double CoefficientCurve::shift(double tau, double x) const { return at(cell_of(x), tau).shift; }

double CoefficientCurve::b_z_integral(double tau, double x) const {
  std::size_t k;
  double w;
  locate(tau, k, w);
  const RiccatiColumn& c = columns_[cell_of(x)];
  if (w == 0.0) return c.b_z_integral[k];
  return (1.0 - w) * c.b_z_integral[k] + w * c.b_z_integral[k + 1];
}

double bond_price(const CoefficientCurve& c, const FactorState& f, const LossState& l, double x, double tau) {
  if (l.l > x) return 0.0;
  const std::size_t j = c.cell_of(x);
  const auto node = c.at(j, tau);
  const double alpha = contract_functions(x, c.params()).alpha;
  const double z = effective_z(c.params(), f);
  return std::exp(-alpha * tau - node.shift - node.b_y * f.y - node.b_z * z);
}

double bond_price(const RiccatiColumn& column, const ModelParams& p, const FactorState& f, const LossState& l,
                  double x, double tau) {
  if (l.l > x) return 0.0;
  const std::size_t n = column.tau.size() - 1;
  const double tmax = column.tau.back();
  if (!(tau >= 0.0) || tau > tmax * (1.0 + 1e-12)) throw RangeError("maturity outside coefficient grid");
  const double pos = std::min(tau, tmax) / tmax * static_cast<double>(n);
  const std::size_t k = std::min(static_cast<std::size_t>(pos), n - 1);
  const double w = pos - static_cast<double>(k);
  auto lerp = [&](const std::vector<double>& v) { return w == 0.0 ? v[k] : (1.0 - w) * v[k] + w * v[k + 1]; };
  const double z = effective_z(p, f);
  return std::exp(-lerp(column.a) - lerp(column.b_y) * f.y - lerp(column.b_z) * z);
}

}  // namespace affine_cdo
