#include "affine_cdo/kalman.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>

#include "affine_cdo/errors.hpp"
#include "affine_cdo/optimize.hpp"
#include "affine_cdo/parallel.hpp"
#include "affine_cdo/pricing.hpp"
#include "affine_cdo/quadrature.hpp"
#include "affine_cdo/rng.hpp"

namespace affine_cdo {

void ObservationPanel::check() const {
  if (maturities.empty()) throw ShapeError("panel has no maturities");
  if (boundaries.size() < 2) throw ShapeError("panel needs at least one tranche");
  for (double tau : maturities)
    if (!(tau > 0.0)) throw DomainError("panel maturities must be positive");
  for (std::size_t j = 1; j < boundaries.size(); ++j)
    if (!(boundaries[j] > boundaries[j - 1])) throw DomainError("tranche boundaries must be strictly increasing");
  if (boundaries.front() < 0.0 || boundaries.back() > 1.0) throw DomainError("tranche boundaries must lie in [0, 1]");
  if (dates.empty()) throw ShapeError("panel has no dates");
  for (std::size_t k = 1; k < dates.size(); ++k)
    if (!(dates[k] > dates[k - 1])) throw DomainError("panel dates must be strictly increasing");
  const auto rows = static_cast<Eigen::Index>(dates.size());
  const auto cols = static_cast<Eigen::Index>(column_count());
  if (spreads.rows() != rows || spreads.cols() != cols) throw ShapeError("spread matrix does not match panel layout");
  if (mask.rows() != rows || mask.cols() != cols) throw ShapeError("mask does not match panel layout");
}

MeasurementRow measurement_row(const ModelParams& p, const CoefficientCurve& c, double tau, std::size_t j) {
  if (!(tau > 0.0)) throw DomainError("measurement maturity must be positive");
  if (j >= c.cells()) throw RangeError("tranche index outside the curve");
  const double lo = c.x_grid()[j], hi = c.x_grid()[j + 1];
  const auto node = c.at(j, tau);
  // int over the cell of exp(-gamma (e^{-a0 x} - e^{-a0}) tau)
  const double integral = GaussLegendre::rule(kGaussNodes).integrate(
      [&](double x) {
        const double gap = x >= 1.0 ? 0.0 : -std::exp(-p.a0 * x) * std::expm1(-p.a0 * (1.0 - x));
        return std::exp(-p.gamma * gap * tau);
      },
      lo, hi);
  MeasurementRow row;
  row.intercept = (std::log(hi - lo) + node.shift - std::log(integral)) / tau;
  row.loading_y = node.b_y / tau;
  row.loading_z = node.b_z / tau;
  return row;
}

MeasurementModel measurement_model(const ModelParams& p, const std::vector<double>& maturities,
                                   const std::vector<double>& boundaries) {
  const std::size_t n_tau = maturities.size();
  const std::size_t n_tr = boundaries.size() - 1;
  if (p.h.size() != n_tr) throw ShapeError("need one measurement variance per tranche");
  const double tau_max = *std::max_element(maturities.begin(), maturities.end());
  const CoefficientCurve curve(p, boundaries, tau_max);
  MeasurementModel m;
  const auto n = static_cast<Eigen::Index>(n_tau * n_tr);
  m.intercept.resize(n);
  m.loading_y.resize(n);
  m.loading_z.resize(n);
  m.noise.resize(n);
  for (std::size_t j = 0; j < n_tr; ++j) {
    for (std::size_t i = 0; i < n_tau; ++i) {
      const auto col = static_cast<Eigen::Index>(j * n_tau + i);
      const auto row = measurement_row(p, curve, maturities[i], j);
      m.intercept(col) = row.intercept;
      m.loading_y(col) = row.loading_y;
      m.loading_z(col) = row.loading_z;
      m.noise(col) = p.h[j];
    }
  }
  return m;
}

Transition transition_model(const ModelParams& p, const Eigen::Vector2d& prev_state, double dt) {
  if (!(dt > 0.0)) throw DomainError("transition horizon must be positive");
  const FactorDynamics d = dynamics(p);
  const double y = std::max(prev_state(0), 0.0);
  const double z = d.frozen_z ? d.theta : std::max(prev_state(1), 0.0);
  const double ky = d.kappa_y, kz = d.kappa_z, th = d.theta;
  const double delta = kz - ky;
  const double ey = std::exp(-ky * dt), ez = std::exp(-kz * dt);
  const double gy = -std::expm1(-ky * dt), gz = -std::expm1(-kz * dt);
  Transition tr;
  tr.m1 << ey, ky / delta * (ey - ez), 0.0, ez;
  tr.m0 << th * (kz * gy - ky * gz) / delta, th * gz;
  const auto m = cond_moments(p, y, z, dt);
  tr.q << m.var_y, m.cov_yz, m.cov_yz, m.var_z;
  if (tr.q(0, 0) < 0.0 || tr.q(1, 1) < 0.0 || tr.q.determinant() < 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig;
    eig.computeDirect(tr.q);
    const Eigen::Vector2d lam = eig.eigenvalues().cwiseMax(0.0);
    tr.q = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
    const double off = 0.5 * (tr.q(0, 1) + tr.q(1, 0));
    tr.q(0, 1) = tr.q(1, 0) = off;
  }
  return tr;
}

namespace {

// In-place Cholesky of the leading d x d block of a row-major matrix; false on a nonpositive pivot.
bool cholesky(std::vector<double>& a, std::size_t d) {
  for (std::size_t j = 0; j < d; ++j) {
    double s = a[j * d + j];
    for (std::size_t k = 0; k < j; ++k) s -= a[j * d + k] * a[j * d + k];
    if (!(s > 0.0)) return false;
    const double ljj = std::sqrt(s);
    a[j * d + j] = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double t = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) t -= a[i * d + k] * a[j * d + k];
      a[i * d + j] = t / ljj;
    }
  }
  return true;
}

// Solves L L^T u = b in place.
void cholesky_solve(const std::vector<double>& l, std::size_t d, std::vector<double>& b) {
  for (std::size_t i = 0; i < d; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * d + k] * b[k];
    b[i] = s / l[i * d + i];
  }
  for (std::size_t ii = d; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < d; ++k) s -= l[k * d + ii] * b[k];
    b[ii] = s / l[ii * d + ii];
  }
}

}  // namespace

FilterOutput run_filter(const StateSpaceModel& model, const ObservationPanel& panel, const FilterOptions& options) {
  panel.check();
  const std::size_t n_dates = panel.dates.size();
  const std::size_t n_cols = panel.column_count();
  const auto ncols = static_cast<Eigen::Index>(n_cols);
  if (model.intercept.size() != ncols || model.loading_y.size() != ncols || model.loading_z.size() != ncols ||
      model.noise.size() != ncols)
    throw ShapeError("measurement system does not match panel columns");
  if (!model.transition) throw ShapeError("state space has no transition");

  FilterOutput out;
  if (options.keep_history) {
    out.predicted_states.reserve(n_dates);
    out.filtered_states.reserve(n_dates);
    out.predicted_covariances.reserve(n_dates);
    out.state_covariances.reserve(n_dates);
    out.innovations.reserve(n_dates);
    out.innovation_covariances.reserve(n_dates);
  }
  out.loglik_terms.reserve(n_dates);

  const double log_2pi = std::log(2.0 * std::numbers::pi);
  Eigen::Vector2d x = model.initial_mean;
  Eigen::Matrix2d P = model.initial_cov;
  std::vector<std::size_t> obs;
  obs.reserve(n_cols);
  std::vector<double> F, L, e, u, bp0, bp1, w0, w1;

  for (std::size_t k = 0; k < n_dates; ++k) {
    const double dt = k == 0 ? options.initial_step : panel.dates[k] - panel.dates[k - 1];
    const Transition tr = model.transition(x, dt);
    const auto& M = tr.m1;
    const auto& Q = tr.q;

    // predict
    const double xp0 = tr.m0(0) + (M(0, 0) * x(0) + M(0, 1) * x(1));
    const double xp1 = tr.m0(1) + (M(1, 0) * x(0) + M(1, 1) * x(1));
    const double t00 = M(0, 0) * P(0, 0) + M(0, 1) * P(1, 0);
    const double t01 = M(0, 0) * P(0, 1) + M(0, 1) * P(1, 1);
    const double t10 = M(1, 0) * P(0, 0) + M(1, 1) * P(1, 0);
    const double t11 = M(1, 0) * P(0, 1) + M(1, 1) * P(1, 1);
    const double pp00 = (t00 * M(0, 0) + t01 * M(0, 1)) + Q(0, 0);
    const double pp01 = 0.5 * (((t00 * M(1, 0) + t01 * M(1, 1)) + Q(0, 1)) + ((t10 * M(0, 0) + t11 * M(0, 1)) + Q(1, 0)));
    const double pp11 = (t10 * M(1, 0) + t11 * M(1, 1)) + Q(1, 1);
    Eigen::Vector2d xp(xp0, xp1);
    Eigen::Matrix2d Pp;
    Pp << pp00, pp01, pp01, pp11;

    obs.clear();
    for (std::size_t c = 0; c < n_cols; ++c)
      if (panel.mask(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c))) obs.push_back(c);
    const std::size_t d = obs.size();

    if (d == 0) {
      x = xp;
      P = Pp;
      out.loglik_terms.push_back(0.0);
      if (options.keep_history) {
        out.predicted_states.push_back(xp);
        out.filtered_states.push_back(x);
        out.predicted_covariances.push_back(Pp);
        out.state_covariances.push_back(P);
        out.innovations.emplace_back();
        out.innovation_covariances.emplace_back();
      }
      continue;
    }

    // innovation and its covariance F = B Pp B^T + H
    e.assign(d, 0.0);
    bp0.assign(d, 0.0);
    bp1.assign(d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      const auto c = static_cast<Eigen::Index>(obs[r]);
      const double by = model.loading_y(c), bz = model.loading_z(c);
      bp0[r] = by * pp00 + bz * pp01;
      bp1[r] = by * pp01 + bz * pp11;
      e[r] = panel.spreads(static_cast<Eigen::Index>(k), c) - (model.intercept(c) + (by * xp0 + bz * xp1));
    }
    F.assign(d * d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t s = 0; s <= r; ++s) {
        const auto cs = static_cast<Eigen::Index>(obs[s]);
        double v = bp0[r] * model.loading_y(cs) + bp1[r] * model.loading_z(cs);
        if (r == s) v += model.noise(cs);
        F[r * d + s] = F[s * d + r] = v;
      }
    }
    L = F;
    if (!cholesky(L, d)) {
      ++out.jitter_retries;
      L = F;
      for (std::size_t r = 0; r < d; ++r) L[r * d + r] += 1e-10;
      if (!cholesky(L, d)) {
        std::ostringstream msg;
        msg << "innovation covariance not positive definite on date " << k << " (t = " << panel.dates[k] << ")";
        throw NumericalError(msg.str());
      }
    }
    double logdet = 0.0;
    for (std::size_t r = 0; r < d; ++r) logdet += std::log(L[r * d + r]);
    logdet *= 2.0;
    u = e;
    cholesky_solve(L, d, u);
    double quad = 0.0;
    for (std::size_t r = 0; r < d; ++r) quad += e[r] * u[r];
    w0 = bp0;
    w1 = bp1;
    cholesky_solve(L, d, w0);
    cholesky_solve(L, d, w1);

    // update: x = xp + (B Pp)^T F^{-1} e, P = Pp - (B Pp)^T F^{-1} (B Pp)
    double gx0 = 0.0, gx1 = 0.0, g00 = 0.0, g01 = 0.0, g10 = 0.0, g11 = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      gx0 += bp0[r] * u[r];
      gx1 += bp1[r] * u[r];
      g00 += bp0[r] * w0[r];
      g01 += bp0[r] * w1[r];
      g10 += bp1[r] * w0[r];
      g11 += bp1[r] * w1[r];
    }
    x(0) = xp0 + gx0;
    x(1) = xp1 + gx1;
    const double p01 = 0.5 * ((pp01 - g01) + (pp01 - g10));
    P << pp00 - g00, p01, p01, pp11 - g11;

    const double term = -0.5 * (static_cast<double>(d) * log_2pi + logdet + quad);
    if (!std::isfinite(term)) {
      std::ostringstream msg;
      msg << "non-finite log-likelihood on date " << k << " (t = " << panel.dates[k] << ")";
      throw NumericalError(msg.str());
    }
    out.loglik += term;
    out.loglik_terms.push_back(term);
    if (options.clamp_states) {
      x(0) = std::max(x(0), 0.0);
      x(1) = std::max(x(1), 0.0);
    }
    if (options.keep_history) {
      out.predicted_states.push_back(xp);
      out.filtered_states.push_back(x);
      out.predicted_covariances.push_back(Pp);
      out.state_covariances.push_back(P);
      Eigen::VectorXd ev(static_cast<Eigen::Index>(d));
      Eigen::MatrixXd fm(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      for (std::size_t r = 0; r < d; ++r) {
        ev(static_cast<Eigen::Index>(r)) = e[r];
        for (std::size_t s = 0; s < d; ++s)
          fm(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) = F[r * d + s];
      }
      out.innovations.push_back(std::move(ev));
      out.innovation_covariances.push_back(std::move(fm));
    }
  }
  return out;
}

StateSpaceModel state_space(const ModelParams& p, const ObservationPanel& panel) {
  const auto mm = measurement_model(p, panel.maturities, panel.boundaries);
  const auto u = uncond_moments(p);
  StateSpaceModel s;
  s.intercept = mm.intercept;
  s.loading_y = mm.loading_y;
  s.loading_z = mm.loading_z;
  s.noise = mm.noise;
  s.initial_mean << u.mean_y, u.mean_z;
  s.initial_cov << u.var_y, u.cov_yz, u.cov_yz, u.var_z;
  s.transition = [p](const Eigen::Vector2d& state, double dt) { return transition_model(p, state, dt); };
  return s;
}

namespace {

ModelParams resolve_singular(const ModelParams& p, SingularPolicy policy, bool warn) {
  if (!is_near_singular(p)) return p;
  if (policy == SingularPolicy::raise)
    throw SingularityError("mean-reversion speeds within singular tolerance; transition moments degenerate");
  ModelParams q = p;
  perturb_off_singular(q);
  if (warn)
    std::cerr << "warning: kappa_z moved from " << p.kappa_z << " to " << q.kappa_z
              << " to avoid singular moment formulas\n";
  return q;
}

}  // namespace

FilterOutput kalman_pass(const ModelParams& p, const ObservationPanel& panel, const FilterOptions& options) {
  const ModelParams q = resolve_singular(p, options.policy, true);
  return run_filter(state_space(q, panel), panel, options);
}

double fast_loglik(const StateSpaceModel& model, const ObservationPanel& panel, const FilterOptions& options) {
  panel.check();
  const std::size_t n_dates = panel.dates.size();
  const std::size_t n_cols = panel.column_count();
  if (model.intercept.size() != static_cast<Eigen::Index>(n_cols)) throw ShapeError("measurement system does not match panel columns");
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  std::vector<double> log_h(n_cols), inv_h(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c) {
    const double h = model.noise(static_cast<Eigen::Index>(c));
    if (!(h > 0.0)) throw DomainError("measurement variances must be positive");
    log_h[c] = std::log(h);
    inv_h[c] = 1.0 / h;
  }
  Eigen::Vector2d x = model.initial_mean;
  Eigen::Matrix2d P = model.initial_cov;
  double loglik = 0.0;
  for (std::size_t k = 0; k < n_dates; ++k) {
    const double dt = k == 0 ? options.initial_step : panel.dates[k] - panel.dates[k - 1];
    const Transition tr = model.transition(x, dt);
    const Eigen::Vector2d xp = tr.m0 + tr.m1 * x;
    Eigen::Matrix2d Pp = tr.m1 * P * tr.m1.transpose() + tr.q;
    Pp(0, 1) = Pp(1, 0) = 0.5 * (Pp(0, 1) + Pp(1, 0));

    // sufficient statistics of the observed rows: a = B^T H^-1 e, A = B^T H^-1 B
    Eigen::Vector2d a = Eigen::Vector2d::Zero();
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    double ehe = 0.0, logdet_h = 0.0;
    std::size_t d = 0;
    const auto row = static_cast<Eigen::Index>(k);
    for (std::size_t c = 0; c < n_cols; ++c) {
      const auto col = static_cast<Eigen::Index>(c);
      if (!panel.mask(row, col)) continue;
      ++d;
      const double by = model.loading_y(col), bz = model.loading_z(col);
      const double e = panel.spreads(row, col) - (model.intercept(col) + by * xp(0) + bz * xp(1));
      const double w = inv_h[c];
      a(0) += by * w * e;
      a(1) += bz * w * e;
      A(0, 0) += by * w * by;
      A(0, 1) += by * w * bz;
      A(1, 1) += bz * w * bz;
      ehe += e * w * e;
      logdet_h += log_h[c];
    }
    A(1, 0) = A(0, 1);
    if (d == 0) {
      x = xp;
      P = Pp;
      continue;
    }
    // P = G G^T; F = H + (B G)(B G)^T; S = I + G^T A G
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig;
    eig.computeDirect(Pp);
    const Eigen::Matrix2d G = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const Eigen::Matrix2d S = Eigen::Matrix2d::Identity() + G.transpose() * A * G;
    const Eigen::Matrix2d S_inv = S.inverse();
    const double det_s = S.determinant();
    const Eigen::Vector2d v = G.transpose() * a;
    const double quad = ehe - v.dot(S_inv * v);
    const double term = -0.5 * (static_cast<double>(d) * log_2pi + logdet_h + std::log(det_s) + quad);
    if (!std::isfinite(term)) {
      std::ostringstream msg;
      msg << "non-finite log-likelihood on date " << k << " (t = " << panel.dates[k] << ")";
      throw NumericalError(msg.str());
    }
    loglik += term;
    // B^T F^-1 e and B^T F^-1 B through the Woodbury identity
    const Eigen::Matrix2d AG = A * G;
    const Eigen::Vector2d bfe = a - AG * (S_inv * v);
    Eigen::Matrix2d bfb = A - AG * S_inv * AG.transpose();
    x = xp + Pp * bfe;
    P = Pp - Pp * bfb * Pp;
    P(0, 1) = P(1, 0) = 0.5 * (P(0, 1) + P(1, 0));
    if (options.clamp_states) x = x.cwiseMax(0.0);
  }
  return loglik;
}

double kalman_loglik(const ModelParams& p, const ObservationPanel& panel, SingularPolicy policy) {
  try {
    validate(p, 0.0);
    const ModelParams q = resolve_singular(p, policy, false);
    FilterOptions options;
    options.keep_history = false;
    options.policy = policy;
    const double ll = fast_loglik(state_space(q, panel), panel, options);
    return std::isfinite(ll) ? ll : -std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return -std::numeric_limits<double>::infinity();
  }
}

std::vector<std::string> parameter_names(ModelKind kind, std::size_t tranche_count) {
  std::vector<std::string> names;
  if (kind == ModelKind::two_factor)
    names = {"kappa_z", "kappa_y", "theta_z", "lambda_z", "lambda_y", "sigma_z", "sigma_y", "a0", "gamma", "b0", "c0"};
  else
    names = {"kappa_z", "theta_z", "lambda_z", "sigma_z", "a0", "gamma", "b0"};
  for (std::size_t j = 1; j <= tranche_count; ++j) names.push_back("h_" + std::to_string(j));
  return names;
}

std::vector<bool> log_scaled(ModelKind kind, std::size_t tranche_count) {
  std::vector<bool> out;
  for (const auto& name : parameter_names(kind, tranche_count)) out.push_back(name.rfind("lambda", 0) != 0);
  return out;
}

std::vector<double> pack_parameters(const ModelParams& p) {
  std::vector<double> v;
  if (p.kind == ModelKind::two_factor)
    v = {p.kappa_z, p.kappa_y, p.theta_z, p.lambda_z, p.lambda_y, p.sigma_z, p.sigma_y, p.a0, p.gamma, p.b0, p.c0};
  else
    v = {p.kappa_z, p.theta_z, p.lambda_z, p.sigma_z, p.a0, p.gamma, p.b0};
  v.insert(v.end(), p.h.begin(), p.h.end());
  return v;
}

ModelParams unpack_parameters(const std::vector<double>& v, const ModelParams& base) {
  ModelParams p = base;
  const std::size_t head = base.kind == ModelKind::two_factor ? 11 : 7;
  if (v.size() != head + base.h.size()) throw ShapeError("parameter vector has the wrong length");
  if (base.kind == ModelKind::two_factor) {
    p.kappa_z = v[0];
    p.kappa_y = v[1];
    p.theta_z = v[2];
    p.lambda_z = v[3];
    p.lambda_y = v[4];
    p.sigma_z = v[5];
    p.sigma_y = v[6];
    p.a0 = v[7];
    p.gamma = v[8];
    p.b0 = v[9];
    p.c0 = v[10];
  } else {
    p.kappa_z = v[0];
    p.theta_z = v[1];
    p.lambda_z = v[2];
    p.sigma_z = v[3];
    p.a0 = v[4];
    p.gamma = v[5];
    p.b0 = v[6];
  }
  std::copy(v.begin() + static_cast<std::ptrdiff_t>(head), v.end(), p.h.begin());
  return p;
}

CalibrationResult qml_calibrate(const ObservationPanel& panel, const ModelParams& init,
                                const CalibrationConfig& config) {
  panel.check();
  const std::size_t n_tr = panel.tranche_count();
  if (init.h.size() != n_tr) throw ShapeError("initial parameters need one measurement variance per tranche");
  const auto logs = log_scaled(init.kind, n_tr);
  const auto raw0 = pack_parameters(init);
  const std::size_t n = raw0.size();
  std::vector<double> u0(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (logs[i] && !(raw0[i] > 0.0))
      throw DomainError("initial value of " + parameter_names(init.kind, n_tr)[i] + " must be positive");
    u0[i] = logs[i] ? std::log(raw0[i]) : raw0[i];
  }
  auto to_params = [&](const std::vector<double>& u) {
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = logs[i] ? std::exp(u[i]) : u[i];
    return unpack_parameters(raw, init);
  };
  auto objective = [&](const std::vector<double>& u) { return -kalman_loglik(to_params(u), panel); };

  const std::size_t starts = std::max<std::size_t>(1, config.multistarts);
  std::vector<NelderMeadResult> runs(starts);
  NelderMeadOptions nm;
  nm.max_evaluations = config.max_evaluations;
  parallel_for(
      starts,
      [&](std::size_t s) {
        auto u = u0;
        if (s > 0) {
          RandomStream rng(config.seed, s, StreamPurpose::multistart);
          for (auto& v : u) v += config.start_spread * rng.normal();
        }
        runs[s] = nelder_mead(objective, u, nm);
      },
      config.workers);

  CalibrationResult result;
  result.names = parameter_names(init.kind, n_tr);
  std::size_t best = 0;
  for (std::size_t s = 0; s < starts; ++s) {
    result.evaluations += runs[s].evaluations;
    result.start_logliks.push_back(-runs[s].value);
    if (runs[s].value < runs[best].value) best = s;
  }
  if (!std::isfinite(runs[best].value)) throw CalibrationError("no start produced a finite log-likelihood");
  NewtonOptions newton;
  newton.max_iterations = config.newton_iterations;
  newton.workers = config.workers;
  newton.relative_step = config.hessian_step;
  const auto polished = newton_polish(objective, runs[best].x, newton);
  result.evaluations += polished.evaluations;
  const auto& ub = polished.x;
  result.converged = runs[best].converged || polished.converged;
  result.loglik = -polished.value;
  result.estimates = to_params(ub);
  result.values = pack_parameters(result.estimates);

  const auto hess = finite_difference_hessian(objective, ub, config.hessian_step, config.workers);
  Eigen::MatrixXd H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hess[i][j];
      finite = finite && std::isfinite(hess[i][j]);
    }
  result.std_errors.assign(n, std::numeric_limits<double>::quiet_NaN());
  if (finite) {
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() == Eigen::Success) {
      const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(H.rows(), H.cols()));
      result.std_errors_available = true;
      for (std::size_t i = 0; i < n; ++i) {
        const double var = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        const double jac = logs[i] ? result.values[i] : 1.0;
        result.std_errors[i] = std::abs(jac) * std::sqrt(std::max(var, 0.0));
      }
    }
  }
  return result;
}

double lrt(double loglik_one_factor, double loglik_two_factor) {
  if (!std::isfinite(loglik_one_factor) || !std::isfinite(loglik_two_factor))
    throw DomainError("likelihood ratio needs finite log-likelihoods");
  const double stat = 2.0 * (loglik_two_factor - loglik_one_factor);
  if (stat < -1e-6)
    std::cerr << "warning: negative likelihood ratio statistic " << stat
              << "; nested fit beats the larger model (optimizer artifact)\n";
  return stat;
}

double chi_square_critical(double df, double level) {
  if (!(df > 0.0) || !(level > 0.0 && level < 1.0)) throw DomainError("chi-square quantile needs df > 0, level in (0,1)");
  const boost::math::chi_squared dist(df);
  return boost::math::quantile(boost::math::complement(dist, 1.0 - level));
}

SyntheticPanel synthesize_panel(const ModelParams& p, std::size_t n_dates, std::uint64_t seed,
                                const std::vector<double>& maturities, const std::vector<double>& boundaries,
                                std::size_t substeps) {
  if (n_dates == 0) throw DomainError("synthetic panel needs at least one date");
  if (substeps == 0) throw DomainError("need at least one Euler substep");
  validate(p);
  const FactorDynamics d = dynamics(p);
  const auto mm = measurement_model(p, maturities, boundaries);

  SyntheticPanel out;
  auto& panel = out.panel;
  panel.maturities = maturities;
  panel.boundaries = boundaries;
  const std::size_t n_cols = panel.column_count();
  panel.spreads.resize(static_cast<Eigen::Index>(n_dates), static_cast<Eigen::Index>(n_cols));
  panel.mask.setOnes(static_cast<Eigen::Index>(n_dates), static_cast<Eigen::Index>(n_cols));

  RandomStream factor_rng(seed, 0, StreamPurpose::factor);
  RandomStream noise_rng(seed, 0, StreamPurpose::panel_noise);
  const double dt = kDayFraction / static_cast<double>(substeps);
  const double sq = std::sqrt(dt);
  double y = d.theta, z = d.theta;
  auto advance_day = [&]() {
    for (std::size_t s = 0; s < substeps; ++s) {
      const double yp = std::max(y, 0.0), zp = std::max(z, 0.0);
      const double wy = factor_rng.normal(), wz = factor_rng.normal();
      y += d.kappa_y * (zp - yp) * dt + d.sigma_y * std::sqrt(yp) * sq * wy;
      if (!d.frozen_z) z += d.kappa_z * (d.theta - zp) * dt + d.sigma_z * std::sqrt(zp) * sq * wz;
    }
  };
  for (int burn = 0; burn < 250; ++burn) advance_day();
  for (std::size_t k = 0; k < n_dates; ++k) {
    advance_day();
    const Eigen::Vector2d state(std::max(y, 0.0), std::max(z, 0.0));
    out.states.push_back(state);
    panel.dates.push_back(static_cast<double>(k) * kDayFraction);
    for (std::size_t c = 0; c < n_cols; ++c) {
      const auto col = static_cast<Eigen::Index>(c);
      const double clean = mm.intercept(col) + mm.loading_y(col) * state(0) + mm.loading_z(col) * state(1);
      panel.spreads(static_cast<Eigen::Index>(k), col) = clean + std::sqrt(mm.noise(col)) * noise_rng.normal();
    }
  }
  return out;
}

}  // namespace affine_cdo
