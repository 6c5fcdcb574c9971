#pragma once

#include <array>
#include <cstdint>

#include "affine_cdo/model.hpp"

namespace affine_cdo {

struct MomentSet {
  double mean_y = 0.0;
  double mean_z = 0.0;
  double var_y = 0.0;
  double var_z = 0.0;
  double cov_yz = 0.0;
  double horizon = 0.0;
};

struct MomentEstimate {
  MomentSet moments;
  MomentSet std_errors;
  std::size_t paths = 0;
};

/// How cond_moments reacts to parameters near a singular manifold.
enum class SingularPolicy { raise, perturb };

/// Conditional mean and covariance of (Y_t, Z_t) given (y0, z0) under the historical measure.
///
/// The covariance is evaluated from the integral of Phi(t - s) diag(sigma_y^2 m_y(s),
/// sigma_z^2 m_z(s)) Phi(t - s)^T over [0, t], where m is the conditional mean and Phi the
/// drift propagator; every term is an exponential so the integral is closed form.
MomentSet cond_moments(const ModelParams& p, double y0, double z0, double t,
                       SingularPolicy policy = SingularPolicy::raise);

/// Stationary mean and covariance.
MomentSet uncond_moments(const ModelParams& p);

/// Full-truncation Euler Monte Carlo estimate of the conditional moments with standard errors.
/// Each path owns a counter-based stream keyed by (seed, path), so results do not depend on
/// the number of workers.
MomentEstimate mc_moment_oracle(const ModelParams& p, double y0, double z0, double t, std::size_t n_paths,
                                double step, std::uint64_t seed);

/// Polynomial coefficients of conditional moments, each ordered as
/// (1, y, z, z^2, zy, y^2).
struct MomentCoefficients {
  std::array<double, 6> g{};  // E[Z_t]
  std::array<double, 6> h{};  // E[Y_t]
  std::array<double, 6> f{};  // E[Y_t Z_t]
  std::array<double, 6> q{};  // E[Z_t^2]
  std::array<double, 6> p{};  // E[Y_t^2]

  /// Assembles mean and covariance at the initial state (y, z).
  MomentSet moments(double y, double z, double t) const;
};

/// RK4 integration of the linear coefficient system obtained by inserting a quadratic
/// polynomial into the backward equation, run once per initial monomial.
MomentCoefficients moment_coefficient_oracle(const ModelParams& p, double t, double step = 1e-3);

}  // namespace affine_cdo
