#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "affine_cdo/model.hpp"
#include "affine_cdo/moments.hpp"
#include "affine_cdo/riccati.hpp"

namespace affine_cdo {

inline constexpr double kDayFraction = 1.0 / 250.0;

/// Zero-coupon spreads on a (maturity x tranche) grid per date; column l(i, j) = j * I + i.
struct ObservationPanel {
  std::vector<double> dates;       // years
  std::vector<double> maturities;  // tau_1..tau_I
  std::vector<double> boundaries;  // x_0..x_J
  Eigen::MatrixXd spreads;         // dates x (I * J)
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> mask;  // 1 = observed
  long first_day = 0;              // business-day number of dates[0] in the file calendar

  std::size_t maturity_count() const { return maturities.size(); }
  std::size_t tranche_count() const { return boundaries.size() - 1; }
  std::size_t column(std::size_t i, std::size_t j) const { return j * maturities.size() + i; }
  std::size_t column_count() const { return maturities.size() * tranche_count(); }

  /// Throws ShapeError or DomainError when the layout is inconsistent.
  void check() const;
};

struct MeasurementRow {
  double intercept = 0.0;
  double loading_y = 0.0;
  double loading_z = 0.0;
};

/// Affine map from state to spread for maturity tau and tranche cell j (zero-based).
MeasurementRow measurement_row(const ModelParams& p, const CoefficientCurve& c, double tau, std::size_t j);

/// Per-column measurement system of a panel layout, noise variances h_j replicated across maturities.
struct MeasurementModel {
  Eigen::VectorXd intercept;
  Eigen::VectorXd loading_y;
  Eigen::VectorXd loading_z;
  Eigen::VectorXd noise;
};

MeasurementModel measurement_model(const ModelParams& p, const std::vector<double>& maturities,
                                   const std::vector<double>& boundaries);

struct Transition {
  Eigen::Vector2d m0 = Eigen::Vector2d::Zero();
  Eigen::Matrix2d m1 = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d q = Eigen::Matrix2d::Zero();
};

/// Conditional mean map state -> M0 + M1 state and covariance Q over dt from the clamped state.
Transition transition_model(const ModelParams& p, const Eigen::Vector2d& prev_state, double dt);

/// Generic linear state space consumed by the filter.
struct StateSpaceModel {
  Eigen::VectorXd intercept;
  Eigen::VectorXd loading_y;
  Eigen::VectorXd loading_z;
  Eigen::VectorXd noise;
  Eigen::Vector2d initial_mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d initial_cov = Eigen::Matrix2d::Zero();
  std::function<Transition(const Eigen::Vector2d& state, double dt)> transition;
};

struct FilterOptions {
  bool clamp_states = true;
  bool keep_history = true;
  SingularPolicy policy = SingularPolicy::raise;
  double initial_step = kDayFraction;  // horizon from the initial moments to the first date
};

struct FilterOutput {
  std::vector<Eigen::Vector2d> predicted_states;
  std::vector<Eigen::Vector2d> filtered_states;
  std::vector<Eigen::Matrix2d> predicted_covariances;
  std::vector<Eigen::Matrix2d> state_covariances;
  std::vector<Eigen::VectorXd> innovations;
  std::vector<Eigen::MatrixXd> innovation_covariances;
  std::vector<double> loglik_terms;
  double loglik = 0.0;
  std::size_t jitter_retries = 0;
};

/// Kalman recursion with missing data: predict, update with the unmasked rows, accumulate the
/// Gaussian log-likelihood with the per-date constant -(d_k / 2) ln 2 pi.
FilterOutput run_filter(const StateSpaceModel& model, const ObservationPanel& panel, const FilterOptions& options = {});

/// Builds the state space from parameters (unconditional moments, measurement and transition
/// maps at L = 0) and runs the filter.
StateSpaceModel state_space(const ModelParams& p, const ObservationPanel& panel);
FilterOutput kalman_pass(const ModelParams& p, const ObservationPanel& panel, const FilterOptions& options = {});

/// Log-likelihood of the same recursion evaluated through the Woodbury identity and the
/// matrix determinant lemma, O(observations) per date.
double fast_loglik(const StateSpaceModel& model, const ObservationPanel& panel, const FilterOptions& options = {});

/// Log-likelihood only via fast_loglik; -infinity when the parameters cannot be evaluated.
double kalman_loglik(const ModelParams& p, const ObservationPanel& panel,
                     SingularPolicy policy = SingularPolicy::perturb);

// Calibration -------------------------------------------------------------------------------

/// Names of the free parameters in optimizer order.
std::vector<std::string> parameter_names(ModelKind kind, std::size_t tranche_count);
std::vector<double> pack_parameters(const ModelParams& p);
ModelParams unpack_parameters(const std::vector<double>& values, const ModelParams& base);
/// True for parameters optimized on a log scale, false for the market prices of risk.
std::vector<bool> log_scaled(ModelKind kind, std::size_t tranche_count);

struct CalibrationConfig {
  std::size_t max_evaluations = 20000;
  std::size_t multistarts = 4;
  std::uint64_t seed = 1;
  double start_spread = 0.1;  // standard deviation of start perturbations in transformed units
  std::size_t newton_iterations = 20;  // damped Newton steps after the simplex search
  double hessian_step = 1e-2;  // relative finite-difference step for the polish and the standard errors
  std::size_t workers = 0;
};

struct CalibrationResult {
  ModelParams estimates;
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> std_errors;  // NaN when the Hessian is not positive definite
  bool std_errors_available = false;
  double loglik = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
  std::vector<double> start_logliks;
};

CalibrationResult qml_calibrate(const ObservationPanel& panel, const ModelParams& init,
                                const CalibrationConfig& config = {});

/// 2 (LL_2 - LL_1); prints a nesting warning when the statistic is below -1e-6.
double lrt(double loglik_one_factor, double loglik_two_factor);

/// Upper quantile of the chi-square distribution.
double chi_square_critical(double df, double level = 0.99);

// Synthetic data ----------------------------------------------------------------------------

struct SyntheticPanel {
  ObservationPanel panel;
  std::vector<Eigen::Vector2d> states;
};

/// Business-daily factor path under the historical measure (full-truncation Euler with
/// substeps, started at the stationary mean) mapped through the measurement system plus
/// Gaussian noise with variances h_j.
SyntheticPanel synthesize_panel(const ModelParams& p, std::size_t n_dates, std::uint64_t seed,
                                const std::vector<double>& maturities = {3.0, 5.0, 7.0, 10.0},
                                const std::vector<double>& boundaries = standard_boundaries(),
                                std::size_t substeps = 20);

}  // namespace affine_cdo
