#pragma once

#include <string>
#include <vector>

namespace affine_cdo {

enum class ModelKind { two_factor, one_factor };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

/// Standard tranche boundaries 0, 3, 6, 9, 12, 22, 100 percent.
std::vector<double> standard_boundaries();

/// All model, risk-premium, contract-function and measurement-noise parameters.
///
/// In the one-factor kind the single factor has its own level theta_z, speed kappa_z,
/// volatility sigma_z and risk premium lambda_z and loads on the spreads through beta_y;
/// kappa_y, sigma_y and lambda_y are unused and c0 is forced to zero.
struct ModelParams {
  double kappa_y = 0.0;
  double kappa_z = 0.0;
  double theta_z = 0.0;
  double sigma_y = 0.0;
  double sigma_z = 0.0;
  double lambda_y = 0.0;
  double lambda_z = 0.0;
  double gamma = 0.0;
  double a0 = 0.0;
  double b0 = 0.0;
  double c0 = 0.0;
  double r = 0.05;
  std::vector<double> h;  // measurement variance per tranche
  ModelKind kind = ModelKind::two_factor;

  /// Two-factor estimates of the reference study with a default noise vector for six tranches.
  static ModelParams reference_two_factor();
  /// One-factor estimates of the reference study.
  static ModelParams reference_one_factor();
};

inline constexpr double kSingularEpsilon = 1e-6;
inline constexpr double kSingularShift = 1e-8;

/// Throws DomainError on sign violations and SingularityError when a two-factor parameter set
/// sits within `eps` of a manifold where the closed-form moments degenerate.
void validate(const ModelParams& p, double eps = kSingularEpsilon);

/// True when a parameter set lies within `eps` of a singular manifold.
bool is_near_singular(const ModelParams& p, double eps = kSingularEpsilon);

/// Moves kappa_z off the singular manifolds by repeated +1e-8 shifts. Returns true when a
/// shift was applied.
bool perturb_off_singular(ModelParams& p, double eps = kSingularEpsilon);

/// Factor dynamics seen by the Riccati, moment and simulation code. For the one-factor kind
/// the single factor is mapped to Y and Z is frozen at theta (zero speed, zero volatility).
struct FactorDynamics {
  double kappa_y;
  double kappa_z;
  double theta;
  double sigma_y;
  double sigma_z;
  double lambda_y;
  double lambda_z;
  bool frozen_z;
};

FactorDynamics dynamics(const ModelParams& p);

struct FactorState {
  double y = 0.0;
  double z = 0.0;
  double t = 0.0;
};

/// Z actually used by pricing and intensity: theta_z for the one-factor kind.
double effective_z(const ModelParams& p, const FactorState& f);

struct LossState {
  double l = 0.0;
  bool is_pre_jump = false;
};

struct ContractValues {
  double alpha;
  double beta_y;
  double beta_z;
};

/// alpha(x) = gamma (e^{-a0 (x^1)} - e^{-a0}) + r, beta_y(x) = e^{-b0 (x^1)} - e^{-b0},
/// beta_z(x) = c0 1[0 <= x < 1].
ContractValues contract_functions(double x, const ModelParams& p);

/// Cell averages of beta_y over [x_{j-1}, x_j), evaluated from the exponential primitive.
std::vector<double> piecewise_beta(const ModelParams& p, const std::vector<double>& boundaries);

/// Default-event arrival intensity at pre-jump loss l_pre.
double jump_intensity(const ModelParams& p, const FactorState& f, double l_pre);

/// Loss-given-default distribution function nu((0, x]) / Lambda.
double lgd_cdf(const ModelParams& p, const FactorState& f, double l_pre, double x);

/// Smallest jump size whose cdf reaches s; the catastrophic atom maps to exactly 1 - l_pre.
double lgd_inverse_cdf(const ModelParams& p, const FactorState& f, double l_pre, double s);

/// Expected jump size; include_catastrophe = false drops the c0 term from numerator and
/// denominator.
double expected_lgd(const ModelParams& p, const FactorState& f, double l_pre, bool include_catastrophe);

}  // namespace affine_cdo
