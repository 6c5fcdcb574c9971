#pragma once

#include <cstddef>
#include <vector>

#include "affine_cdo/model.hpp"

namespace affine_cdo {

inline constexpr double kRiccatiStep = 1.0 / 360.0;
inline constexpr double kRiccatiOverflow = 1e6;

/// Coefficient functions of one loss level sampled on tau_k = k * tau_max / n.
///
/// `shift` is A(tau) - alpha * tau, the part of A driven by the factor loadings; for the
/// two-factor model it equals kappa_z theta_z times `b_z_integral`.
struct RiccatiColumn {
  double alpha = 0.0;
  double beta_y = 0.0;
  double beta_z = 0.0;
  std::vector<double> tau;
  std::vector<double> a;
  std::vector<double> b_y;
  std::vector<double> b_z;
  std::vector<double> b_z_integral;
  std::vector<double> shift;
};

/// RK4 solution of the Riccati system at loss level x with the exact contract functions.
RiccatiColumn solve_riccati(const ModelParams& p, double x, double tau_max, double step = kRiccatiStep);

/// Same system driven by given constant inputs (alpha, beta_y, beta_z).
RiccatiColumn solve_riccati(const ModelParams& p, const ContractValues& inputs, double tau_max,
                            double step = kRiccatiStep);

/// Scalar closed form B(tau) of d/dtau B = beta - k B - s^2 B^2 / 2, B(0) = 0.
double cir_riccati_closed_form(double beta, double k, double sigma, double tau);

/// A(tau, x), B_y(tau, x), B_z(tau, x) on tranche cells.
///
/// Inside cell [x_{j-1}, x_j) the loadings B_y, B_z are driven by the cell average of beta_y
/// and by c0, so they are constant in x; A(tau, x) = alpha(x) tau + shift_j(tau) keeps the exact
/// alpha(x). For x >= 1 the bond is riskless. Values between tau nodes are linear interpolants.
class CoefficientCurve {
 public:
  struct Node {
    double shift;
    double b_y;
    double b_z;
  };

  CoefficientCurve() = default;
  CoefficientCurve(const ModelParams& p, std::vector<double> boundaries, double tau_max,
                   double step = kRiccatiStep);

  const ModelParams& params() const { return params_; }
  const std::vector<double>& x_grid() const { return boundaries_; }
  const std::vector<double>& tau_grid() const { return tau_; }
  double tau_max() const { return tau_.back(); }
  std::size_t cells() const { return boundaries_.size() - 1; }

  /// Cell containing x; returns cells() for x >= 1.
  std::size_t cell_of(double x) const;

  /// Interpolated coefficients of a cell at tau; cell == cells() gives the riskless zeros.
  Node at(std::size_t cell, double tau) const;

  double a(double tau, double x) const;
  double b_y(double tau, double x) const;
  double b_z(double tau, double x) const;
  double b_z_integral(double tau, double x) const;
  /// shift_j(tau) = A(tau, x) - alpha(x) tau for x in cell j.
  double shift(double tau, double x) const;

  /// Column of a cell as solved, with nodes aligned to tau_grid().
  const RiccatiColumn& column(std::size_t cell) const { return columns_[cell]; }

 private:
  void locate(double tau, std::size_t& k, double& w) const;

  ModelParams params_;
  std::vector<double> boundaries_;
  std::vector<double> tau_;
  std::vector<RiccatiColumn> columns_;
};

/// 1{l <= x} exp(-A(tau, x) - B_y(tau, x) y - B_z(tau, x) z).
double bond_price(const CoefficientCurve& c, const FactorState& f, const LossState& l, double x, double tau);

/// Price from a single column, used when the exact contract functions at x are wanted.
double bond_price(const RiccatiColumn& column, const ModelParams& p, const FactorState& f, const LossState& l,
                  double x, double tau);

}  // namespace affine_cdo
