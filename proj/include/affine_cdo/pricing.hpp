#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "affine_cdo/riccati.hpp"

namespace affine_cdo {

inline constexpr double kBusinessDaysPerYear = 250.0;
inline constexpr std::size_t kGaussNodes = 16;

struct TrancheSpec {
  double x1 = 0.0;
  double x2 = 1.0;
  std::vector<double> coupon_dates;
  double kappa0 = std::numeric_limits<double>::quiet_NaN();

  bool has_kappa0() const { return !std::isnan(kappa0); }
  double maturity() const { return coupon_dates.empty() ? 0.0 : coupon_dates.back(); }
};

/// Quarterly payment times on the 250-day business grid: T_i = round(62.5 i) / 250.
std::vector<double> coupon_schedule(double maturity_years, int payments_per_year = 4);

TrancheSpec make_tranche(double x1, double x2, double maturity_years);

/// Everything needed to value tranches on one date: bond prices on a (loss level, maturity)
/// node set built from coupon dates, the final payment date and a composite Gauss-Legendre
/// rule per coupon period for the protection-leg time integral.
///
/// Loss-level nodes are Gauss-Legendre points on every segment between consecutive
/// breakpoints above the current loss; breakpoints are the curve cells plus any extra points
/// supplied, which must include the attachment points of every tranche queried.
class LegValuation {
 public:
  LegValuation(const CoefficientCurve& curve, const FactorState& f, const LossState& l, double t,
               const std::vector<double>& coupon_dates, const std::vector<double>& extra_breakpoints = {},
               std::size_t x_nodes = kGaussNodes, std::size_t time_nodes = kGaussNodes);

  double annuity(double x1, double x2) const;
  double protection_leg(double x1, double x2) const;
  /// Par coupon; throws WipedOutError when the annuity vanishes.
  double par_coupon(double x1, double x2) const;
  /// (kappa0 - par) * annuity, zero for a wiped-out tranche.
  double spot_value(double x1, double x2, double kappa0) const;

  /// Diffusion loading of the discounted gains process of a long position.
  std::array<double, 2> diffusion_loading(double x1, double x2, double kappa0) const;

  /// Integral of C^A C^B against the jump compensator, continuous part plus catastrophic atom.
  double jump_loading_product(double x1a, double x2a, double kappa0a, double x1b, double x2b,
                              double kappa0b) const;

  double loss() const { return loss_; }
  std::size_t x_node_count() const { return xs_.size(); }

 private:
  struct Range {
    std::size_t begin;
    std::size_t end;
  };
  Range nodes_in(double x1, double x2) const;
  // Running integral of Q = kappa0 * coupons + final + r * time integral at every node.
  std::vector<double> cumulative_q(double x1, double x2, double kappa0) const;

  const ModelParams* params_;
  double loss_;
  double y_;
  double z_;
  double t_;
  std::size_t rule_size_;
  std::vector<double> seg_lo_, seg_hi_;
  std::vector<double> xs_, wx_;
  // per node sums over maturities: coupons, final payment, time integral
  std::vector<double> qc_, qn_, qt_;
  std::vector<double> qc_by_, qn_by_, qt_by_, qc_bz_, qn_bz_, qt_bz_;
  bool alive_ = true;
};

/// Average of P(t, t + tau, x) over tranche cell j of the curve.
double tranche_discount(const CoefficientCurve& c, const FactorState& f, const LossState& l, std::size_t j, double tau);

/// R = -ln(d) / tau - r.
double zero_spread(double d, double tau, double r);

double annuity(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr, double t);
double protection_leg(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr,
                      double t);
double par_coupon(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr, double t);
double spot_value(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr, double t);

}  // namespace affine_cdo
