#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "affine_cdo/pricing.hpp"
#include "affine_cdo/riccati.hpp"

namespace affine_cdo {

/// Diffusion loading of a tranche with a fixed coupon; tr.kappa0 must be set.
std::array<double, 2> diffusion_loading(const CoefficientCurve& c, const FactorState& f, const LossState& l,
                                        const TrancheSpec& tr, double t);

/// Integral of C^A C^B against the jump compensator; both tranches must share coupon dates.
double jump_loading_product(const CoefficientCurve& c, const FactorState& f, const LossState& l,
                            const TrancheSpec& a, const TrancheSpec& b, double t);

/// -(b_tr . b_idx + jump_cross) / (|b_idx|^2 + jump_index); UndefinedError on a zero denominator.
double hedge_ratio(const std::array<double, 2>& b_tranche, const std::array<double, 2>& b_index, double jump_cross,
                   double jump_index);

/// Variance-minimizing index position per unit of tranche notional.
double variance_min_phi(const LegValuation& v, const TrancheSpec& tr, const TrancheSpec& index);
double variance_min_phi(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr,
                        const TrancheSpec& index, double t);

/// Daily series of one tranche hedged with the index; PL entries at the first date are zero.
struct HedgeLedger {
  std::vector<double> dates;
  std::vector<double> phi;            // index position held over (t_k, t_{k+1}]
  std::vector<double> tranche_spot;
  std::vector<double> index_spot;
  std::vector<double> tranche_pl;     // unhedged long tranche
  std::vector<double> daily_pl;       // hedging portfolio
  std::vector<double> hedged_pl;      // tranche_pl + daily_pl
  std::vector<double> value;          // hedging portfolio V
  std::vector<double> tranche_gains;  // discounted tranche gains
  std::vector<double> index_gains;    // discounted gains of one unit of index
  std::vector<std::uint8_t> coupon;   // 1 on coupon payment dates
};

struct BacktestInput {
  std::vector<double> dates;
  std::vector<double> losses;
  std::vector<double> tranche_spot;
  std::vector<double> index_spot;
  std::vector<double> phi;
};

/// Self-financing ledger V_k = V_{k-1} e^{r dt} + PL_k with PL per unit position
/// Gamma_k - Gamma_{k-1} e^{r dt} + 1[t_k coupon] kappa0 H(L_k) - (H(L_{k-1}) - H(L_k)).
HedgeLedger backtest(const BacktestInput& in, const TrancheSpec& tr, const TrancheSpec& index, double r);

/// Rebuilds V from dates and PL with the same recursion as backtest.
std::vector<double> accumulate_value(const std::vector<double>& dates, const std::vector<double>& pl, double r);

/// (x2 - l)^+ - (x1 - l)^+.
double remaining_notional(double x1, double x2, double loss);

/// Model spot values and hedge ratios along a state path for several tranches hedged with the
/// index; contracts without kappa0 are struck at par on the first date. One ledger per tranche.
/// Dates where the hedge ratio is undefined carry phi = 0.
std::vector<HedgeLedger> hedge_along_path(const CoefficientCurve& c, const std::vector<double>& dates,
                                          const std::vector<double>& y, const std::vector<double>& z,
                                          const std::vector<double>& losses, std::vector<TrancheSpec> tranches,
                                          TrancheSpec index);

/// 100 * sd(hedged) / sd(unhedged); optional weights give weighted standard deviations.
double reduction_in_volatility(const std::vector<double>& hedged, const std::vector<double>& unhedged,
                               const std::vector<double>& probs = {});

/// Reduction in volatility of a ledger over its daily P&L after the first date.
double reduction_in_volatility(const HedgeLedger& ledger);

}  // namespace affine_cdo
