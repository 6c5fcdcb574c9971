#include "affine_cdo/hedging.hpp"

#include <algorithm>
#include <cmath>

#include "affine_cdo/errors.hpp"

namespace affine_cdo {

namespace {

void require_kappa0(const TrancheSpec& tr) {
  if (!tr.has_kappa0()) throw DomainError("tranche coupon kappa0 is not set");
}

void require_shared_schedule(const TrancheSpec& a, const TrancheSpec& b) {
  if (a.coupon_dates != b.coupon_dates) throw DomainError("tranches must share the coupon schedule");
}

bool on_schedule(double t, const std::vector<double>& coupon_dates) {
  return std::any_of(coupon_dates.begin(), coupon_dates.end(), [&](double c) { return std::abs(c - t) < 1e-9; });
}

}  // namespace

std::array<double, 2> diffusion_loading(const CoefficientCurve& c, const FactorState& f, const LossState& l,
                                        const TrancheSpec& tr, double t) {
  require_kappa0(tr);
  const LegValuation v(c, f, l, t, tr.coupon_dates, {tr.x1, tr.x2});
  return v.diffusion_loading(tr.x1, tr.x2, tr.kappa0);
}

double jump_loading_product(const CoefficientCurve& c, const FactorState& f, const LossState& l,
                            const TrancheSpec& a, const TrancheSpec& b, double t) {
  require_kappa0(a);
  require_kappa0(b);
  require_shared_schedule(a, b);
  const LegValuation v(c, f, l, t, a.coupon_dates, {a.x1, a.x2, b.x1, b.x2});
  return v.jump_loading_product(a.x1, a.x2, a.kappa0, b.x1, b.x2, b.kappa0);
}

double hedge_ratio(const std::array<double, 2>& b_tranche, const std::array<double, 2>& b_index, double jump_cross,
                   double jump_index) {
  const double num = b_tranche[0] * b_index[0] + b_tranche[1] * b_index[1] + jump_cross;
  const double den = b_index[0] * b_index[0] + b_index[1] * b_index[1] + jump_index;
  if (!(den > 0.0)) throw UndefinedError("hedge ratio undefined: index has no risk");
  return -num / den;
}

double variance_min_phi(const LegValuation& v, const TrancheSpec& tr, const TrancheSpec& index) {
  require_kappa0(tr);
  require_kappa0(index);
  const auto b_tr = v.diffusion_loading(tr.x1, tr.x2, tr.kappa0);
  const auto b_idx = v.diffusion_loading(index.x1, index.x2, index.kappa0);
  const double cross = v.jump_loading_product(tr.x1, tr.x2, tr.kappa0, index.x1, index.x2, index.kappa0);
  const double own = v.jump_loading_product(index.x1, index.x2, index.kappa0, index.x1, index.x2, index.kappa0);
  return hedge_ratio(b_tr, b_idx, cross, own);
}

double variance_min_phi(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr,
                        const TrancheSpec& index, double t) {
  require_shared_schedule(tr, index);
  const LegValuation v(c, f, l, t, tr.coupon_dates, {tr.x1, tr.x2, index.x1, index.x2});
  return variance_min_phi(v, tr, index);
}

double remaining_notional(double x1, double x2, double loss) {
  return std::max(x2 - loss, 0.0) - std::max(x1 - loss, 0.0);
}

std::vector<double> accumulate_value(const std::vector<double>& dates, const std::vector<double>& pl, double r) {
  if (dates.size() != pl.size()) throw ShapeError("dates and P&L differ in length");
  std::vector<double> v(dates.size(), 0.0);
  for (std::size_t k = 1; k < dates.size(); ++k) v[k] = v[k - 1] * std::exp(r * (dates[k] - dates[k - 1])) + pl[k];
  return v;
}

HedgeLedger backtest(const BacktestInput& in, const TrancheSpec& tr, const TrancheSpec& index, double r) {
  require_kappa0(tr);
  require_kappa0(index);
  const std::size_t n = in.dates.size();
  if (n == 0) throw ShapeError("backtest needs at least one date");
  if (in.losses.size() != n || in.tranche_spot.size() != n || in.index_spot.size() != n || in.phi.size() != n)
    throw ShapeError("backtest series are misaligned");
  for (std::size_t k = 1; k < n; ++k)
    if (!(in.dates[k] > in.dates[k - 1])) throw DomainError("backtest dates must be strictly increasing");

  HedgeLedger led;
  led.dates = in.dates;
  led.phi = in.phi;
  led.tranche_spot = in.tranche_spot;
  led.index_spot = in.index_spot;
  led.tranche_pl.assign(n, 0.0);
  led.daily_pl.assign(n, 0.0);
  led.hedged_pl.assign(n, 0.0);
  led.coupon.assign(n, 0);
  std::vector<double> index_unit_pl(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    const double growth = std::exp(r * (in.dates[k] - in.dates[k - 1]));
    const bool pays = on_schedule(in.dates[k], tr.coupon_dates);
    led.coupon[k] = pays ? 1 : 0;
    auto unit_pl = [&](const TrancheSpec& s, const std::vector<double>& spot) {
      const double h_prev = remaining_notional(s.x1, s.x2, in.losses[k - 1]);
      const double h_now = remaining_notional(s.x1, s.x2, in.losses[k]);
      const double coupon = on_schedule(in.dates[k], s.coupon_dates) ? s.kappa0 * h_now : 0.0;
      return spot[k] - spot[k - 1] * growth + coupon - (h_prev - h_now);
    };
    led.tranche_pl[k] = unit_pl(tr, in.tranche_spot);
    index_unit_pl[k] = unit_pl(index, in.index_spot);
    led.daily_pl[k] = in.phi[k - 1] * index_unit_pl[k];
    led.hedged_pl[k] = led.tranche_pl[k] + led.daily_pl[k];
  }
  led.value = accumulate_value(in.dates, led.daily_pl, r);
  const auto tranche_value = accumulate_value(in.dates, led.tranche_pl, r);
  const auto index_value = accumulate_value(in.dates, index_unit_pl, r);
  led.tranche_gains.resize(n);
  led.index_gains.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double disc = std::exp(-r * (in.dates[k] - in.dates[0]));
    led.tranche_gains[k] = disc * tranche_value[k];
    led.index_gains[k] = disc * index_value[k];
  }
  return led;
}

std::vector<HedgeLedger> hedge_along_path(const CoefficientCurve& c, const std::vector<double>& dates,
                                          const std::vector<double>& y, const std::vector<double>& z,
                                          const std::vector<double>& losses, std::vector<TrancheSpec> tranches,
                                          TrancheSpec index) {
  const std::size_t n = dates.size();
  if (n == 0) throw ShapeError("hedging path has no dates");
  if (y.size() != n || z.size() != n || losses.size() != n) throw ShapeError("hedging path series are misaligned");
  std::vector<double> extra{index.x1, index.x2};
  for (const auto& tr : tranches) {
    require_shared_schedule(tr, index);
    extra.push_back(tr.x1);
    extra.push_back(tr.x2);
  }
  const double r = c.params().r;
  const std::size_t m = tranches.size();
  std::vector<BacktestInput> inputs(m);
  for (auto& in : inputs) {
    in.dates = dates;
    in.losses = losses;
    in.tranche_spot.resize(n);
    in.index_spot.resize(n);
    in.phi.resize(n);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const FactorState f{y[k], z[k], dates[k]};
    const LossState l{losses[k], false};
    const LegValuation v(c, f, l, dates[k], index.coupon_dates, extra);
    if (k == 0) {
      if (!index.has_kappa0()) index.kappa0 = v.par_coupon(index.x1, index.x2);
      for (auto& tr : tranches)
        if (!tr.has_kappa0()) tr.kappa0 = v.par_coupon(tr.x1, tr.x2);
    }
    const double index_spot = v.spot_value(index.x1, index.x2, index.kappa0);
    for (std::size_t i = 0; i < m; ++i) {
      inputs[i].index_spot[k] = index_spot;
      inputs[i].tranche_spot[k] = v.spot_value(tranches[i].x1, tranches[i].x2, tranches[i].kappa0);
      double phi = 0.0;
      try {
        phi = variance_min_phi(v, tranches[i], index);
      } catch (const UndefinedError&) {
        phi = 0.0;
      }
      inputs[i].phi[k] = phi;
    }
  }
  std::vector<HedgeLedger> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(backtest(inputs[i], tranches[i], index, r));
  return out;
}

double reduction_in_volatility(const std::vector<double>& hedged, const std::vector<double>& unhedged,
                               const std::vector<double>& probs) {
  const std::size_t n = hedged.size();
  if (unhedged.size() != n) throw ShapeError("hedged and unhedged P&L differ in length");
  if (!probs.empty() && probs.size() != n) throw ShapeError("weights do not match the P&L series");
  if (n < 2) throw UndefinedError("volatility needs at least two observations");
  auto stdev = [&](const std::vector<double>& x) {
    if (probs.empty()) {
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (double v : x) ss += (v - mean) * (v - mean);
      return std::sqrt(ss / static_cast<double>(n - 1));
    }
    double total = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (probs[i] < 0.0) throw DomainError("weights must be nonnegative");
      total += probs[i];
      mean += probs[i] * x[i];
    }
    if (!(total > 0.0)) throw UndefinedError("weights sum to zero");
    mean /= total;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += probs[i] * (x[i] - mean) * (x[i] - mean);
    return std::sqrt(ss / total);
  };
  const double su = stdev(unhedged);
  if (!(su > 0.0)) throw UndefinedError("unhedged P&L has zero volatility");
  return 100.0 * (stdev(hedged) / su);
}

double reduction_in_volatility(const HedgeLedger& ledger) {
  if (ledger.hedged_pl.size() < 3) throw UndefinedError("ledger too short for a volatility ratio");
  const std::vector<double> h(ledger.hedged_pl.begin() + 1, ledger.hedged_pl.end());
  const std::vector<double> u(ledger.tranche_pl.begin() + 1, ledger.tranche_pl.end());
  return reduction_in_volatility(h, u);
}

}  // namespace affine_cdo
