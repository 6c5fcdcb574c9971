#include "affine_cdo/pricing.hpp"

#include <algorithm>
#include <cmath>

#include "affine_cdo/errors.hpp"
#include "affine_cdo/quadrature.hpp"

namespace affine_cdo {

namespace {

constexpr double kSnap = 1e-12;

}  // namespace

std::vector<double> coupon_schedule(double maturity_years, int payments_per_year) {
  if (!(maturity_years > 0.0) || payments_per_year <= 0) throw DomainError("maturity and frequency must be positive");
  const double days_per_period = kBusinessDaysPerYear / payments_per_year;
  const long n = std::lround(maturity_years * payments_per_year);
  std::vector<double> dates;
  dates.reserve(static_cast<std::size_t>(n));
  for (long i = 1; i <= n; ++i) dates.push_back(std::floor(days_per_period * i + 0.5) / kBusinessDaysPerYear);
  return dates;
}

TrancheSpec make_tranche(double x1, double x2, double maturity_years) {
  if (!(0.0 <= x1 && x1 < x2 && x2 <= 1.0)) throw DomainError("tranche needs 0 <= x1 < x2 <= 1");
  TrancheSpec tr;
  tr.x1 = x1;
  tr.x2 = x2;
  tr.coupon_dates = coupon_schedule(maturity_years);
  return tr;
}

LegValuation::LegValuation(const CoefficientCurve& curve, const FactorState& f, const LossState& l, double t,
                           const std::vector<double>& coupon_dates, const std::vector<double>& extra_breakpoints,
                           std::size_t x_nodes, std::size_t time_nodes)
    : params_(&curve.params()), loss_(l.l), y_(f.y), z_(effective_z(curve.params(), f)), t_(t), rule_size_(x_nodes) {
  if (coupon_dates.empty()) throw DomainError("coupon schedule is empty");
  if (!std::is_sorted(coupon_dates.begin(), coupon_dates.end())) throw DomainError("coupon dates must be sorted");
  const double maturity = coupon_dates.back();
  if (t > maturity + kSnap || loss_ >= 1.0) alive_ = false;

  // maturity nodes
  struct TauNode {
    double tau;
    double coupon;
    double final_payment;
    double time_weight;
  };
  std::vector<TauNode> tau_nodes;
  if (alive_) {
    for (double T : coupon_dates)
      if (T > t + kSnap) tau_nodes.push_back({T - t, 1.0, 0.0, 0.0});
    tau_nodes.push_back({std::max(0.0, maturity - t), 0.0, 1.0, 0.0});
    std::vector<double> panel{t};
    for (double T : coupon_dates)
      if (T > t + kSnap) panel.push_back(T);
    const auto& rule_t = GaussLegendre::rule(time_nodes);
    for (std::size_t i = 1; i < panel.size(); ++i) {
      std::vector<double> u, w;
      append_mapped_nodes(rule_t, panel[i - 1], panel[i], u, w);
      for (std::size_t k = 0; k < u.size(); ++k) tau_nodes.push_back({u[k] - t, 0.0, 0.0, w[k]});
    }
  }

  // loss-level segments above the current loss
  std::vector<double> breaks = curve.x_grid();
  breaks.insert(breaks.end(), extra_breakpoints.begin(), extra_breakpoints.end());
  breaks.push_back(loss_);
  breaks.push_back(1.0);
  std::vector<double> kept;
  for (double b : breaks)
    if (b >= loss_ && b <= 1.0) kept.push_back(b);
  std::sort(kept.begin(), kept.end());
  for (std::size_t i = 0; alive_ && i + 1 < kept.size(); ++i) {
    if (kept[i + 1] - kept[i] > kSnap) {
      seg_lo_.push_back(kept[i]);
      seg_hi_.push_back(kept[i + 1]);
    }
  }

  const std::size_t cells = curve.cells();
  const std::size_t nt = tau_nodes.size();
  std::vector<double> g((cells + 1) * nt), by((cells + 1) * nt), bz((cells + 1) * nt);
  std::vector<bool> cell_used(cells + 1, false);
  const auto& rule_x = GaussLegendre::rule(x_nodes);
  std::vector<std::size_t> node_cell;
  for (std::size_t s = 0; s < seg_lo_.size(); ++s) {
    const std::size_t j = curve.cell_of(0.5 * (seg_lo_[s] + seg_hi_[s]));
    cell_used[j] = true;
    append_mapped_nodes(rule_x, seg_lo_[s], seg_hi_[s], xs_, wx_);
    node_cell.insert(node_cell.end(), rule_x.size(), j);
  }
  for (std::size_t j = 0; j <= cells; ++j) {
    if (!cell_used[j]) continue;
    for (std::size_t k = 0; k < nt; ++k) {
      const auto node = curve.at(j, tau_nodes[k].tau);
      g[j * nt + k] = std::exp(-node.shift - node.b_y * y_ - node.b_z * z_);
      by[j * nt + k] = node.b_y;
      bz[j * nt + k] = node.b_z;
    }
  }

  const std::size_t nx = xs_.size();
  qc_.assign(nx, 0.0);
  qn_.assign(nx, 0.0);
  qt_.assign(nx, 0.0);
  qc_by_.assign(nx, 0.0);
  qn_by_.assign(nx, 0.0);
  qt_by_.assign(nx, 0.0);
  qc_bz_.assign(nx, 0.0);
  qn_bz_.assign(nx, 0.0);
  qt_bz_.assign(nx, 0.0);
  for (std::size_t n = 0; n < nx; ++n) {
    const double alpha = contract_functions(xs_[n], *params_).alpha;
    const std::size_t j = node_cell[n];
    for (std::size_t k = 0; k < nt; ++k) {
      const auto& tn = tau_nodes[k];
      const double price = std::exp(-alpha * tn.tau) * g[j * nt + k];
      const double pby = price * by[j * nt + k];
      const double pbz = price * bz[j * nt + k];
      if (tn.coupon != 0.0) {
        qc_[n] += price;
        qc_by_[n] += pby;
        qc_bz_[n] += pbz;
      } else if (tn.final_payment != 0.0) {
        qn_[n] += price;
        qn_by_[n] += pby;
        qn_bz_[n] += pbz;
      } else {
        qt_[n] += tn.time_weight * price;
        qt_by_[n] += tn.time_weight * pby;
        qt_bz_[n] += tn.time_weight * pbz;
      }
    }
  }
}

LegValuation::Range LegValuation::nodes_in(double x1, double x2) const {
  if (!(x1 < x2)) throw DomainError("tranche needs x1 < x2");
  std::size_t first = seg_lo_.size(), last = 0;
  for (std::size_t s = 0; s < seg_lo_.size(); ++s) {
    const double lo = seg_lo_[s], hi = seg_hi_[s];
    const bool straddles = (lo < x1 - kSnap && hi > x1 + kSnap) || (lo < x2 - kSnap && hi > x2 + kSnap);
    if (straddles) throw DomainError("tranche attachment points must be valuation breakpoints");
    if (lo >= x1 - kSnap && hi <= x2 + kSnap) {
      first = std::min(first, s);
      last = s + 1;
    }
  }
  if (first >= last) return {0, 0};
  return {first * rule_size_, last * rule_size_};
}

double LegValuation::annuity(double x1, double x2) const {
  const auto r = nodes_in(x1, x2);
  double sum = 0.0;
  for (std::size_t n = r.begin; n < r.end; ++n) sum += wx_[n] * qc_[n];
  return sum;
}

double LegValuation::protection_leg(double x1, double x2) const {
  const auto r = nodes_in(x1, x2);
  const double rate = params_->r;
  double sum = 0.0;
  for (std::size_t n = r.begin; n < r.end; ++n) sum += wx_[n] * (1.0 - qn_[n] - rate * qt_[n]);
  return sum;
}

double LegValuation::par_coupon(double x1, double x2) const {
  const double s = annuity(x1, x2);
  if (!(s > 0.0)) throw WipedOutError("annuity is zero: tranche wiped out or expired");
  return protection_leg(x1, x2) / s;
}

double LegValuation::spot_value(double x1, double x2, double kappa0) const {
  const double s = annuity(x1, x2);
  if (!(s > 0.0)) return 0.0;
  return kappa0 * s - protection_leg(x1, x2);
}

std::array<double, 2> LegValuation::diffusion_loading(double x1, double x2, double kappa0) const {
  const auto r = nodes_in(x1, x2);
  const FactorDynamics d = dynamics(*params_);
  const double rate = params_->r;
  double sy = 0.0, sz = 0.0;
  for (std::size_t n = r.begin; n < r.end; ++n) {
    sy += wx_[n] * (kappa0 * qc_by_[n] + qn_by_[n] + rate * qt_by_[n]);
    sz += wx_[n] * (kappa0 * qc_bz_[n] + qn_bz_[n] + rate * qt_bz_[n]);
  }
  return {-d.sigma_y * std::sqrt(std::max(0.0, y_)) * sy, -d.sigma_z * std::sqrt(std::max(0.0, z_)) * sz};
}

std::vector<double> LegValuation::cumulative_q(double x1, double x2, double kappa0) const {
  const auto& rule = GaussLegendre::rule(rule_size_);
  const auto& S = rule.cumulative_matrix();
  const std::size_t m = rule_size_;
  const double rate = params_->r;
  std::vector<double> out(xs_.size() + 1, 0.0);
  std::vector<double> q(m);
  double base = 0.0;
  for (std::size_t s = 0; s < seg_lo_.size(); ++s) {
    const double lo = seg_lo_[s], hi = seg_hi_[s];
    const std::size_t n0 = s * m;
    const bool inside = lo >= x1 - kSnap && hi <= x2 + kSnap;
    if (!inside) {
      for (std::size_t k = 0; k < m; ++k) out[n0 + k] = base;
      continue;
    }
    const double half = 0.5 * (hi - lo);
    double full = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      q[k] = kappa0 * qc_[n0 + k] + qn_[n0 + k] + rate * qt_[n0 + k];
      full += wx_[n0 + k] * q[k];
    }
    for (std::size_t k = 0; k < m; ++k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += S[k * m + i] * q[i];
      out[n0 + k] = base + half * acc;
    }
    base += full;
  }
  out.back() = base;
  return out;
}

double LegValuation::jump_loading_product(double x1a, double x2a, double kappa0a, double x1b, double x2b,
                                          double kappa0b) const {
  if (!alive_ || xs_.empty()) return 0.0;
  nodes_in(x1a, x2a);
  nodes_in(x1b, x2b);
  const auto ga = cumulative_q(x1a, x2a, kappa0a);
  const auto gb = cumulative_q(x1b, x2b, kappa0b);
  const ModelParams& p = *params_;
  double sum = 0.0;
  for (std::size_t n = 0; n < xs_.size(); ++n) {
    const double x = xs_[n];
    const double density = p.gamma * p.a0 * std::exp(-p.a0 * x) + p.b0 * y_ * std::exp(-p.b0 * x);
    sum += wx_[n] * density * ga[n] * gb[n];
  }
  if (loss_ < 1.0) sum += p.c0 * z_ * ga.back() * gb.back();
  return sum;
}

double tranche_discount(const CoefficientCurve& c, const FactorState& f, const LossState& l, std::size_t j,
                        double tau) {
  if (j >= c.cells()) throw RangeError("tranche index outside the curve");
  const double x_lo = c.x_grid()[j], x_hi = c.x_grid()[j + 1];
  if (l.l >= x_hi) return 0.0;
  const double lo = std::max(x_lo, l.l);
  const auto node = c.at(j, tau);
  const double z = effective_z(c.params(), f);
  const double g = std::exp(-node.shift - node.b_y * f.y - node.b_z * z);
  const ModelParams& p = c.params();
  const double integral = GaussLegendre::rule(kGaussNodes).integrate(
      [&](double x) { return std::exp(-contract_functions(x, p).alpha * tau); }, lo, x_hi);
  return std::clamp(g * integral / (x_hi - x_lo), 0.0, 1.0);
}

double zero_spread(double d, double tau, double r) {
  if (!(tau > 0.0)) throw DomainError("zero spread needs a positive maturity");
  if (!(d > 0.0)) throw WipedOutError("discount factor is zero: tranche wiped out");
  return -std::log(d) / tau - r;
}

namespace {

LegValuation valuation_for(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr,
                           double t) {
  return LegValuation(c, f, l, t, tr.coupon_dates, {tr.x1, tr.x2});
}

}  // namespace

double annuity(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr, double t) {
  return valuation_for(c, f, l, tr, t).annuity(tr.x1, tr.x2);
}

double protection_leg(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr,
                      double t) {
  return valuation_for(c, f, l, tr, t).protection_leg(tr.x1, tr.x2);
}

double par_coupon(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr, double t) {
  return valuation_for(c, f, l, tr, t).par_coupon(tr.x1, tr.x2);
}

double spot_value(const CoefficientCurve& c, const FactorState& f, const LossState& l, const TrancheSpec& tr, double t) {
  if (!tr.has_kappa0()) throw DomainError("spot value needs the contract coupon kappa0");
  return valuation_for(c, f, l, tr, t).spot_value(tr.x1, tr.x2, tr.kappa0);
}

}  // namespace affine_cdo
