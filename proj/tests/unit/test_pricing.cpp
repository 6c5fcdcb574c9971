#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "affine_cdo/errors.hpp"
#include "affine_cdo/pricing.hpp"

using namespace affine_cdo;

namespace {

ModelParams table_params() { return ModelParams::reference_two_factor(); }

// Composite Simpson rule with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Upper cell boundaries belong to the next cell, so oracles sample just below them.
double below(double x) { return std::nextafter(x, 0.0); }

// Q(x) = kappa0 * sum_i P(T_i) + P(T_n) + r * int_t^{T_n} P(s) ds from pointwise bond prices.
double brute_q(const CoefficientCurve& c, const FactorState& f, const LossState& l, const std::vector<double>& dates,
               double t, double x, double kappa0, double& coupons, double& final_payment, double& time_integral) {
  coupons = 0.0;
  for (double T : dates)
    if (T > t) coupons += bond_price(c, f, l, x, T - t);
  final_payment = bond_price(c, f, l, x, dates.back() - t);
  // Simpson pairs aligned with the tau grid of the curve integrate its linear interpolant exactly.
  const int panels = 2 * static_cast<int>(std::lround(360.0 * (dates.back() - t)));
  time_integral = simpson([&](double s) { return bond_price(c, f, l, x, s - t); }, t, dates.back(), panels);
  return kappa0 * coupons + final_payment + c.params().r * time_integral;
}

}  // namespace

TEST(CouponSchedule, BusinessDayGrid) {
  const auto d = coupon_schedule(5.0);
  ASSERT_EQ(d.size(), 20u);
  EXPECT_DOUBLE_EQ(d[0], 63.0 / 250.0);
  EXPECT_DOUBLE_EQ(d[1], 125.0 / 250.0);
  EXPECT_DOUBLE_EQ(d[2], 188.0 / 250.0);
  EXPECT_DOUBLE_EQ(d[3], 1.0);
  EXPECT_DOUBLE_EQ(d.back(), 5.0);
  EXPECT_THROW(coupon_schedule(0.0), DomainError);
  EXPECT_THROW(make_tranche(0.1, 0.05, 5.0), DomainError);
}

TEST(ZeroSpread, RoundTripAndErrors) {
  const double r = 0.05, tau = 3.0, spread = 0.0123;
  EXPECT_NEAR(zero_spread(std::exp(-(r + spread) * tau), tau, r), spread, 1e-15);
  EXPECT_THROW(zero_spread(0.0, tau, r), WipedOutError);
  EXPECT_THROW(zero_spread(0.5, 0.0, r), DomainError);
}

TEST(TrancheDiscount, MatchesCellAverageOfBondPrices) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  const FactorState f{0.006, 0.005, 0.0};
  for (std::size_t j = 0; j < c.cells(); ++j) {
    const double lo = c.x_grid()[j], hi = c.x_grid()[j + 1];
    const double avg = simpson([&](double x) { return bond_price(c, f, LossState{0.0}, x, 5.0); }, lo, below(hi), 2000) /
                       (hi - lo);
    EXPECT_NEAR(tranche_discount(c, f, LossState{0.0}, j, 5.0), avg, 1e-12);
  }
  EXPECT_EQ(tranche_discount(c, f, LossState{0.07}, 1, 5.0), 0.0);
  EXPECT_NEAR(tranche_discount(c, f, LossState{0.0}, 2, 0.0), 1.0, 1e-14);
  EXPECT_THROW(tranche_discount(c, f, LossState{0.0}, c.cells(), 1.0), RangeError);
}

TEST(LegValuation, RisklessPoolHasNoProtection) {
  auto p = table_params();
  p.gamma = 0.0;
  p.b0 = 0.0;
  p.c0 = 0.0;
  CoefficientCurve c(p, standard_boundaries(), 5.0);
  const auto dates = coupon_schedule(5.0);
  LegValuation v(c, FactorState{0.01, 0.01, 0.0}, LossState{0.0}, 0.0, dates);
  double expected = 0.0;
  for (double T : dates) expected += std::exp(-p.r * T);
  EXPECT_NEAR(v.annuity(0.03, 0.06), 0.03 * expected, 1e-13);
  EXPECT_NEAR(v.protection_leg(0.0, 1.0), 0.0, 1e-14);
  EXPECT_NEAR(v.par_coupon(0.03, 0.06), 0.0, 1e-12);
}

TEST(LegValuation, LegsMatchPointwiseOracle) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  const FactorState f{0.0065, 0.0052, 0.0};
  const LossState l{0.0};
  const double t = 0.4;
  const auto dates = coupon_schedule(5.0);
  LegValuation v(c, f, l, t, dates);
  for (auto [x1, x2] : {std::pair{0.0, 0.03}, std::pair{0.06, 0.09}, std::pair{0.22, 1.0}}) {
    double ann = 0.0, prot = 0.0;
    const int n = 200;
    const double h = (x2 - x1) / n;
    for (int i = 0; i <= n; ++i) {
      const double x = i == n ? below(x2) : x1 + i * h;
      double cp, fp, ti;
      brute_q(c, f, l, dates, t, x, 0.0, cp, fp, ti);
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      ann += w * cp;
      prot += w * (1.0 - fp - p.r * ti);
    }
    ann *= h / 3.0;
    prot *= h / 3.0;
    EXPECT_NEAR(v.annuity(x1, x2) / ann, 1.0, 1e-6);
    EXPECT_NEAR(v.protection_leg(x1, x2) / prot, 1.0, 1e-6);
  }
}

TEST(LegValuation, AddingUpAcrossTranches) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  const FactorState f{0.0065, 0.0052, 0.0};
  LegValuation v(c, f, LossState{0.01}, 1.0, coupon_schedule(7.0));
  const auto b = standard_boundaries();
  double ann = 0.0, prot = 0.0;
  for (std::size_t j = 0; j + 1 < b.size(); ++j) {
    ann += v.annuity(b[j], b[j + 1]);
    prot += v.protection_leg(b[j], b[j + 1]);
  }
  EXPECT_NEAR(ann, v.annuity(0.0, 1.0), 1e-10);
  EXPECT_NEAR(prot, v.protection_leg(0.0, 1.0), 1e-10);
}

TEST(LegValuation, SeniorityOrderingOfParCoupons) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  LegValuation v(c, FactorState{0.0055, 0.0055, 0.0}, LossState{0.0}, 0.0, coupon_schedule(5.0));
  const auto b = standard_boundaries();
  double prev = INFINITY;
  for (std::size_t j = 0; j + 1 < b.size(); ++j) {
    const double k = v.par_coupon(b[j], b[j + 1]);
    EXPECT_GT(k, 0.0);
    EXPECT_LT(k, prev);
    prev = k;
  }
}

TEST(LegValuation, ParCouponStableUnderRefinement) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  const FactorState f{0.0065, 0.0052, 0.0};
  for (double maturity : {3.0, 5.0, 7.0, 10.0}) {
    const auto dates = coupon_schedule(maturity);
    LegValuation coarse(c, f, LossState{0.0}, 0.0, dates, {}, 16, 16);
    LegValuation fine(c, f, LossState{0.0}, 0.0, dates, {}, 32, 32);
    const auto b = standard_boundaries();
    for (std::size_t j = 0; j + 1 < b.size(); ++j)
      EXPECT_NEAR(coarse.par_coupon(b[j], b[j + 1]), fine.par_coupon(b[j], b[j + 1]), 1e-8)
          << "maturity " << maturity << " cell " << j;
  }
}

TEST(LegValuation, SpotValueSignAndWipeOut) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  const FactorState f{0.0065, 0.0052, 0.0};
  const auto dates = coupon_schedule(5.0);
  LegValuation v(c, f, LossState{0.0}, 0.0, dates);
  const double par = v.par_coupon(0.03, 0.06);
  EXPECT_NEAR(v.spot_value(0.03, 0.06, par), 0.0, 1e-14);
  EXPECT_GT(v.spot_value(0.03, 0.06, par + 0.01), 0.0);
  EXPECT_LT(v.spot_value(0.03, 0.06, par - 0.01), 0.0);
  EXPECT_NEAR(v.spot_value(0.03, 0.06, par + 0.01), 0.01 * v.annuity(0.03, 0.06), 1e-14);

  LegValuation wiped(c, f, LossState{0.07}, 0.0, dates);
  EXPECT_EQ(wiped.annuity(0.03, 0.06), 0.0);
  EXPECT_THROW(wiped.par_coupon(0.03, 0.06), WipedOutError);
  EXPECT_EQ(wiped.spot_value(0.03, 0.06, 0.05), 0.0);
  EXPECT_THROW(v.annuity(0.03, 0.05), DomainError);

  auto tr = make_tranche(0.03, 0.06, 5.0);
  EXPECT_THROW(spot_value(c, f, LossState{0.0}, tr, 0.0), DomainError);
  tr.kappa0 = par;
  EXPECT_NEAR(spot_value(c, f, LossState{0.0}, tr, 0.0), 0.0, 1e-14);
  EXPECT_NEAR(par_coupon(c, f, LossState{0.0}, tr, 0.0), par, 1e-15);
}

TEST(LegValuation, ExtraBreakpointsAndPartialLoss) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  const FactorState f{0.0065, 0.0052, 0.0};
  const auto dates = coupon_schedule(5.0);
  LegValuation v(c, f, LossState{0.04}, 0.0, dates, {0.05});
  EXPECT_NEAR(v.annuity(0.03, 0.05) + v.annuity(0.05, 0.06), v.annuity(0.03, 0.06), 1e-14);
  double ann = 0.0;
  for (double T : dates)
    ann += simpson([&](double x) { return bond_price(c, f, LossState{0.04}, x, T); }, 0.04, below(0.06), 400);
  EXPECT_NEAR(v.annuity(0.03, 0.06) / ann, 1.0, 1e-8);
}

TEST(LegValuation, DiffusionLoadingMatchesFiniteDifference) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  const double y = 0.0065, z = 0.0052, kappa0 = 0.02, h = 1e-7;
  const auto dates = coupon_schedule(5.0);
  auto value = [&](double yy, double zz) {
    return LegValuation(c, FactorState{yy, zz, 0.0}, LossState{0.0}, 0.0, dates).spot_value(0.03, 0.06, kappa0);
  };
  const auto load = LegValuation(c, FactorState{y, z, 0.0}, LossState{0.0}, 0.0, dates).diffusion_loading(0.03, 0.06, kappa0);
  const double dy = (value(y + h, z) - value(y - h, z)) / (2.0 * h);
  const double dz = (value(y, z + h) - value(y, z - h)) / (2.0 * h);
  EXPECT_NEAR(load[0], p.sigma_y * std::sqrt(y) * dy, 1e-7);
  EXPECT_NEAR(load[1], p.sigma_z * std::sqrt(z) * dz, 1e-7);
}

TEST(LegValuation, JumpProductMatchesBruteForce) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  const FactorState f{0.0065, 0.0052, 0.0};
  const LossState l{0.01};
  const double t = 0.0;
  const auto dates = coupon_schedule(3.0);
  const double x1a = 0.03, x2a = 0.06, ka = 0.03, x1b = 0.0, x2b = 1.0, kb = 0.004;
  LegValuation v(c, f, l, t, dates);
  const double fast = v.jump_loading_product(x1a, x2a, ka, x1b, x2b, kb);

  // Cumulative trapezoid of Q on a fine grid over [l, 1], then trapezoid against the density.
  const int n = 9900;
  const double h = (1.0 - l.l) / n;
  std::vector<double> xs(n + 1), qa(n + 1), qb(n + 1), qa_left(n + 1), qb_left(n + 1);
  const auto bounds = standard_boundaries();
  for (int i = 0; i <= n; ++i) {
    xs[i] = l.l + i * h;
    double cp, fp, ti;
    const double base = brute_q(c, f, l, dates, t, xs[i], 0.0, cp, fp, ti);
    qa[i] = qa_left[i] = base + ka * cp;
    qb[i] = qb_left[i] = base + kb * cp;
    for (double b : bounds) {
      if (i > 0 && std::abs(xs[i] - b) < 1e-12) {
        const double left = brute_q(c, f, l, dates, t, below(b), 0.0, cp, fp, ti);
        qa_left[i] = left + ka * cp;
        qb_left[i] = left + kb * cp;
      }
    }
  }
  std::vector<double> ga(n + 1, 0.0), gb(n + 1, 0.0);
  for (int i = 1; i <= n; ++i) {
    const double mid = 0.5 * (xs[i] + xs[i - 1]);
    ga[i] = ga[i - 1] + (mid > x1a && mid < x2a ? 0.5 * h * (qa_left[i] + qa[i - 1]) : 0.0);
    gb[i] = gb[i - 1] + (mid > x1b && mid < x2b ? 0.5 * h * (qb_left[i] + qb[i - 1]) : 0.0);
  }
  double slow = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double rho = p.gamma * p.a0 * std::exp(-p.a0 * xs[i]) + p.b0 * f.y * std::exp(-p.b0 * xs[i]);
    slow += (i == 0 || i == n ? 0.5 : 1.0) * h * rho * ga[i] * gb[i];
  }
  slow += p.c0 * f.z * ga[n] * gb[n];
  EXPECT_NEAR(fast / slow, 1.0, 5e-6);
}

TEST(LegValuation, ExpiredContractIsWorthless) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  LegValuation v(c, FactorState{0.0065, 0.0052, 0.0}, LossState{0.0}, 5.0, coupon_schedule(5.0));
  EXPECT_EQ(v.annuity(0.0, 1.0), 0.0);
  EXPECT_NEAR(v.protection_leg(0.0, 1.0), 0.0, 1e-15);
}
