#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "affine_cdo/errors.hpp"
#include "affine_cdo/kalman.hpp"
#include "affine_cdo/optimize.hpp"
#include "affine_cdo/pricing.hpp"

using namespace affine_cdo;

namespace {

ModelParams table_params() { return ModelParams::reference_two_factor(); }

ObservationPanel small_panel(std::size_t n_dates) {
  ObservationPanel panel;
  panel.maturities = {1.0};
  panel.boundaries = {0.0, 0.5, 1.0};
  for (std::size_t k = 0; k < n_dates; ++k) panel.dates.push_back(static_cast<double>(k) * kDayFraction);
  panel.spreads = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_dates), 2);
  panel.mask.setOnes(static_cast<Eigen::Index>(n_dates), 2);
  return panel;
}

StateSpaceModel constant_model() {
  StateSpaceModel m;
  m.intercept = Eigen::Vector2d(0.01, 0.02);
  m.loading_y = Eigen::Vector2d(2.0, 0.5);
  m.loading_z = Eigen::Vector2d(1.0, 3.0);
  m.noise = Eigen::Vector2d(1e-4, 4e-4);
  m.initial_mean << 0.005, 0.006;
  m.initial_cov << 1e-4, 1e-5, 1e-5, 2e-4;
  m.transition = [](const Eigen::Vector2d&, double) {
    Transition tr;
    tr.m0 << 1e-3, 2e-3;
    tr.m1 << 0.9, 0.05, 0.0, 0.95;
    tr.q << 1e-5, 2e-6, 2e-6, 4e-6;
    return tr;
  };
  return m;
}

}  // namespace

TEST(Measurement, MatchesPricingDiscountPath) {
  const auto p = table_params();
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  for (double tau : {3.0, 5.0, 7.0, 10.0}) {
    for (std::size_t j = 0; j < c.cells(); ++j) {
      for (auto [y, z] : {std::pair{0.0, 0.0}, std::pair{0.0065, 0.0052}, std::pair{0.03, 0.001}}) {
        const auto row = measurement_row(p, c, tau, j);
        const double model = row.intercept + row.loading_y * y + row.loading_z * z;
        const double priced = zero_spread(tranche_discount(c, FactorState{y, z, 0.0}, LossState{0.0}, j, tau), tau, p.r);
        EXPECT_NEAR(model, priced, 1e-10) << "tau " << tau << " cell " << j;
      }
    }
  }
}

TEST(Measurement, RisklessInterceptVanishes) {
  auto p = table_params();
  p.gamma = 0.0;
  p.theta_z = 0.0;
  CoefficientCurve c(p, standard_boundaries(), 10.0);
  for (std::size_t j = 0; j < c.cells(); ++j) EXPECT_NEAR(measurement_row(p, c, 5.0, j).intercept, 0.0, 1e-15);
  const auto mm = measurement_model(p, {3.0, 5.0}, standard_boundaries());
  EXPECT_EQ(mm.intercept.size(), 12);
  EXPECT_EQ(mm.noise(1), p.h[0]);
  EXPECT_EQ(mm.noise(2), p.h[1]);
}

TEST(Transition, Limits) {
  const auto p = table_params();
  const auto small = transition_model(p, Eigen::Vector2d(0.01, 0.002), 1e-12);
  EXPECT_NEAR(small.m0.norm(), 0.0, 1e-13);
  EXPECT_NEAR((small.m1 - Eigen::Matrix2d::Identity()).norm(), 0.0, 1e-12);
  EXPECT_NEAR(small.q.norm(), 0.0, 1e-13);
  const double th = p.theta_z;
  const double long_dt = 50.0 / std::min(p.kappa_y, p.kappa_z);
  const auto tr = transition_model(p, Eigen::Vector2d(th, th), long_dt);
  const Eigen::Vector2d mean = tr.m0 + tr.m1 * Eigen::Vector2d(th, th);
  EXPECT_NEAR(mean(0), th, 1e-15);
  EXPECT_NEAR(mean(1), th, 1e-15);
  const auto step = transition_model(p, Eigen::Vector2d(0.02, 0.001), 0.3);
  const auto m = cond_moments(p, 0.02, 0.001, 0.3);
  const Eigen::Vector2d mapped = step.m0 + step.m1 * Eigen::Vector2d(0.02, 0.001);
  EXPECT_NEAR(mapped(0), m.mean_y, 1e-15);
  EXPECT_NEAR(mapped(1), m.mean_z, 1e-15);
  EXPECT_THROW(transition_model(p, Eigen::Vector2d(0.0, 0.0), 0.0), DomainError);
}

TEST(Transition, CovarianceMatchesMonteCarlo) {
  const auto p = table_params();
  const auto tr = transition_model(p, Eigen::Vector2d(0.0055, 0.0055), kDayFraction);
  const auto est = mc_moment_oracle(p, 0.0055, 0.0055, kDayFraction, 100000, kDayFraction / 8.0, 99);
  EXPECT_LT(std::abs(tr.q(0, 0) - est.moments.var_y), 3.0 * est.std_errors.var_y);
  EXPECT_LT(std::abs(tr.q(1, 1) - est.moments.var_z), 3.0 * est.std_errors.var_z);
  EXPECT_LT(std::abs(tr.q(0, 1) - est.moments.cov_yz), 3.0 * est.std_errors.cov_yz);
}

TEST(Transition, OneFactorPinsLevel) {
  auto p = ModelParams::reference_one_factor();
  p.kappa_z = 0.5;
  const auto tr = transition_model(p, Eigen::Vector2d(0.05, 123.0), 0.2);
  const Eigen::Vector2d mean = tr.m0 + tr.m1 * Eigen::Vector2d(0.05, p.theta_z);
  EXPECT_NEAR(mean(0), p.theta_z + (0.05 - p.theta_z) * std::exp(-0.5 * 0.2), 1e-15);
  EXPECT_NEAR(mean(1), p.theta_z, 1e-17);
  EXPECT_EQ(tr.q(1, 1), 0.0);
  EXPECT_EQ(tr.q(0, 1), 0.0);
}

TEST(Filter, HandComputedTwoDateExampleBitwise) {
  auto panel = small_panel(2);
  panel.spreads << 0.031, 0.047, 0.029, 0.052;
  const auto model = constant_model();
  const auto out = run_filter(model, panel);

  // Straight-line reference in the filter's operation order.
  const double M00 = 0.9, M01 = 0.05, M10 = 0.0, M11 = 0.95;
  const double m00 = 1e-3, m01 = 2e-3;
  const double Q00 = 1e-5, Q01 = 2e-6, Q10 = 2e-6, Q11 = 4e-6;
  const double c[2] = {0.01, 0.02}, by[2] = {2.0, 0.5}, bz[2] = {1.0, 3.0}, h[2] = {1e-4, 4e-4};
  double x0 = 0.005, x1 = 0.006, P00 = 1e-4, P01 = 1e-5, P10 = 1e-5, P11 = 2e-4;
  double loglik = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double s[2] = {panel.spreads(k, 0), panel.spreads(k, 1)};
    const double xp0 = m00 + (M00 * x0 + M01 * x1);
    const double xp1 = m01 + (M10 * x0 + M11 * x1);
    const double t00 = M00 * P00 + M01 * P10, t01 = M00 * P01 + M01 * P11;
    const double t10 = M10 * P00 + M11 * P10, t11 = M10 * P01 + M11 * P11;
    const double pp00 = (t00 * M00 + t01 * M01) + Q00;
    const double pp01 = 0.5 * (((t00 * M10 + t01 * M11) + Q01) + ((t10 * M00 + t11 * M01) + Q10));
    const double pp11 = (t10 * M10 + t11 * M11) + Q11;
    double bp0[2], bp1[2], e[2];
    for (int r = 0; r < 2; ++r) {
      bp0[r] = by[r] * pp00 + bz[r] * pp01;
      bp1[r] = by[r] * pp01 + bz[r] * pp11;
      e[r] = s[r] - (c[r] + (by[r] * xp0 + bz[r] * xp1));
    }
    const double F00 = (bp0[0] * by[0] + bp1[0] * bz[0]) + h[0];
    const double F10 = bp0[1] * by[0] + bp1[1] * bz[0];
    const double F11 = (bp0[1] * by[1] + bp1[1] * bz[1]) + h[1];
    const double l00 = std::sqrt(F00), l10 = F10 / l00, l11 = std::sqrt(F11 - l10 * l10);
    const double logdet = (std::log(l00) + std::log(l11)) * 2.0;
    auto solve = [&](double b0, double b1, double& o0, double& o1) {
      const double v0 = b0 / l00, v1 = (b1 - l10 * v0) / l11;
      o1 = v1 / l11;
      o0 = (v0 - l10 * o1) / l00;
    };
    double u0, u1, w00, w01, w10, w11;
    solve(e[0], e[1], u0, u1);
    solve(bp0[0], bp0[1], w00, w01);
    solve(bp1[0], bp1[1], w10, w11);
    const double quad = e[0] * u0 + e[1] * u1;
    const double gx0 = bp0[0] * u0 + bp0[1] * u1, gx1 = bp1[0] * u0 + bp1[1] * u1;
    const double g00 = bp0[0] * w00 + bp0[1] * w01, g01 = bp0[0] * w10 + bp0[1] * w11;
    const double g10 = bp1[0] * w00 + bp1[1] * w01, g11 = bp1[0] * w10 + bp1[1] * w11;
    x0 = std::max(xp0 + gx0, 0.0);
    x1 = std::max(xp1 + gx1, 0.0);
    P00 = pp00 - g00;
    P01 = P10 = 0.5 * ((pp01 - g01) + (pp01 - g10));
    P11 = pp11 - g11;
    loglik += -0.5 * (2.0 * std::log(2.0 * std::numbers::pi) + logdet + quad);

    EXPECT_EQ(out.predicted_states[k](0), xp0);
    EXPECT_EQ(out.predicted_states[k](1), xp1);
    EXPECT_EQ(out.filtered_states[k](0), x0);
    EXPECT_EQ(out.filtered_states[k](1), x1);
    EXPECT_EQ(out.state_covariances[k](0, 0), P00);
    EXPECT_EQ(out.state_covariances[k](0, 1), P01);
    EXPECT_EQ(out.state_covariances[k](1, 1), P11);
    EXPECT_EQ(out.innovations[k](0), e[0]);
    EXPECT_EQ(out.innovation_covariances[k](1, 0), F10);
  }
  EXPECT_EQ(out.loglik, loglik);
}

TEST(Filter, ZeroInnovationKeepsPrediction) {
  auto panel = small_panel(20);
  const auto model = constant_model();
  Eigen::Vector2d x = model.initial_mean;
  const auto tr = model.transition(x, kDayFraction);
  for (Eigen::Index k = 0; k < 20; ++k) {
    x = tr.m0 + tr.m1 * x;
    for (Eigen::Index c = 0; c < 2; ++c)
      panel.spreads(k, c) = model.intercept(c) + model.loading_y(c) * x(0) + model.loading_z(c) * x(1);
  }
  const auto out = run_filter(model, panel);
  for (std::size_t k = 0; k < 20; ++k) {
    EXPECT_NEAR(out.filtered_states[k](0), out.predicted_states[k](0), 1e-17);
    EXPECT_NEAR(out.filtered_states[k](1), out.predicted_states[k](1), 1e-17);
  }
}

TEST(Filter, UninformativeMeasurementsFollowPrediction) {
  auto panel = small_panel(30);
  panel.spreads.setConstant(0.5);
  auto model = constant_model();
  model.noise *= 1e9;
  const auto out = run_filter(model, panel);
  Eigen::Vector2d x = model.initial_mean;
  const auto tr = model.transition(x, kDayFraction);
  for (std::size_t k = 0; k < 30; ++k) {
    x = tr.m0 + tr.m1 * x;
    EXPECT_NEAR(out.filtered_states[k](0), x(0), 1e-6);
    EXPECT_NEAR(out.filtered_states[k](1), x(1), 1e-6);
    // gain = P B^T F^{-1}; its norm is bounded by |P B^T| / min(h)
    const Eigen::Matrix2d pb = out.predicted_covariances[k] *
                               (Eigen::Matrix2d() << model.loading_y(0), model.loading_y(1), model.loading_z(0),
                                model.loading_z(1))
                                   .finished();
    EXPECT_LT(pb.norm() / model.noise.minCoeff(), 1e-6);
  }
}

TEST(Filter, MatchesTextbookKalmanForGaussianSystem) {
  auto panel = small_panel(40);
  for (Eigen::Index k = 0; k < 40; ++k) {
    panel.spreads(k, 0) = 0.03 + 0.002 * std::sin(0.3 * k);
    panel.spreads(k, 1) = 0.05 + 0.003 * std::cos(0.2 * k);
  }
  panel.mask(5, 1) = 0;
  panel.mask(9, 0) = 0;
  const auto model = constant_model();
  FilterOptions options;
  options.clamp_states = false;
  const auto out = run_filter(model, panel, options);

  const auto tr = model.transition(model.initial_mean, kDayFraction);
  Eigen::Matrix2d B;
  B << model.loading_y(0), model.loading_z(0), model.loading_y(1), model.loading_z(1);
  Eigen::Vector2d x = model.initial_mean;
  Eigen::Matrix2d P = model.initial_cov;
  double loglik = 0.0;
  for (Eigen::Index k = 0; k < 40; ++k) {
    x = tr.m0 + tr.m1 * x;
    P = tr.m1 * P * tr.m1.transpose() + tr.q;
    std::vector<Eigen::Index> rows;
    for (Eigen::Index c = 0; c < 2; ++c)
      if (panel.mask(k, c)) rows.push_back(c);
    const auto d = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd Bk(d, 2);
    Eigen::VectorXd e(d), h(d);
    for (Eigen::Index r = 0; r < d; ++r) {
      Bk.row(r) = B.row(rows[r]);
      e(r) = panel.spreads(k, rows[r]) - model.intercept(rows[r]) - B.row(rows[r]).dot(x);
      h(r) = model.noise(rows[r]);
    }
    const Eigen::MatrixXd F = Bk * P * Bk.transpose() + Eigen::MatrixXd(h.asDiagonal());
    const Eigen::MatrixXd K = P * Bk.transpose() * F.inverse();
    x += K * e;
    P = (Eigen::Matrix2d::Identity() - K * Bk) * P;
    loglik += -0.5 * (d * std::log(2.0 * std::numbers::pi) + std::log(F.determinant()) + e.dot(F.inverse() * e));
    EXPECT_NEAR(out.filtered_states[k](0), x(0), 1e-12 * std::abs(x(0)) + 1e-16);
    EXPECT_NEAR(out.filtered_states[k](1), x(1), 1e-12 * std::abs(x(1)) + 1e-16);
    EXPECT_NEAR(out.state_covariances[k](0, 1), P(0, 1), 1e-12 * std::abs(P(0, 1)) + 1e-18);
  }
  EXPECT_NEAR(out.loglik, loglik, 1e-10 * std::abs(loglik));
}

class FilterOnSynthetic : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { data_ = new SyntheticPanel(synthesize_panel(table_params(), 200, 11)); }
  static void TearDownTestSuite() { delete data_; }
  static SyntheticPanel* data_;
};
SyntheticPanel* FilterOnSynthetic::data_ = nullptr;

TEST_F(FilterOnSynthetic, MissingDataEqualsHugeNoise) {
  const auto p = table_params();
  auto masked = data_->panel;
  masked.mask(10, 3) = 0;
  masked.mask(50, 20) = 0;
  masked.mask(51, 0) = 0;
  const auto a = run_filter(state_space(p, data_->panel), masked);
  // Huge noise must apply only on the affected dates, so filter date by date with per-date noise.
  auto dense = data_->panel;
  FilterOutput b;
  {
    auto m = state_space(p, data_->panel);
    auto base_noise = m.noise;
    Eigen::Vector2d x = m.initial_mean;
    Eigen::Matrix2d P = m.initial_cov;
    for (std::size_t k = 0; k < dense.dates.size(); ++k) {
      ObservationPanel one = dense;
      one.dates = {dense.dates[k]};
      one.spreads = dense.spreads.row(static_cast<Eigen::Index>(k));
      one.mask = dense.mask.row(static_cast<Eigen::Index>(k));
      m.noise = base_noise;
      if (k == 10) m.noise(3) = 1e12;
      if (k == 50) m.noise(20) = 1e12;
      if (k == 51) m.noise(0) = 1e12;
      m.initial_mean = x;
      m.initial_cov = P;
      FilterOptions opt;
      opt.initial_step = k == 0 ? kDayFraction : dense.dates[k] - dense.dates[k - 1];
      const auto o = run_filter(m, one, opt);
      x = o.filtered_states[0];
      P = o.state_covariances[0];
      b.filtered_states.push_back(x);
    }
  }
  for (std::size_t k = 0; k < a.filtered_states.size(); ++k) {
    EXPECT_NEAR(a.filtered_states[k](0), b.filtered_states[k](0), 1e-6);
    EXPECT_NEAR(a.filtered_states[k](1), b.filtered_states[k](1), 1e-6);
  }
}

TEST_F(FilterOnSynthetic, InvariantUnderColumnReordering) {
  const auto p = table_params();
  const auto model = state_space(p, data_->panel);
  const auto base = run_filter(model, data_->panel);
  const auto n = static_cast<Eigen::Index>(data_->panel.column_count());
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = (7 * i + 3) % n;
  auto panel = data_->panel;
  auto m = model;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto src = perm[static_cast<std::size_t>(i)];
    panel.spreads.col(i) = data_->panel.spreads.col(src);
    m.intercept(i) = model.intercept(src);
    m.loading_y(i) = model.loading_y(src);
    m.loading_z(i) = model.loading_z(src);
    m.noise(i) = model.noise(src);
  }
  const auto shuffled = run_filter(m, panel);
  EXPECT_NEAR(shuffled.loglik, base.loglik, 1e-9 * std::abs(base.loglik));
  EXPECT_NEAR(shuffled.filtered_states.back()(0), base.filtered_states.back()(0), 1e-12);
}

TEST_F(FilterOnSynthetic, CovariancesSymmetricPositive) {
  const auto out = kalman_pass(table_params(), data_->panel);
  ASSERT_EQ(out.filtered_states.size(), 200u);
  EXPECT_TRUE(std::isfinite(out.loglik));
  for (std::size_t k = 0; k < out.state_covariances.size(); ++k) {
    const auto& P = out.state_covariances[k];
    EXPECT_EQ(P(0, 1), P(1, 0));
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(P).eigenvalues().minCoeff(), -1e-10);
    const auto& F = out.innovation_covariances[k];
    EXPECT_TRUE(F.isApprox(F.transpose(), 0.0));
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(F).eigenvalues().minCoeff(), -1e-10);
    EXPECT_GE(out.filtered_states[k].minCoeff(), 0.0);
  }
}

TEST_F(FilterOnSynthetic, LoglikOnlyPathAgrees) {
  const auto p = table_params();
  const double reference = kalman_pass(p, data_->panel).loglik;
  EXPECT_NEAR(kalman_loglik(p, data_->panel), reference, 1e-9 * std::abs(reference));
  auto masked = data_->panel;
  masked.mask(3, 4) = 0;
  masked.mask.row(7).setZero();
  const auto model = state_space(p, masked);
  const double ref_masked = run_filter(model, masked).loglik;
  EXPECT_NEAR(fast_loglik(model, masked), ref_masked, 1e-9 * std::abs(ref_masked));
  auto bad = p;
  bad.sigma_y = -1.0;
  EXPECT_EQ(kalman_loglik(bad, data_->panel), -INFINITY);
}

TEST(Filter, RejectsBadLayouts) {
  auto panel = small_panel(3);
  panel.mask.resize(2, 2);
  EXPECT_THROW(run_filter(constant_model(), panel), ShapeError);
  auto p2 = small_panel(3);
  p2.dates[2] = p2.dates[1];
  EXPECT_THROW(run_filter(constant_model(), p2), DomainError);
}

TEST(Calibration, ParameterPacking) {
  const auto p = table_params();
  EXPECT_EQ(parameter_names(ModelKind::two_factor, 6).size(), 17u);
  EXPECT_EQ(parameter_names(ModelKind::one_factor, 6).size(), 13u);
  const auto v = pack_parameters(p);
  ASSERT_EQ(v.size(), 17u);
  const auto back = unpack_parameters(v, p);
  EXPECT_EQ(pack_parameters(back), v);
  const auto logs = log_scaled(ModelKind::two_factor, 6);
  EXPECT_FALSE(logs[3]);
  EXPECT_FALSE(logs[4]);
  EXPECT_TRUE(logs[0]);
  EXPECT_THROW(unpack_parameters({1.0, 2.0}, p), ShapeError);
}

TEST(Calibration, DominatesStartingPointOnShortPanel) {
  const auto p = ModelParams::reference_one_factor();
  auto q = p;
  q.kappa_z = 0.3;
  const auto data = synthesize_panel(q, 60, 3);
  CalibrationConfig cfg;
  cfg.multistarts = 2;
  cfg.max_evaluations = 1500;
  const auto r = qml_calibrate(data.panel, q, cfg);
  EXPECT_GE(r.loglik, kalman_loglik(q, data.panel) - 1e-6);
  EXPECT_EQ(r.values.size(), 13u);
  EXPECT_EQ(r.std_errors.size(), 13u);
  EXPECT_EQ(r.start_logliks.size(), 2u);
}

TEST(Lrt, ExamplesAndCriticalValue) {
  EXPECT_EQ(lrt(1.0, 1.0), 0.0);
  EXPECT_NEAR(lrt(6.9365e4, 8.7842e4), 3.6954e4, 1e-9);
  EXPECT_NEAR(chi_square_critical(4.0), 13.276704, 1e-5);
  EXPECT_NEAR(chi_square_critical(1.0), 6.634897, 1e-5);
  EXPECT_THROW(lrt(NAN, 1.0), DomainError);
}

TEST(Optimizer, RosenbrockAndQuadraticHessian) {
  auto rosen = [](const std::vector<double>& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  NelderMeadOptions o;
  o.f_tolerance = 1e-14;
  o.x_tolerance = 1e-10;
  const auto r = nelder_mead(rosen, {-1.2, 1.0}, o);
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  EXPECT_NEAR(r.x[1], 1.0, 1e-5);
  EXPECT_TRUE(r.converged);
  auto quad = [](const std::vector<double>& x) { return 3.0 * x[0] * x[0] + x[0] * x[1] + 2.0 * x[1] * x[1]; };
  const auto h = finite_difference_hessian(quad, {0.3, -0.2}, 1e-3);
  EXPECT_NEAR(h[0][0], 6.0, 1e-6);
  EXPECT_NEAR(h[0][1], 1.0, 1e-6);
  EXPECT_NEAR(h[1][1], 4.0, 1e-6);
  auto nan_away = [](const std::vector<double>& x) { return x[0] < 0.0 ? NAN : (x[0] - 2.0) * (x[0] - 2.0); };
  EXPECT_NEAR(nelder_mead(nan_away, {0.5}).x[0], 2.0, 1e-3);
}
