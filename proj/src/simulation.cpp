#include "affine_cdo/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "affine_cdo/errors.hpp"
#include "affine_cdo/moments.hpp"
#include "affine_cdo/parallel.hpp"
#include "affine_cdo/rng.hpp"

namespace affine_cdo {

namespace {

// Neumaier compensated sum.
double stable_sum(const std::vector<double>& v) {
  double sum = 0.0, comp = 0.0;
  for (double x : v) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

FactorPath simulate_factors(const ModelParams& p, double y0, double z0, std::size_t steps, double dt,
                            std::uint64_t seed, std::uint64_t scenario, Measure measure, std::size_t substeps) {
  if (steps == 0) throw DomainError("factor path needs at least one step");
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  if (substeps == 0) throw DomainError("substeps must be positive");
  if (!(y0 >= 0.0) || !(z0 >= 0.0)) throw DomainError("initial factors must be nonnegative");
  const FactorDynamics d = dynamics(p);
  const bool q = measure == Measure::risk_neutral;
  const double ly = q ? d.lambda_y : 0.0, lz = q ? d.lambda_z : 0.0;
  const double h = dt / static_cast<double>(substeps);
  const double sqrt_h = std::sqrt(h);
  RandomStream rng(seed, scenario, StreamPurpose::factor);
  FactorPath path;
  path.y.resize(steps + 1);
  path.z.resize(steps + 1);
  double y = y0;
  double z = d.frozen_z ? d.theta : z0;
  path.y[0] = y;
  path.z[0] = z;
  for (std::size_t k = 1; k <= steps; ++k) {
    for (std::size_t s = 0; s < substeps; ++s) {
      const double n1 = rng.normal();
      const double n2 = rng.normal();
      const double yp = std::max(y, 0.0), zp = std::max(z, 0.0);
      const double y_next = y + (d.kappa_y * (zp - yp) - ly * yp) * h + d.sigma_y * std::sqrt(yp) * sqrt_h * n1;
      if (!d.frozen_z) z += (d.kappa_z * (d.theta - zp) - lz * zp) * h + d.sigma_z * std::sqrt(zp) * sqrt_h * n2;
      y = y_next;
    }
    path.y[k] = std::max(y, 0.0);
    path.z[k] = std::max(z, 0.0);
  }
  return path;
}

LossPath simulate_loss(const ModelParams& p, const FactorPath& factors, double dt, double psi, std::uint64_t seed,
                       std::uint64_t scenario) {
  if (!(psi > 0.0)) throw DomainError("importance parameter psi must be positive");
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const std::size_t n = factors.size();
  if (n == 0 || factors.z.size() != n) throw ShapeError("factor path is empty or misaligned");
  RandomStream clock(seed, scenario, StreamPurpose::clock);
  RandomStream sizes(seed, scenario, StreamPurpose::jump_size);
  LossPath out;
  out.loss.assign(n, 0.0);
  out.cumulative_intensity.assign(n, 0.0);
  double level = 0.0;        // loss after the last jump
  double at_jump = 0.0;      // cumulative intensity at the last jump
  double untilted = 0.0;
  double u = clock.exponential();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const FactorState f{factors.y[k], factors.z[k], static_cast<double>(k) * dt};
    const double lambda = jump_intensity(p, f, level);
    if (!(lambda >= 0.0)) throw NumericalError("negative jump intensity in loss simulation");
    untilted += lambda * dt;
    out.cumulative_intensity[k + 1] = out.cumulative_intensity[k] + psi * lambda * dt;
    out.loss[k + 1] = level;
    if (out.cumulative_intensity[k + 1] - at_jump >= u) {
      const FactorState g{factors.y[k + 1], factors.z[k + 1], static_cast<double>(k + 1) * dt};
      if (jump_intensity(p, g, level) > 0.0) {
        const double jump = lgd_inverse_cdf(p, g, level, sizes.uniform());
        level = std::min(1.0, level + jump);
        out.loss[k + 1] = level;
        ++out.jumps;
        out.jump_steps.push_back(k + 1);
      }
      at_jump = out.cumulative_intensity[k + 1];
      u = clock.exponential();
    }
  }
  out.intensity_integral = untilted;
  return out;
}

double importance_weight(std::size_t jumps, double intensity_integral, double psi) {
  if (!(psi > 0.0)) throw DomainError("importance parameter psi must be positive");
  if (psi == 1.0) return 1.0;
  return std::exp((psi - 1.0) * intensity_integral - static_cast<double>(jumps) * std::log(psi));
}

std::vector<double> normalize_and_aggregate(std::size_t n_normal, const std::vector<double>& stress_weights) {
  if (n_normal == 0 || stress_weights.empty()) throw DomainError("both scenario batches must be non-empty");
  for (double w : stress_weights)
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("scenario weights must be finite and nonnegative");
  const double total = stable_sum(stress_weights);
  if (!(total > 0.0)) throw UndefinedError("stress scenario weights sum to zero");
  std::vector<double> p(stress_weights.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = stress_weights[i] / total;
  const auto largest = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
  p[largest] += 1.0 - stable_sum(p);
  std::vector<double> out(n_normal + p.size());
  const double q = 1.0 / static_cast<double>(n_normal);
  for (std::size_t i = 0; i < n_normal; ++i) out[i] = 0.5 * q;
  for (std::size_t i = 0; i < p.size(); ++i) out[n_normal + i] = 0.5 * p[i];
  return out;
}

std::vector<double> ScenarioSet::probabilities() const {
  std::vector<double> out;
  out.reserve(scenarios.size());
  for (const auto& s : scenarios) out.push_back(s.probability);
  return out;
}

std::vector<double> ScenarioSet::terminal_losses() const {
  std::vector<double> out;
  out.reserve(scenarios.size());
  for (const auto& s : scenarios) out.push_back(s.loss.loss.empty() ? 0.0 : s.loss.loss.back());
  return out;
}

double ScenarioSet::total_probability() const { return stable_sum(probabilities()); }

ScenarioSet simulate_scenarios(const ModelParams& p, const SimulationConfig& config, const FactorPath* fixed) {
  if (config.n_normal == 0 || config.n_stress == 0) throw DomainError("both scenario batches must be non-empty");
  if (!(config.psi > 0.0)) throw DomainError("importance parameter psi must be positive");
  if (fixed && fixed->size() != config.steps + 1) throw ShapeError("fixed factor path does not match the step count");
  double y0 = config.y0, z0 = config.z0;
  if (std::isnan(y0) || std::isnan(z0)) {
    const MomentSet m = uncond_moments(p);
    if (std::isnan(y0)) y0 = m.mean_y;
    if (std::isnan(z0)) z0 = m.mean_z;
  }
  ScenarioSet set;
  set.seed = config.seed;
  set.dt = config.dt;
  set.n_normal = config.n_normal;
  const std::size_t total = config.n_normal + config.n_stress;
  set.scenarios.resize(total);
  parallel_for(
      total,
      [&](std::size_t i) {
        Scenario& s = set.scenarios[i];
        s.index = i;
        s.psi = i < config.n_normal ? 1.0 : config.psi;
        s.factors = fixed ? *fixed : simulate_factors(p, y0, z0, config.steps, config.dt, config.seed, i);
        s.loss = simulate_loss(p, s.factors, config.dt, s.psi, config.seed, i);
        s.weight = importance_weight(s.loss.jumps, s.loss.intensity_integral, s.psi);
      },
      config.workers);
  std::vector<double> stress;
  stress.reserve(config.n_stress);
  for (std::size_t i = config.n_normal; i < total; ++i) stress.push_back(set.scenarios[i].weight);
  const auto probs = normalize_and_aggregate(config.n_normal, stress);
  for (std::size_t i = 0; i < total; ++i) set.scenarios[i].probability = probs[i];
  return set;
}

double weighted_empirical_cdf(const std::vector<double>& values, const std::vector<double>& probs, double x) {
  if (values.size() != probs.size()) throw ShapeError("values and probabilities differ in length");
  std::vector<double> hit;
  hit.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] <= x) hit.push_back(probs[i]);
  return stable_sum(hit);
}

WeightedEstimate sample_mean(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) throw UndefinedError("sample mean needs at least two values");
  WeightedEstimate e;
  e.mean = stable_sum(values) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - e.mean) * (v - e.mean);
  e.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return e;
}

WeightedEstimate weighted_mean(const std::vector<double>& values, const std::vector<double>& probs) {
  if (values.size() != probs.size()) throw ShapeError("values and probabilities differ in length");
  const double total = stable_sum(probs);
  if (!(total > 0.0)) throw UndefinedError("probabilities sum to zero");
  WeightedEstimate e;
  for (std::size_t i = 0; i < values.size(); ++i) e.mean += probs[i] * values[i];
  e.mean /= total;
  double ss = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = probs[i] / total;
    ss += w * w * (values[i] - e.mean) * (values[i] - e.mean);
  }
  e.std_error = std::sqrt(ss);
  return e;
}

double kolmogorov_survival(double x) {
  if (!(x > 0.0)) return 1.0;
  if (x < 1.0) {
    // P(K <= x) = sqrt(2 pi) / x sum_k exp(-(2k - 1)^2 pi^2 / (8 x^2))
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double term = std::exp(-(2.0 * k - 1.0) * (2.0 * k - 1.0) * c);
      s += term;
      if (term < 1e-300) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
  const std::size_t n = sample.size();
  if (n == 0) throw DomainError("KS test needs a non-empty sample");
  std::sort(sample.begin(), sample.end());
  const double dn = static_cast<double>(n);
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / dn - f, f - static_cast<double>(i) / dn});
  }
  const double root = std::sqrt(dn);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

BookResult hedge_book(const CoefficientCurve& c, const ScenarioSet& set, const std::vector<TrancheSpec>& tranches,
                      const TrancheSpec& index, std::size_t workers) {
  const std::size_t n = set.scenarios.size();
  const std::size_t m = tranches.size();
  BookResult book;
  book.reduction.assign(m, std::vector<double>(n, std::numeric_limits<double>::quiet_NaN()));
  parallel_for(
      n,
      [&](std::size_t i) {
        const Scenario& s = set.scenarios[i];
        std::vector<double> dates(s.factors.size());
        for (std::size_t k = 0; k < dates.size(); ++k) dates[k] = static_cast<double>(k) * set.dt;
        const auto ledgers = hedge_along_path(c, dates, s.factors.y, s.factors.z, s.loss.loss, tranches, index);
        for (std::size_t j = 0; j < m; ++j) {
          try {
            book.reduction[j][i] = reduction_in_volatility(ledgers[j]);
          } catch (const UndefinedError&) {
          }
        }
      },
      workers);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> values, probs;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(book.reduction[j][i])) {
        ++book.undefined;
        continue;
      }
      values.push_back(book.reduction[j][i]);
      probs.push_back(set.scenarios[i].probability);
    }
    book.weighted_mean.push_back(values.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                : weighted_mean(values, probs).mean);
  }
  return book;
}

}  // namespace affine_cdo
