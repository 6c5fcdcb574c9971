#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "affine_cdo/hedging.hpp"
#include "affine_cdo/model.hpp"
#include "affine_cdo/riccati.hpp"

namespace affine_cdo {

enum class Measure { physical, risk_neutral };

/// Factor values on t_0 .. t_K.
struct FactorPath {
  std::vector<double> y;
  std::vector<double> z;
  std::size_t size() const { return y.size(); }
};

/// Full-truncation Euler with `substeps` sub-intervals per step; the risk-neutral drifts add the
/// market prices of risk. Noise comes from the (seed, scenario, factor) stream.
FactorPath simulate_factors(const ModelParams& p, double y0, double z0, std::size_t steps, double dt,
                            std::uint64_t seed, std::uint64_t scenario = 0, Measure measure = Measure::physical,
                            std::size_t substeps = 1);

struct LossPath {
  std::vector<double> loss;                  // L_{t_k}, non-decreasing in [0, 1]
  std::vector<double> cumulative_intensity;  // tilted, psi-scaled accrual
  std::vector<std::size_t> jump_steps;       // grid indices of the jumps
  double intensity_integral = 0.0;           // sum_k Lambda_k dt under the untilted intensity
  std::size_t jumps = 0;
};

/// Loss path by intensity accrual against exponential clocks, at most one jump per grid step;
/// clocks and jump sizes come from the (seed, scenario, clock / jump_size) streams.
LossPath simulate_loss(const ModelParams& p, const FactorPath& factors, double dt, double psi, std::uint64_t seed,
                       std::uint64_t scenario = 0);

/// exp((psi - 1) intensity_integral) / psi^jumps.
double importance_weight(std::size_t jumps, double intensity_integral, double psi);

struct Scenario {
  std::uint64_t index = 0;
  double psi = 1.0;
  FactorPath factors;
  LossPath loss;
  double weight = 1.0;       // raw Radon-Nikodym weight
  double probability = 0.0;  // aggregated probability in the combined set
};

struct ScenarioSet {
  std::uint64_t seed = 0;
  double dt = 1.0 / kBusinessDaysPerYear;
  std::size_t n_normal = 0;
  std::vector<Scenario> scenarios;  // normal batch first, then the stress batch

  std::vector<double> probabilities() const;
  std::vector<double> terminal_losses() const;
  /// Compensated sum of the aggregated probabilities.
  double total_probability() const;
};

/// p(i) = w(i) / sum w, q(i) = 1 / n_normal, halves of each; normalization residue is folded into
/// the largest stress probability so the total is one to rounding.
std::vector<double> normalize_and_aggregate(std::size_t n_normal, const std::vector<double>& stress_weights);

struct SimulationConfig {
  std::size_t n_normal = 1000;
  std::size_t n_stress = 1000;
  double psi = 100.0;
  std::size_t steps = 250;
  double dt = 1.0 / kBusinessDaysPerYear;
  std::uint64_t seed = 1;
  double y0 = std::numeric_limits<double>::quiet_NaN();  // NaN: unconditional mean
  double z0 = std::numeric_limits<double>::quiet_NaN();
  std::size_t workers = 0;
};

/// Normal (psi = 1) and stress batches; a non-null `fixed` path is shared by every scenario.
ScenarioSet simulate_scenarios(const ModelParams& p, const SimulationConfig& config,
                               const FactorPath* fixed = nullptr);

/// sum probs 1[value <= x].
double weighted_empirical_cdf(const std::vector<double>& values, const std::vector<double>& probs, double x);

struct WeightedEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Mean with standard error; with probabilities, the self-normalized estimator
/// sum p g with delta-method error sqrt(sum p^2 (g - mean)^2).
WeightedEstimate sample_mean(const std::vector<double>& values);
WeightedEstimate weighted_mean(const std::vector<double>& values, const std::vector<double>& probs);

/// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x);

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous cdf.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Reduction in volatility per scenario and tranche for a hedged book of 5-year style contracts
/// struck at par on the first date.
struct BookResult {
  std::vector<std::vector<double>> reduction;  // [tranche][scenario], NaN when undefined
  std::vector<double> weighted_mean;           // per tranche, renormalized over defined scenarios
  std::size_t undefined = 0;
};

BookResult hedge_book(const CoefficientCurve& c, const ScenarioSet& set, const std::vector<TrancheSpec>& tranches,
                      const TrancheSpec& index, std::size_t workers = 0);

}  // namespace affine_cdo
