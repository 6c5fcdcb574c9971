#include "affine_cdo/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "affine_cdo/hedging.hpp"
#include "affine_cdo/kalman.hpp"
#include "affine_cdo/moments.hpp"
#include "affine_cdo/pricing.hpp"
#include "affine_cdo/report.hpp"
#include "affine_cdo/simulation.hpp"

namespace affine_cdo {

namespace fs = std::filesystem;

namespace {

struct Context {
  RunConfig config;
  const CommandLine* cl;
  std::ostream* log;

  fs::path out(const std::string& name) const { return config.out_dir / name; }
  fs::path panel_path() const { return config.panel_path.empty() ? out("panel.csv") : config.panel_path; }
};

std::string footer(const RunConfig& config, const ModelParams& p) {
  return "# config-hash=" + config.hash() + " params-hash=" + hash_hex(fnv1a(params_to_json(p))) + '\n';
}

ModelParams reference_params(const RunConfig& config, ModelKind kind) {
  ModelParams p = kind == ModelKind::two_factor ? ModelParams::reference_two_factor() : ModelParams::reference_one_factor();
  p.r = config.r;
  return p;
}

// Starting point of a calibration: never depends on earlier artifacts.
ModelParams initial_params(const Context& ctx) {
  if (!ctx.config.params_path.empty()) return load_params(ctx.config.params_path);
  return reference_params(ctx.config, ctx.config.model_kind);
}

// Parameters for downstream verbs: config file, else calibrated estimates, else reference.
ModelParams working_params(const Context& ctx) {
  if (!ctx.config.params_path.empty()) return load_params(ctx.config.params_path);
  if (fs::exists(ctx.out("params.json"))) {
    *ctx.log << "using parameters from " << ctx.out("params.json").string() << '\n';
    return load_params(ctx.out("params.json"));
  }
  return reference_params(ctx.config, ctx.config.model_kind);
}

void require_noise_layout(const ModelParams& p, const ObservationPanel& panel) {
  if (p.h.size() != panel.tranche_count())
    throw ConfigError("parameters carry " + std::to_string(p.h.size()) + " noise variances but the panel has " +
                      std::to_string(panel.tranche_count()) + " tranches");
}

ObservationPanel read_panel(const Context& ctx) {
  const auto path = ctx.panel_path();
  if (!fs::exists(path)) throw ConfigError("panel not found: " + path.string() + " (run synth or set data.panel)");
  auto panel = load_panel(path);
  if (panel.boundaries != ctx.config.boundaries)
    throw ConfigError("panel tranche boundaries do not match data.boundaries");
  if (panel.maturities != ctx.config.maturities) throw ConfigError("panel maturities do not match data.maturities");
  return panel;
}

std::string tranche_tag(double lo, double hi) { return format_double(lo) + "_" + format_double(hi); }

std::vector<TrancheSpec> tranche_specs(const RunConfig& config) {
  std::vector<TrancheSpec> out;
  for (const auto& [lo, hi] : config.tranches) out.push_back(make_tranche(lo, hi, config.hedge_maturity));
  return out;
}

std::vector<double> curve_boundaries(const RunConfig& config) {
  std::set<double> b(config.boundaries.begin(), config.boundaries.end());
  for (const auto& [lo, hi] : config.tranches) {
    b.insert(lo);
    b.insert(hi);
  }
  return {b.begin(), b.end()};
}

void write_csv(const Context& ctx, const std::string& name, const Table& table, const ModelParams& p) {
  write_atomic(ctx.out(name), format_table(table) + footer(ctx.config, p));
  *ctx.log << "wrote " << ctx.out(name).string() << '\n';
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// synth -------------------------------------------------------------------------------------

void cmd_synth(const Context& ctx) {
  const ModelParams p = initial_params(ctx);
  if (p.h.size() + 1 != ctx.config.boundaries.size())
    throw ConfigError("parameters carry " + std::to_string(p.h.size()) + " noise variances for " +
                      std::to_string(ctx.config.boundaries.size() - 1) + " tranches");
  if (ctx.config.dates == 0) throw ConfigError("data.dates must be positive");
  const auto synth = synthesize_panel(p, ctx.config.dates, ctx.config.seed, ctx.config.maturities, ctx.config.boundaries);
  write_panel(ctx.panel_path(), synth.panel, footer(ctx.config, p));
  *ctx.log << "wrote " << ctx.panel_path().string() << " (" << synth.panel.dates.size() << " dates x "
           << synth.panel.column_count() << " series)\n";
  Table states;
  states.header = {"date", "t", "y", "z"};
  for (std::size_t k = 0; k < synth.states.size(); ++k)
    states.rows.push_back({iso_date(static_cast<long>(k)), format_double(synth.panel.dates[k]),
                           format_double(synth.states[k](0)), format_double(synth.states[k](1))});
  write_csv(ctx, "synth_states.csv", states, p);
}

// calibrate ---------------------------------------------------------------------------------

CalibrationResult calibrate_kind(const Context& ctx, const ObservationPanel& panel, const ModelParams& init) {
  require_noise_layout(init, panel);
  *ctx.log << "calibrating " << to_string(init.kind) << " model on " << panel.dates.size() << " dates\n";
  auto result = qml_calibrate(panel, init, ctx.config.calibration);
  *ctx.log << "  loglik " << fmt("%.6f", result.loglik) << ", " << result.evaluations << " evaluations"
           << (result.converged ? "" : " (budget exhausted)")
           << (result.std_errors_available ? "" : ", standard errors unavailable") << '\n';
  return result;
}

void cmd_calibrate(const Context& ctx) {
  const auto panel = read_panel(ctx);
  const ModelParams init = initial_params(ctx);
  const auto result = calibrate_kind(ctx, panel, init);
  std::map<std::string, double> extra{{"loglik", result.loglik},
                                      {"evaluations", static_cast<double>(result.evaluations)},
                                      {"converged", result.converged ? 1.0 : 0.0}};
  write_atomic(ctx.out("params.json"), params_to_json(result.estimates, extra, ctx.config.hash()));
  *ctx.log << "wrote " << ctx.out("params.json").string() << '\n';
  Table est;
  est.header = {"name", "value", "std_error"};
  for (std::size_t i = 0; i < result.names.size(); ++i)
    est.rows.push_back({result.names[i], format_double(result.values[i]), format_double(result.std_errors[i])});
  write_csv(ctx, "estimates.csv", est, result.estimates);

  if (ctx.config.lrt) {
    const ModelKind other = init.kind == ModelKind::two_factor ? ModelKind::one_factor : ModelKind::two_factor;
    ModelParams other_init = reference_params(ctx.config, other);
    other_init.h = init.h;
    const auto alt = calibrate_kind(ctx, panel, other_init);
    const bool two_first = init.kind == ModelKind::two_factor;
    const double ll2 = two_first ? result.loglik : alt.loglik, ll1 = two_first ? alt.loglik : result.loglik;
    const double df = std::abs(static_cast<double>(result.names.size()) - static_cast<double>(alt.names.size()));
    const double stat = lrt(ll1, ll2), crit = chi_square_critical(df);
    Table t;
    t.header = {"loglik_one_factor", "loglik_two_factor", "statistic", "df", "critical_99"};
    t.rows.push_back({format_double(ll1), format_double(ll2), format_double(stat), format_double(df), format_double(crit)});
    write_csv(ctx, "lrt.csv", t, result.estimates);
    *ctx.log << "likelihood ratio " << fmt("%.4f", stat) << " vs chi-square(" << df << ") 99% critical "
             << fmt("%.4f", crit) << '\n';
  }
}

// filter ------------------------------------------------------------------------------------

void cmd_filter(const Context& ctx) {
  const auto panel = read_panel(ctx);
  const ModelParams p = working_params(ctx);
  require_noise_layout(p, panel);
  const auto out = kalman_pass(p, panel);
  Table states;
  states.header = {"date", "t", "y", "z", "var_y", "cov_yz", "var_z", "loglik_term"};
  for (std::size_t k = 0; k < panel.dates.size(); ++k) {
    const auto& x = out.filtered_states[k];
    const auto& P = out.state_covariances[k];
    states.rows.push_back({iso_date(panel.first_day + std::lround(panel.dates[k] / kDayFraction)),
                           format_double(panel.dates[k]), format_double(x(0)), format_double(x(1)),
                           format_double(P(0, 0)), format_double(P(0, 1)), format_double(P(1, 1)),
                           format_double(out.loglik_terms[k])});
  }
  write_csv(ctx, "filtered.csv", states, p);

  const auto mm = measurement_model(p, panel.maturities, panel.boundaries);
  Table fit;
  fit.header = {"date", "t", "maturity_years", "tranche_lo", "tranche_hi", "observed", "fitted"};
  for (std::size_t k = 0; k < panel.dates.size(); ++k) {
    const auto& x = out.filtered_states[k];
    const std::string date = states.rows[k][0];
    for (std::size_t j = 0; j < panel.tranche_count(); ++j)
      for (std::size_t i = 0; i < panel.maturity_count(); ++i) {
        const auto c = static_cast<Eigen::Index>(panel.column(i, j));
        const auto r = static_cast<Eigen::Index>(k);
        const double fitted = mm.intercept(c) + mm.loading_y(c) * x(0) + mm.loading_z(c) * x(1);
        fit.rows.push_back({date, format_double(panel.dates[k]), format_double(panel.maturities[i]),
                            format_double(panel.boundaries[j]), format_double(panel.boundaries[j + 1]),
                            panel.mask(r, c) ? format_double(panel.spreads(r, c)) : std::string(),
                            format_double(fitted)});
      }
  }
  write_csv(ctx, "fitted.csv", fit, p);
  *ctx.log << "loglik " << fmt("%.6f", out.loglik) << '\n';
}

// price -------------------------------------------------------------------------------------

void cmd_price(const Context& ctx) {
  const ModelParams p = working_params(ctx);
  FactorState f;
  if (!std::isnan(ctx.config.state_y) && !std::isnan(ctx.config.state_z)) {
    f = {ctx.config.state_y, ctx.config.state_z, 0.0};
  } else if (fs::exists(ctx.out("filtered.csv"))) {
    const auto t = load_table(ctx.out("filtered.csv"));
    f = {t.numbers("y").back(), t.numbers("z").back(), 0.0};
    *ctx.log << "pricing at the last filtered state\n";
  } else {
    const auto m = uncond_moments(p);
    f = {m.mean_y, m.mean_z, 0.0};
    *ctx.log << "pricing at the stationary mean state\n";
  }
  const std::vector<double> maturities = ctx.cl->maturity ? std::vector<double>{*ctx.cl->maturity} : ctx.config.maturities;
  const double horizon = *std::max_element(maturities.begin(), maturities.end());
  const CoefficientCurve curve(p, curve_boundaries(ctx.config), horizon);
  const LossState l{0.0, false};
  Table t;
  t.header = {"maturity_years", "tranche_lo", "tranche_hi", "y", "z", "par_coupon", "zero_spread"};
  for (double tau : maturities)
    for (const auto& [lo, hi] : ctx.config.tranches) {
      const LegValuation v(curve, f, l, 0.0, coupon_schedule(tau), {lo, hi});
      double d = 0.0;
      for (std::size_t j = 0; j < curve.cells(); ++j) {
        const double a = curve.x_grid()[j], b = curve.x_grid()[j + 1];
        if (a >= lo && b <= hi) d += (b - a) * tranche_discount(curve, f, l, j, tau);
      }
      d /= hi - lo;
      t.rows.push_back({format_double(tau), format_double(lo), format_double(hi), format_double(f.y),
                        format_double(f.z), format_double(v.par_coupon(lo, hi)), format_double(zero_spread(d, tau, p.r))});
      *ctx.log << "  " << format_double(lo) << ":" << format_double(hi) << " " << format_double(tau) << "y  par coupon "
               << fmt("%.6f", v.par_coupon(lo, hi)) << "  zero spread " << fmt("%.6f", zero_spread(d, tau, p.r)) << '\n';
    }
  write_csv(ctx, "prices.csv", t, p);
}

// hedge -------------------------------------------------------------------------------------

void cmd_hedge(const Context& ctx) {
  const ModelParams p = working_params(ctx);
  if (!fs::exists(ctx.out("filtered.csv"))) throw ConfigError("filtered.csv not found in the output directory (run filter)");
  const auto states = load_table(ctx.out("filtered.csv"));
  const auto t_all = states.numbers("t"), y_all = states.numbers("y"), z_all = states.numbers("z");
  const double maturity = ctx.config.hedge_maturity;
  std::vector<double> dates, y, z;
  std::vector<std::string> labels;
  const auto date_col = states.column("date");
  for (std::size_t k = 0; k < t_all.size(); ++k) {
    const double t = t_all[k] - t_all.front();
    if (t >= maturity) break;
    dates.push_back(t);
    y.push_back(y_all[k]);
    z.push_back(z_all[k]);
    labels.push_back(states.rows[k][date_col]);
  }
  if (dates.size() < 3) throw ConfigError("need at least three filtered dates before maturity");
  const CoefficientCurve curve(p, curve_boundaries(ctx.config), maturity);
  const auto specs = tranche_specs(ctx.config);
  const auto ledgers = hedge_along_path(curve, dates, y, z, std::vector<double>(dates.size(), 0.0), specs,
                                        make_tranche(0.0, 1.0, maturity));
  Table summary;
  summary.header = {"tranche_lo", "tranche_hi", "reduction_in_volatility", "phi_min", "phi_max"};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& led = ledgers[i];
    Table t;
    t.header = {"date", "t", "phi", "tranche_spot", "index_spot", "tranche_pl", "hedge_pl", "hedged_pl", "value",
                "cum_unhedged", "cum_hedged", "coupon"};
    double cu = 0.0, ch = 0.0;
    for (std::size_t k = 0; k < dates.size(); ++k) {
      cu += led.tranche_pl[k];
      ch += led.hedged_pl[k];
      t.rows.push_back({labels[k], format_double(dates[k]), format_double(led.phi[k]), format_double(led.tranche_spot[k]),
                        format_double(led.index_spot[k]), format_double(led.tranche_pl[k]),
                        format_double(led.daily_pl[k]), format_double(led.hedged_pl[k]), format_double(led.value[k]),
                        format_double(cu), format_double(ch), std::to_string(led.coupon[k])});
    }
    const std::string tag = tranche_tag(specs[i].x1, specs[i].x2);
    write_csv(ctx, "ledger_" + tag + ".csv", t, p);
    double rv = std::numeric_limits<double>::quiet_NaN();
    try {
      rv = reduction_in_volatility(led);
    } catch (const UndefinedError&) {
    }
    const auto [lo_phi, hi_phi] = std::minmax_element(led.phi.begin(), led.phi.end());
    summary.rows.push_back({format_double(specs[i].x1), format_double(specs[i].x2), format_double(rv),
                            format_double(*lo_phi), format_double(*hi_phi)});
    *ctx.log << "  tranche " << format_double(specs[i].x1) << ":" << format_double(specs[i].x2)
             << "  reduction in volatility " << fmt("%.4f", rv) << "  phi in [" << format_double(*lo_phi) << ", "
             << format_double(*hi_phi) << "]\n";
  }
  write_csv(ctx, "rvol.csv", summary, p);
}

// simulate ----------------------------------------------------------------------------------

void cmd_simulate(const Context& ctx) {
  const ModelParams p = working_params(ctx);
  const SimulationConfig& cfg = ctx.config.simulation;
  const auto set = simulate_scenarios(p, cfg);
  write_csv(ctx, "scenarios.csv", scenario_table(set), p);

  const auto losses = set.terminal_losses();
  const auto probs = set.probabilities();
  const std::vector<double> normal_losses(losses.begin(), losses.begin() + static_cast<long>(cfg.n_normal));
  const std::vector<double> uniform(cfg.n_normal, 1.0 / static_cast<double>(cfg.n_normal));
  Table cdf;
  cdf.header = {"loss", "cdf_weighted", "cdf_normal"};
  for (int i = 0; i <= 120; ++i) {
    const double x = 0.0025 * i;
    cdf.rows.push_back({format_double(x), format_double(weighted_empirical_cdf(losses, probs, x)),
                        format_double(weighted_empirical_cdf(normal_losses, uniform, x))});
  }
  write_csv(ctx, "loss_cdf.csv", cdf, p);

  std::vector<double> weights, no_jump;
  for (std::size_t i = cfg.n_normal; i < set.scenarios.size(); ++i) weights.push_back(set.scenarios[i].weight);
  for (const auto& s : set.scenarios) no_jump.push_back(s.loss.jumps == 0 ? 1.0 : 0.0);
  *ctx.log << "  " << cfg.n_normal << " normal + " << cfg.n_stress << " stress scenarios (psi " << format_double(cfg.psi)
           << "), mean stress weight " << fmt("%.6g", sample_mean(weights).mean) << ", weighted P(no jump) "
           << fmt("%.6f", weighted_mean(no_jump, probs).mean) << '\n';

  if (ctx.config.dump_paths) {
    write_atomic(ctx.out("paths.bin"), path_dump(set));
    *ctx.log << "wrote " << ctx.out("paths.bin").string() << '\n';
  }
  if (ctx.config.hedge_book) {
    const CoefficientCurve curve(p, curve_boundaries(ctx.config), ctx.config.hedge_maturity);
    const auto specs = tranche_specs(ctx.config);
    const auto book = hedge_book(curve, set, specs, make_tranche(0.0, 1.0, ctx.config.hedge_maturity));
    Table t;
    t.header = {"scenario", "probability"};
    for (const auto& s : specs) t.header.push_back("rvol_" + tranche_tag(s.x1, s.x2));
    for (std::size_t i = 0; i < set.scenarios.size(); ++i) {
      t.rows.push_back({std::to_string(i), format_double(set.scenarios[i].probability)});
      for (std::size_t j = 0; j < specs.size(); ++j) t.rows.back().push_back(format_double(book.reduction[j][i]));
    }
    write_csv(ctx, "book.csv", t, p);
    for (std::size_t j = 0; j < specs.size(); ++j)
      *ctx.log << "  tranche " << format_double(specs[j].x1) << ":" << format_double(specs[j].x2)
               << "  weighted mean reduction in volatility " << fmt("%.4f", book.weighted_mean[j]) << '\n';
  }
}

// report ------------------------------------------------------------------------------------

void cmd_report(const Context& ctx) {
  std::size_t charts = 0;
  auto emit = [&](const std::string& name, const std::string& svg) {
    write_atomic(ctx.out(name), svg);
    *ctx.log << "wrote " << ctx.out(name).string() << '\n';
    ++charts;
  };
  if (fs::exists(ctx.out("filtered.csv"))) {
    const auto t = load_table(ctx.out("filtered.csv"));
    const auto x = t.numbers("t");
    emit("factors.svg", line_chart_svg("Filtered factors", "years", "intensity", {{"Y", x, t.numbers("y")}, {"Z", x, t.numbers("z")}}));
  }
  if (fs::exists(ctx.out("fitted.csv"))) {
    const auto t = load_table(ctx.out("fitted.csv"));
    const auto tau = t.numbers("maturity_years"), lo = t.numbers("tranche_lo");
    double want_tau = ctx.cl->maturity ? *ctx.cl->maturity : tau.front();
    double want_lo = ctx.cl->tranches.empty() ? lo.front() : parse_tranche(ctx.cl->tranches.front()).first;
    const auto time = t.numbers("t"), fitted = t.numbers("fitted");
    const auto obs_col = t.column("observed");
    Series obs{"observed", {}, {}}, fit{"fitted", {}, {}};
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      if (tau[r] != want_tau || lo[r] != want_lo) continue;
      const auto& cell = t.rows[r][obs_col];
      obs.x.push_back(time[r]);
      obs.y.push_back(cell.empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(cell));
      fit.x.push_back(time[r]);
      fit.y.push_back(fitted[r]);
    }
    if (fit.x.empty()) throw ConfigError("fitted.csv has no series for the requested maturity and tranche");
    emit("spread_fit.svg", line_chart_svg("Zero spreads, " + format_double(want_tau) + "y, attachment " +
                                              format_double(want_lo),
                                          "years", "zero spread", {obs, fit}));
  }
  std::vector<fs::path> ledgers;
  if (fs::exists(ctx.config.out_dir))
    for (const auto& e : fs::directory_iterator(ctx.config.out_dir)) {
      const auto name = e.path().filename().string();
      if (name.rfind("ledger_", 0) == 0 && e.path().extension() == ".csv") ledgers.push_back(e.path());
    }
  std::sort(ledgers.begin(), ledgers.end());
  for (const auto& path : ledgers) {
    const auto t = load_table(path);
    const auto x = t.numbers("t");
    const std::string stem = path.stem().string();
    emit(stem + ".svg", line_chart_svg("Cumulative daily P&L, " + stem, "years", "P&L per unit notional",
                                       {{"unhedged", x, t.numbers("cum_unhedged")}, {"hedged", x, t.numbers("cum_hedged")}}));
  }
  if (fs::exists(ctx.out("loss_cdf.csv"))) {
    const auto t = load_table(ctx.out("loss_cdf.csv"));
    const auto x = t.numbers("loss");
    emit("loss_cdf.svg", line_chart_svg("Terminal loss distribution", "loss", "probability",
                                        {{"all scenarios, weighted", x, t.numbers("cdf_weighted")},
                                         {"normal batch", x, t.numbers("cdf_normal")}}));
  }
  if (charts == 0) throw ConfigError("no artifacts to report in " + ctx.config.out_dir.string());
}

}  // namespace

const std::vector<std::string>& command_verbs() {
  static const std::vector<std::string> verbs{"calibrate", "filter", "price", "hedge", "simulate", "report", "synth"};
  return verbs;
}

RunConfig resolve_config(const CommandLine& cl) {
  RunConfig c = cl.config.empty() ? parse_config("") : load_config(cl.config);
  if (cl.seed) c.seed = *cl.seed;
  if (cl.out) c.out_dir = *cl.out;
  if (cl.psi) c.simulation.psi = *cl.psi;
  if (!cl.tranches.empty()) {
    c.tranches.clear();
    for (const auto& t : cl.tranches) c.tranches.push_back(parse_tranche(t));
  }
  if (cl.maturity) c.hedge_maturity = *cl.maturity;
  canonicalize(c);
  return c;
}

void run_command(const std::string& verb, const CommandLine& cl, std::ostream& log) {
  if (std::find(command_verbs().begin(), command_verbs().end(), verb) == command_verbs().end())
    throw ConfigError("unknown command '" + verb + "'");
  Context ctx{resolve_config(cl), &cl, &log};
  if (verb == "synth") cmd_synth(ctx);
  else if (verb == "calibrate") cmd_calibrate(ctx);
  else if (verb == "filter") cmd_filter(ctx);
  else if (verb == "price") cmd_price(ctx);
  else if (verb == "hedge") cmd_hedge(ctx);
  else if (verb == "simulate") cmd_simulate(ctx);
  else cmd_report(ctx);
}

}  // namespace affine_cdo
