#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <random>
#include <sstream>

#include "affine_cdo/commands.hpp"
#include "affine_cdo/io.hpp"
#include "affine_cdo/report.hpp"

using namespace affine_cdo;
namespace fs = std::filesystem;

namespace {

const char* kHeader = "date,maturity_years,tranche_lo,tranche_hi,zero_spread\n";

std::string one_date_rows(const std::string& date, const std::string& missing_cell = "") {
  std::string text;
  const auto b = standard_boundaries();
  for (std::size_t j = 0; j + 1 < b.size(); ++j)
    for (double tau : {3.0, 5.0, 7.0, 10.0}) {
      std::string spread = format_double(0.01 / (j + 1) + 0.001 * tau);
      if (!missing_cell.empty() && j == 0 && tau == 5.0) spread = "";
      text += date + "," + format_double(tau) + "," + format_double(b[j]) + "," + format_double(b[j + 1]) + "," +
              spread + "\n";
    }
  return text;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("affine_cdo_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Formatting, DoublesRoundTrip) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::exp(u(gen)) * (i % 2 ? 1.0 : -1.0);
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.03), "0.03");
}

TEST(Formatting, FnvKnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(hash_hex(0xabcull), "0000000000000abc");
}

TEST(Dates, BusinessDayCalendar) {
  EXPECT_EQ(iso_date(0), "2005-01-03");
  EXPECT_EQ(iso_date(4), "2005-01-07");
  EXPECT_EQ(iso_date(5), "2005-01-10");
  EXPECT_EQ(iso_date(-1), "2004-12-31");
  for (long n : {-700L, -1L, 0L, 3L, 971L, 5000L}) EXPECT_EQ(business_day_index(iso_date(n)), n);
  EXPECT_THROW(business_day_index("2005-01-08"), ParseError);
  EXPECT_THROW(business_day_index("2005-02-30"), ParseError);
  EXPECT_THROW(business_day_index("05-01-03"), ParseError);
}

TEST(Panel, SingleCompleteDate) {
  const auto panel = parse_panel(kHeader + one_date_rows("2006-03-01"));
  EXPECT_EQ(panel.dates.size(), 1u);
  EXPECT_EQ(panel.dates[0], 0.0);
  EXPECT_EQ(panel.maturities, (std::vector<double>{3.0, 5.0, 7.0, 10.0}));
  EXPECT_EQ(panel.boundaries, standard_boundaries());
  EXPECT_EQ(panel.mask.cast<int>().sum(), 24);
  EXPECT_DOUBLE_EQ(panel.spreads(0, static_cast<Eigen::Index>(panel.column(1, 2))), 0.01 / 3 + 0.005);
}

TEST(Panel, EmptyCellIsMaskedAndFilterRuns) {
  const auto panel = parse_panel(kHeader + one_date_rows("2006-03-01", "x") + one_date_rows("2006-03-02"));
  ASSERT_EQ(panel.dates.size(), 2u);
  EXPECT_EQ(panel.mask(0, static_cast<Eigen::Index>(panel.column(1, 0))), 0);
  EXPECT_EQ(panel.mask.cast<int>().sum(), 47);
  const auto out = kalman_pass(ModelParams::reference_two_factor(), panel);
  EXPECT_TRUE(std::isfinite(out.loglik));
  EXPECT_EQ(out.innovations[0].size(), 23);
}

TEST(Panel, DatesAreSortedAndCountedInBusinessDays) {
  const auto panel = parse_panel(kHeader + one_date_rows("2006-03-06") + one_date_rows("2006-03-03"));
  ASSERT_EQ(panel.dates.size(), 2u);
  EXPECT_EQ(panel.dates[1], 1.0 * kDayFraction);
}

TEST(Panel, ErrorsCarryLineNumbers) {
  try {
    parse_panel(std::string(kHeader) + "2006-03-01,5,0,0.03,0.1\n2006-03-01,5,0,0.03,abc\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse_panel(std::string(kHeader) + "2006-03-01,5,0,0.03,0.1\n# note\n2006-03-01,5,0,0.03,0.2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  EXPECT_THROW(parse_panel(kHeader), ParseError);
  EXPECT_THROW(parse_panel(""), ParseError);
  EXPECT_THROW(parse_panel("date,maturity,lo,hi,spread\n"), ParseError);
  EXPECT_THROW(parse_panel(std::string(kHeader) + "2006-03-01,5,0,0.03\n"), ParseError);
  EXPECT_THROW(parse_panel(std::string(kHeader) + "2006-03-01,5,0,0.03,0.1\n2006-03-01,5,0.05,0.1,0.1\n"), ParseError);
}

TEST(Panel, SyntheticPanelRoundTripsBitwise) {
  const auto synth = synthesize_panel(ModelParams::reference_two_factor(), 972, 4);
  const std::string text = format_panel(synth.panel);
  const auto back = parse_panel(text + "# config-hash=0\n");
  EXPECT_EQ(back.dates, synth.panel.dates);
  EXPECT_EQ(back.maturities, synth.panel.maturities);
  EXPECT_EQ(back.boundaries, synth.panel.boundaries);
  EXPECT_TRUE(back.spreads == synth.panel.spreads);
  EXPECT_TRUE(back.mask == synth.panel.mask);
  EXPECT_EQ(format_panel(back), text);
}

TEST(Params, JsonRoundTrip) {
  auto p = ModelParams::reference_two_factor();
  p.kappa_y = 0.1 + 1e-17;
  const auto back = params_from_json(params_to_json(p, {{"loglik", 1.5}}, "abc"));
  EXPECT_EQ(pack_parameters(back), pack_parameters(p));
  EXPECT_EQ(back.r, p.r);
  EXPECT_EQ(back.kind, p.kind);
  const auto one = params_from_json(params_to_json(ModelParams::reference_one_factor()));
  EXPECT_EQ(one.kind, ModelKind::one_factor);
}

TEST(Params, SchemaErrors) {
  EXPECT_THROW(params_from_json("{"), ParseError);
  EXPECT_THROW(params_from_json("[1]"), ParseError);
  EXPECT_THROW(params_from_json(R"({"kappa_y": 1})"), ConfigError);
  auto p = ModelParams::reference_two_factor();
  p.sigma_y = -1.0;
  EXPECT_THROW(params_from_json(params_to_json(p)), ConfigError);
}

TEST(Config, ParsesSectionsAndHashesSettings) {
  const auto c = parse_config("[run]\nseed = 9\n[simulation]\npsi = 10\nn_stress = 7\n[hedge]\ntranches = 0.03:0.06\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.simulation.psi, 10.0);
  EXPECT_EQ(c.simulation.n_stress, 7u);
  EXPECT_EQ(c.simulation.seed, 9u);
  ASSERT_EQ(c.tranches.size(), 1u);
  EXPECT_EQ(c.tranches[0].second, 0.06);
  EXPECT_EQ(c.r, 0.05);
  EXPECT_NE(c.hash(), parse_config("[run]\nseed = 10\n").hash());
  EXPECT_EQ(parse_config("").hash(), parse_config("[run]\nout_dir = elsewhere\n").hash());
}

TEST(Config, RejectsSchemaMismatches) {
  EXPECT_THROW(parse_config("[nope]\na = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nfoo = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[model]\nparams = /nonexistent/params.json\n"), ConfigError);
  EXPECT_THROW(parse_config("[data]\nboundaries = 0.5, 0.1, 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[simulation]\npsi = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("[run]\nseed = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_tranche("0.1"), ConfigError);
  EXPECT_THROW(parse_tranche("0.2:0.1"), ConfigError);
}

TEST(ScenarioArtifacts, BinaryDumpLayout) {
  SimulationConfig cfg;
  cfg.n_normal = 2;
  cfg.n_stress = 1;
  cfg.steps = 4;
  const auto set = simulate_scenarios(ModelParams::reference_two_factor(), cfg);
  const auto bytes = path_dump(set);
  ASSERT_EQ(bytes.size(), 8u + 4 + 4 + 8 + 8 + 3 * 3 * 5 * 8);
  EXPECT_EQ(bytes.substr(0, 8), "ACDOPATH");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), kPathDumpVersion);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 3);
  EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 4);
  EXPECT_EQ(static_cast<unsigned char>(bytes[24]), 3);
  double v = 0.0;
  std::memcpy(&v, bytes.data() + 32 + 8 * 5, 8);  // first scenario, z_0
  EXPECT_EQ(v, set.scenarios[0].factors.z[0]);
  std::memcpy(&v, bytes.data() + 32 + 3 * 5 * 8 * 2 + 8 * 14, 8);  // third scenario, L_4
  EXPECT_EQ(v, set.scenarios[2].loss.loss[4]);
  const auto table = scenario_table(set);
  EXPECT_EQ(table.rows.size(), 3u);
  EXPECT_EQ(table.header[6], "probability");
}

TEST(Report, SvgEmbedsData) {
  const auto svg = line_chart_svg("T & C", "x", "y", {{"a", {0.0, 1.0}, {2.0, 3.5}}, {"b", {0.0}, {NAN}}});
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("a,1,3.5"), std::string::npos);
  EXPECT_NE(svg.find("T &amp; C"), std::string::npos);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_THROW(line_chart_svg("t", "x", "y", {{"a", {0.0}, {}}}), ShapeError);
}

TEST(Commands, SelfHedgeOfIndexHasUnitShortPosition) {
  TempDir dir("selfhedge");
  CommandLine cl;
  cl.out = dir.path;
  std::ostringstream log;
  const fs::path config = dir.path / "run.ini";
  write_atomic(config, "[data]\ndates = 30\n");
  cl.config = config;
  run_command("synth", cl, log);
  run_command("filter", cl, log);
  cl.tranches = {"0:1"};
  run_command("hedge", cl, log);
  const auto ledger = load_table(dir.path / "ledger_0_1.csv");
  const auto phi = ledger.numbers("phi");
  ASSERT_EQ(phi.size(), 30u);
  for (double x : phi) EXPECT_EQ(x, -1.0);
  for (double x : ledger.numbers("hedged_pl")) EXPECT_LT(std::abs(x), 1e-12);
}

TEST(Commands, SimulateIsByteIdenticalUnderOneSeed) {
  TempDir dir("determinism");
  const fs::path config = dir.path / "run.ini";
  write_atomic(config, "[simulation]\nn_normal = 30\nn_stress = 30\ndump_paths = true\n");
  std::ostringstream log;
  for (const char* sub : {"a", "b"}) {
    CommandLine cl;
    cl.config = config;
    cl.out = dir.path / sub;
    cl.seed = 17;
    cl.psi = 1.0;
    run_command("simulate", cl, log);
  }
  for (const char* f : {"scenarios.csv", "loss_cdf.csv", "paths.bin"})
    EXPECT_EQ(read_file(dir.path / "a" / f), read_file(dir.path / "b" / f)) << f;
  const auto table = load_table(dir.path / "a" / "scenarios.csv");
  for (double w : table.numbers("weight")) EXPECT_EQ(w, 1.0);
}

TEST(Commands, UserErrors) {
  std::ostringstream log;
  CommandLine cl;
  cl.out = fs::temp_directory_path() / "affine_cdo_test_missing";
  EXPECT_THROW(run_command("explode", cl, log), ConfigError);
  EXPECT_THROW(run_command("filter", cl, log), ConfigError);
  EXPECT_THROW(run_command("report", cl, log), ConfigError);
  cl.config = "/nonexistent/run.ini";
  EXPECT_THROW(run_command("synth", cl, log), ConfigError);
}
