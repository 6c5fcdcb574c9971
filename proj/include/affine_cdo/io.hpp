#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "affine_cdo/errors.hpp"
#include "affine_cdo/kalman.hpp"
#include "affine_cdo/model.hpp"
#include "affine_cdo/simulation.hpp"

namespace affine_cdo {

/// Invalid configuration, arguments or input files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view text);
std::string hash_hex(std::uint64_t h);

/// Writes to a sibling temporary file and renames it over the target.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// Dates -------------------------------------------------------------------------------------

/// Monday 2005-01-03, business day 0 of synthetic panels.
inline constexpr int kBaseYear = 2005;
inline constexpr unsigned kBaseMonth = 1;
inline constexpr unsigned kBaseDay = 3;

/// ISO date of the n-th weekday after the base date.
std::string iso_date(long business_day);
/// Weekdays between the base date and an ISO date; ParseError on malformed dates and weekends.
long business_day_index(const std::string& iso);

// Panels ------------------------------------------------------------------------------------

/// Long CSV `date,maturity_years,tranche_lo,tranche_hi,zero_spread`, one row per observation;
/// an empty spread cell is a missing observation. Lines starting with '#' are comments. Dates
/// become year fractions of business days counted from the first date.
ObservationPanel load_panel(const std::filesystem::path& path);
ObservationPanel parse_panel(const std::string& text);

/// Rows in date, tranche, maturity order; masked entries are written with an empty cell.
std::string format_panel(const ObservationPanel& panel);
void write_panel(const std::filesystem::path& path, const ObservationPanel& panel, const std::string& footer = {});

// Tables ------------------------------------------------------------------------------------

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
};

std::string format_table(const Table& table);
Table parse_table(const std::string& text);
Table load_table(const std::filesystem::path& path);

// Parameters --------------------------------------------------------------------------------

/// Flat JSON object of the ModelParams fields plus h_1..h_J and the model kind.
std::string params_to_json(const ModelParams& p, const std::map<std::string, double>& extra = {},
                           const std::string& config_hash = {});
ModelParams params_from_json(const std::string& text);
ModelParams load_params(const std::filesystem::path& path);

// Scenario sets -----------------------------------------------------------------------------

/// Per-scenario summary: scenario, seed, psi, jumps, terminal_loss, weight, probability.
Table scenario_table(const ScenarioSet& set);

/// Little-endian dump: magic "ACDOPATH", uint32 version, uint32 fields per step (3), uint64 K,
/// uint64 n_scenarios, then per scenario y_0..y_K, z_0..z_K, L_0..L_K as float64.
inline constexpr std::uint32_t kPathDumpVersion = 1;
std::string path_dump(const ScenarioSet& set);

// Configuration -----------------------------------------------------------------------------

struct RunConfig {
  ModelKind model_kind = ModelKind::two_factor;
  std::filesystem::path params_path;  // empty: reference estimates
  std::filesystem::path panel_path;   // empty: <out>/panel.csv
  std::filesystem::path out_dir = "out";
  double r = 0.05;
  double dt = 1.0 / 250.0;
  std::uint64_t seed = 1;
  std::size_t dates = 972;
  std::vector<double> maturities{3.0, 5.0, 7.0, 10.0};
  std::vector<double> boundaries = standard_boundaries();
  CalibrationConfig calibration;
  bool lrt = false;
  SimulationConfig simulation;
  bool dump_paths = false;
  bool hedge_book = false;
  double hedge_maturity = 5.0;
  std::vector<std::pair<double, double>> tranches{{0.03, 0.06}, {0.09, 0.12}};
  double state_y = std::numeric_limits<double>::quiet_NaN();
  double state_z = std::numeric_limits<double>::quiet_NaN();
  std::string canonical;  // resolved settings, one key=value per line, hashed into artifacts

  std::string hash() const { return hash_hex(fnv1a(canonical)); }
};

/// INI file with sections [model], [data], [calibration], [simulation], [hedge], [price], [run].
/// Referenced files must exist; relative paths resolve against the config file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
/// Rebuilds the canonical settings string after command-line overrides.
void canonicalize(RunConfig& config);

std::pair<double, double> parse_tranche(const std::string& text);

}  // namespace affine_cdo
