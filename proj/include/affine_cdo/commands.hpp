#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "affine_cdo/io.hpp"

namespace affine_cdo {

/// Command-line overrides applied on top of the config file.
struct CommandLine {
  std::filesystem::path config;  // empty: built-in defaults
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<double> psi;
  std::vector<std::string> tranches;  // LO:HI
  std::optional<double> maturity;
};

const std::vector<std::string>& command_verbs();

/// Resolved configuration: config file, then command-line overrides.
RunConfig resolve_config(const CommandLine& cl);

/// Runs one verb and writes its artifacts under the output directory.
///   synth     panel.csv, synth_states.csv
///   calibrate params.json, estimates.csv (and lrt.csv when enabled)
///   filter    filtered.csv, fitted.csv
///   price     prices.csv
///   hedge     ledger_<lo>_<hi>.csv, rvol.csv
///   simulate  scenarios.csv, loss_cdf.csv (paths.bin, book.csv when enabled)
///   report    SVG charts from the CSV artifacts present
/// User errors raise ConfigError or ParseError.
void run_command(const std::string& verb, const CommandLine& cl, std::ostream& log);

}  // namespace affine_cdo
