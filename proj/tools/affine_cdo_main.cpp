#include <iostream>

#include "CLI11.hpp"
#include "affine_cdo/commands.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUserError = 1;
constexpr int kInternalError = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace affine_cdo;
  CLI::App app{"Affine two-factor CDO model: calibration, filtering, pricing, hedging and stress simulation"};
  app.set_version_flag("--version", "affine-cdo 1.0");
  std::string verb;
  CommandLine cl;
  std::string config, out;
  std::uint64_t seed = 0;
  double psi = 0.0, maturity = 0.0;
  app.add_option("command", verb, "One of: calibrate, filter, price, hedge, simulate, report, synth")
      ->required()
      ->check(CLI::IsMember(command_verbs()));
  app.add_option("--config", config, "INI configuration file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  auto* out_opt = app.add_option("--out", out, "Output directory");
  auto* psi_opt = app.add_option("--psi", psi, "Importance sampling parameter of the stress batch");
  app.add_option("--tranche", cl.tranches, "Tranche LO:HI (repeatable)");
  auto* mat_opt = app.add_option("--maturity", maturity, "Contract maturity in years");
  app.footer("Worker threads: set AFFINE_CDO_WORKERS. Exit codes: 0 ok, 1 user error, 2 internal error.");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUserError;
  }
  cl.config = config;
  if (*seed_opt) cl.seed = seed;
  if (*out_opt) cl.out = out;
  if (*psi_opt) cl.psi = psi;
  if (*mat_opt) cl.maturity = maturity;
  try {
    run_command(verb, cl, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUserError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kOk;
}
