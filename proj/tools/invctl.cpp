// Command-line driver: collect -> build -> simulate -> verify -> report.
#include "invctl/invctl.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

enum Exit : int { kOk = 0, kPropertyFailure = 1, kConfigError = 2 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse-model controller with certified level sets"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> plant;
  bool noisy = false;
  app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out, "artifact directory");
  app.add_option("--plant", plant, "numerical or pendulum")->check(CLI::IsMember({"numerical", "pendulum"}));
  app.add_flag("--noisy", noisy, "noisy dataset and measurements");

  auto* collect = app.add_subcommand("collect", "generate trajectories");
  auto* build = app.add_subcommand("build", "fit the inverse model and the level families");
  auto* simulate = app.add_subcommand("simulate", "closed-loop runs from the configured initial states");
  auto* verify = app.add_subcommand("verify", "run the property suites");
  auto* report = app.add_subcommand("report", "collect artifacts into report.txt");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    invctl::ConfigOverrides ov;
    ov.plant = plant;
    ov.seed = seed;
    if (out) ov.out = *out;
    ov.noisy = noisy;
    const invctl::RunConfig cfg = config_path.empty() ? invctl::load_config(static_cast<std::istream*>(nullptr), ov)
                                                      : invctl::load_config(std::filesystem::path(config_path), ov);
    if (collect->parsed()) return invctl::cmd_collect(cfg);
    if (build->parsed()) return invctl::cmd_build(cfg);
    if (simulate->parsed()) return invctl::cmd_simulate(cfg);
    if (verify->parsed()) return invctl::cmd_verify(cfg);
    if (report->parsed()) return invctl::cmd_report(cfg);
  } catch (const invctl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const invctl::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kPropertyFailure;
  }
  return kConfigError;
}
