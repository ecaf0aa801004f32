#include <iostream>

#include <CLI11.hpp>

#include "wavestack/cli.hpp"
#include "wavestack/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Leader-follower boundary control of the wave equation on a moving domain"};
  app.require_subcommand(1);
  app.set_version_flag("--version", wavestack::kToolVersion);

  wavestack::RunOptions options;
  std::string out;
  std::uint64_t seed = 0;
  app.add_option("--config", options.config_path, "experiment config (INI)")->required()->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", out, "output directory (overrides [output] directory)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides [run] seed)");
  app.add_flag("--allow-degenerate", options.allow_degenerate, "accept profiles violating the speed hypothesis");
  app.add_flag("--dense-oracle", options.dense_oracle, "cross-check against the dense oracle");
  app.add_option("--jobs", options.jobs, "parallel sweep instances")->check(CLI::PositiveNumber);
  app.fallthrough();

  wavestack::Command command = wavestack::Command::validate;
  for (const char* name : {"validate", "thresholds", "simulate", "follower", "leader", "verify", "sweep"}) {
    app.add_subcommand(name)->callback([&command, name] { command = wavestack::parse_command(name); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wavestack::exit_config;
  }
  if (*out_opt) options.out = out;
  if (*seed_opt) options.seed = seed;
  return wavestack::run(command, options, std::cerr);
}
