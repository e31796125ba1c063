#include <iostream>

#include <CLI11.hpp>

#include "lyapcert/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov stability certification from nested level hypersurfaces"};
  app.require_subcommand(1);

  lyapcert::CertifyOptions certify;
  std::string certify_config, certify_out;
  std::uint64_t seed = 0;
  auto* cmd_certify = app.add_subcommand("certify", "Run the certification pipeline and write a certificate");
  cmd_certify->add_option("config", certify_config, "System configuration (TOML)")->required();
  cmd_certify->add_option("--out", certify_out, "Certificate path (default: <config>.cert.json)");
  cmd_certify->add_flag("--falsify", certify.falsify, "Run the trajectory falsifier");
  auto* seed_opt = cmd_certify->add_option("--seed", seed, "Seed for the falsifier sampler");

  std::string levels_config, levels_out;
  auto* cmd_levels = app.add_subcommand("levels", "Extract the nested family and write mesh files");
  cmd_levels->add_option("config", levels_config, "System configuration (TOML)")->required();
  cmd_levels->add_option("--out", levels_out, "Output directory")->required();

  std::string plot_cert, plot_out;
  auto* cmd_plot = app.add_subcommand("plot", "Render a 2D certificate as SVG");
  cmd_plot->add_option("certificate", plot_cert, "Certificate JSON")->required();
  cmd_plot->add_option("--out", plot_out, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : lyapcert::kExitConfigError;
  }

  if (*cmd_certify) {
    certify.config = certify_config;
    if (!certify_out.empty()) certify.out = certify_out;
    if (*seed_opt) certify.seed = seed;
    return lyapcert::cmd_certify(certify, std::cerr);
  }
  if (*cmd_levels) return lyapcert::cmd_levels(levels_config, levels_out, std::cerr);
  return lyapcert::cmd_plot(plot_cert, plot_out, std::cerr);
}
