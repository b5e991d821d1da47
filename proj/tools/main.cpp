#include <iostream>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "hamembed/errors.hpp"

using namespace hamembed;

int main(int argc, char** argv) {
  CLI::App app{"Symplectic embeddings with stable latent Hamiltonians"};
  app.require_subcommand(1);

  std::string config_path;
  cli::Overrides flags;
  std::string preset, variant, out;
  std::uint64_t seed = 0;

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const cli::ExperimentConfig&, std::ostream&);
  };
  const Command commands[] = {
      {"gen-data", "integrate the data protocol and write a dataset directory", cli::cmd_gen_data},
      {"train", "train an embedding model on a dataset", cli::cmd_train},
      {"rollout", "roll a checkpoint out from test ICs or a given x0", cli::cmd_rollout},
      {"eval", "score checkpoints on the test ICs of a dataset", cli::cmd_eval},
      {"pod", "cotangent-lift POD basis of a dataset", cli::cmd_pod},
      {"fit-decoder", "fit a linear or quadratic decoder on POD coordinates", cli::cmd_fit_decoder},
      {"plot", "render columns of a CSV file as an SVG line chart", cli::cmd_plot},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--preset", preset, "pendulum, oscillator, lotka-volterra, nls or wave");
    sub->add_option("--variant", variant, "s-linear-embs, s-cubic-embs or quad-embs");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out", out, "output directory");
    sub->add_flag("--force", flags.force, "replace an existing output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--preset")) flags.preset = preset;
  if (chosen->count("--variant")) flags.variant = variant;
  if (chosen->count("--seed")) flags.seed = seed;
  if (chosen->count("--out")) flags.out = out;

  try {
    const cli::ExperimentConfig cfg =
        config_path.empty() ? cli::parse_config("", flags) : cli::load_config(config_path, flags);
    for (const auto& c : commands)
      if (chosen->get_name() == c.name) c.run(cfg, std::cout);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
