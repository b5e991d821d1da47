#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hamembed/decoders.hpp"
#include "hamembed/training.hpp"

namespace hamembed::cli {

/// How trajectories are generated for one system.
struct DataProtocol {
  // low-dimensional systems: sampled ICs
  std::vector<std::pair<double, double>> box;
  double energy_cap = 0.0;
  int train_ics = 0;
  int train_points = 0;
  double train_t1 = 0.0;
  int test_ics = 0;
  int test_points = 0;
  double test_t1 = 0.0;
  std::uint64_t test_seed_offset = 1000;
  // PDE systems
  int grid_points = 256;
  int points = 0;             // nls: one trajectory on [0, t1]
  double t1 = 0.0;
  double train_fraction = 0.5;
  std::vector<double> mu_train;  // wave
  std::vector<double> mu_test;
  bool store_derivs = true;
};

struct PlotSpec {
  std::string input;
  std::string x = "t";
  std::vector<std::string> y;
  std::string title;
};

/// Everything a command needs. Built from preset defaults, then a JSON
/// config file, then command-line flags.
struct ExperimentConfig {
  std::string preset;
  std::string system;
  std::string variant = "s-cubic-embs";
  std::uint64_t seed = 0;
  std::string out;
  bool force = false;

  DataProtocol data;
  training::TrainingConfig training;
  std::vector<int> hidden;
  int latent_dim = 0;
  int pod_r = 0;
  std::string decoder_kind = "linear";
  decoders::QuadFitConfig decoder_fit;
  double max_step = 0.01;

  std::string dataset;
  std::vector<std::string> checkpoints;
  std::string basis;
  std::string decoder;

  std::optional<std::vector<double>> rollout_x0;
  double rollout_t1 = 0.0;
  int rollout_points = 0;

  bool plot = false;
  bool opinf = false;
  PlotSpec plot_spec;

  bool is_pde() const { return system == "nls" || system == "wave"; }
  void validate() const;
};

/// Preset defaults for one of the five benchmark names.
ExperimentConfig preset_defaults(const std::string& name);
const std::vector<std::string>& preset_names();

struct Overrides {
  std::optional<std::string> preset;
  std::optional<std::string> variant;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool force = false;
};

/// Parses JSON text; unknown keys anywhere are rejected with ValidationError.
ExperimentConfig parse_config(const std::string& json_text, const Overrides& flags = {});
ExperimentConfig load_config(const std::string& path, const Overrides& flags = {});

}  // namespace hamembed::cli
