#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cli/config.hpp"
#include "cli/io.hpp"
#include "hamembed/baselines.hpp"
#include "hamembed/eval.hpp"

namespace hamembed::cli {

/// Integrates the configured data protocol. Deterministic per seed.
Dataset generate_dataset(const ExperimentConfig& cfg);

/// q/p snapshot matrix of the training part of a dataset.
Mat training_snapshots(const Dataset& data);

/// Model-space training data: raw states for low-dimensional systems,
/// cotangent-lift POD coordinates (and their derivatives) for PDEs.
struct TrainingData {
  Mat X;
  Mat Xdot;
  std::optional<pod::PODBasis> basis;
};

/// For PDE systems the basis comes from cfg.basis when set, else it is
/// computed from the dataset with cfg.pod_r modes.
TrainingData prepare_training_data(const ExperimentConfig& cfg, const Dataset& data);

training::TrainResult train_from_data(const ExperimentConfig& cfg, const TrainingData& td,
                                      const training::EpochCallback& on_epoch = {});

/// Ambient-space rollout of a checkpoint; PDE models are lifted with the
/// quadratic decoder when given, else linearly.
eval::RolloutFn checkpoint_rollout(const Checkpoint& ckpt, std::optional<decoders::QuadDecoder> decoder, double max_step);

/// OpInf-Ham fitted in the same coordinates the embedding models use.
eval::RolloutFn opinf_rollout_fn(const TrainingData& td, std::optional<decoders::QuadDecoder> decoder, double max_step);

}  // namespace hamembed::cli
