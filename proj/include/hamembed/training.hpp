#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hamembed/diffkit/mlp.hpp"
#include "hamembed/diffkit/params.hpp"
#include "hamembed/diffkit/tape.hpp"
#include "hamembed/integrate.hpp"
#include "hamembed/latentham.hpp"

namespace hamembed::training {

using latentham::Variant;

inline constexpr const char* kEncoder = "enc";
inline constexpr const char* kDecoder = "dec";

/// Symplectic autoencoder (encoder 2n -> 2m, decoder 2m -> 2n) plus a latent
/// Hamiltonian, all parameters in one ParamVector.
struct EmbeddingModel {
  int n = 0;
  int m = 0;
  Variant variant = Variant::QuadraticSOS;
  diffkit::MLPSpec encoder;
  diffkit::MLPSpec decoder;
  diffkit::ParamVector params;
  double eps = latentham::kDefaultEps;
  double w = 1.0;

  void validate() const;

  Mat encode(const Mat& X) const;
  Mat decode(const Mat& Y) const;
  latentham::LatentHamiltonian latent() const;
};

struct LatentInit {
  double diag_scale = 0.5;
  double jitter = 0.1;
};

/// Layout for the given shape; the decoder mirrors the encoder's hidden widths.
diffkit::ParamLayout model_layout(int n, int m, Variant v, const std::vector<int>& hidden);
/// Glorot autoencoder weights and the latent initialization, from one seed.
EmbeddingModel make_model(int n, int m, Variant v, const std::vector<int>& hidden, std::uint64_t seed,
                          LatentInit init = {});

struct TrainingConfig {
  double lambda1 = 0.1;  // encoder/decoder
  double lambda2 = 1.0;  // symplecticity
  double lambda3 = 1.0;  // latent dynamics
  int epochs = 4000;
  int batch_size = 32;
  double base_lr = 3e-3;
  double gamma = 0.1;
  int step_epochs = 1000;
  double wd_autoencoder = 1e-5;
  double wd_hamiltonian = 1e-5;
  double l1 = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Loss nodes for one batch (columns of X are samples, Xdot their time
/// derivatives). Xdot may be empty when only encdec/symp are needed.
struct LossNodes {
  diffkit::Var encdec;
  diffkit::Var symp;
  diffkit::Var deri;
  diffkit::Var l1;
  diffkit::Var total;
};

LossNodes build_losses(diffkit::Tape& tape, const EmbeddingModel& model, const diffkit::TapeBinding& binding,
                       const Mat& X, const Mat& Xdot, const TrainingConfig& cfg);

double loss_encdec(const EmbeddingModel& model, const Mat& X);
double loss_symp(const EmbeddingModel& model, const Mat& X);
double loss_deri(const EmbeddingModel& model, const Mat& X, const Mat& Xdot);
double total_loss(const EmbeddingModel& model, const Mat& X, const Mat& Xdot, const TrainingConfig& cfg);

/// Gradient of the total loss with respect to all parameters.
Vec total_loss_gradient(const EmbeddingModel& model, const Mat& X, const Mat& Xdot, const TrainingConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double total = 0.0;  // sample-weighted means over the epoch's batches
  double encdec = 0.0;
  double symp = 0.0;
  double deri = 0.0;
  double l1 = 0.0;
};

struct TrainResult {
  EmbeddingModel model;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on the weighted total loss. Deterministic for a fixed
/// cfg.seed; aborts with NumericalError naming the epoch on a non-finite loss.
TrainResult train(const Mat& X, const Mat& Xdot, EmbeddingModel model, const TrainingConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct BoundViolation {
  Eigen::Index index = 0;
  double time = 0.0;
  double value = 0.0;
};

struct RolloutResult {
  integrate::Trajectory predicted;  // decoded states
  integrate::Trajectory latent;
  double bound = 0.0;               // NaN for quad-embs
  double max_certified = 0.0;       // max of the certified quantity (SOS only)
  std::vector<BoundViolation> violations;
};

inline constexpr double kBoundSlack = 1e-6;

/// y0 = phi(x0), midpoint integration of the latent dynamics on t_grid,
/// decoding of every state, and the stability-bound check for SOS models.
RolloutResult latent_rollout(const EmbeddingModel& model, const Vec& x0, const Vec& t_grid,
                             const integrate::SolverConfig& cfg = {}, double max_step = integrate::kDefaultMaxStep);

struct Preset {
  std::string name;
  std::vector<int> hidden;
  int latent_dim = 0;
  int batch_size = 32;
  double wd_autoencoder = 1e-5;
  double wd_hamiltonian = 1e-5;
};

const std::vector<Preset>& presets();
const Preset& preset(const std::string& name);
/// TrainingConfig defaults with the preset's batch size and weight decays.
TrainingConfig preset_config(const Preset& p, std::uint64_t seed);

}  // namespace hamembed::training
