#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamembed/linalg.hpp"
#include "hamembed/pod.hpp"

namespace hamembed::decoders {

/// Linear decoder: identical to pod::lift.
Mat linear_reconstruct(const pod::PODBasis& basis, const Mat& Y);

/// x = V y + H (y ⊗ y), full Kronecker square.
struct QuadDecoder {
  Mat V;  // N_full x d
  Mat H;  // N_full x d^2

  int d() const { return static_cast<int>(V.cols()); }
};

Vec quad_reconstruct(const QuadDecoder& dec, const Vec& y);
/// Column-wise reconstruction of a batch of coordinates.
Mat quad_reconstruct_batch(const QuadDecoder& dec, const Mat& Y);

struct QuadFitConfig {
  int epochs = 600;
  int batch_size = 32;
  double base_lr = 1e-3;
  double gamma = 0.1;
  int step_epochs = 250;
  double weight_decay = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct QuadFitResult {
  QuadDecoder decoder;
  std::vector<double> history;  // sample-weighted epoch loss
  bool underdetermined = false;  // fewer samples than d(d+1)/2 + d
};

/// Adam fit of 0.5*MSE + 0.5*MAE between X (N_full x S) and the quadratic
/// reconstruction of Y (d x S). Parameters start at zero.
QuadFitResult fit_quad_decoder(const Mat& Y, const Mat& X, const QuadFitConfig& cfg = {});

}  // namespace hamembed::decoders
