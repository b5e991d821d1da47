#pragma once

#include <vector>

#include "hamembed/integrate.hpp"
#include "hamembed/linalg.hpp"

namespace hamembed::pod {

/// Shared spatial basis V (N x r) for positions and momenta.
struct PODBasis {
  Mat V;
  Vec singular_values;  // full list, non-increasing
  int r = 0;
  int N = 0;

  /// blkdiag(V, V), 2N x 2r.
  Mat projector() const;
};

/// [q-snapshots | p-snapshots] of every trajectory: N x 2S.
Mat assemble_snapshots(const std::vector<integrate::Trajectory>& data);
/// Same, for states given directly as 2N x S blocks.
Mat assemble_snapshots(const std::vector<Mat>& states);

/// Leading r left singular vectors via the eigendecomposition of the smaller
/// Gram matrix. Throws when r exceeds the numerical rank.
PODBasis pod_basis(const Mat& snapshots, int r);

/// sum_{i<=r} s_i^2 / sum_i s_i^2
double energy_fraction(const Vec& singular_values, int r);

/// V'x blockwise: 2N -> 2r. Columns of X are states.
Mat project(const PODBasis& basis, const Mat& X);
/// Vx blockwise: 2r -> 2N.
Mat lift(const PODBasis& basis, const Mat& Y);

}  // namespace hamembed::pod
