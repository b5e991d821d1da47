#pragma once

#include "hamembed/integrate.hpp"
#include "hamembed/linalg.hpp"

namespace hamembed::baselines {

/// Linear canonical model y' = J(2Ay + b), i.e. H(y) = y'Ay + b'y.
struct OpInfModel {
  int m = 0;
  Mat A;  // symmetric 2m x 2m
  Vec b;

  Vec field(const Vec& y) const;
  double hamiltonian(const Vec& y) const;
};

struct OpInfFit {
  OpInfModel model;
  bool rank_deficient = false;  // fewer samples or directions than unknowns
  double residual = 0.0;        // sum of squared derivative residuals
};

inline constexpr double kOpInfRidge = 1e-10;

/// Least squares over symmetric A (upper-triangle unknowns) and b, via normal
/// equations with a 1e-10 diagonal shift. Columns of Y / Ydot are samples.
OpInfFit opinf_fit(const Mat& Y, const Mat& Ydot);

/// Exact Cayley (midpoint) updates of the affine dynamics, substepped like
/// integrate_field.
integrate::Trajectory opinf_rollout(const OpInfModel& model, const Vec& y0, const Vec& t_grid,
                                    double max_step = integrate::kDefaultMaxStep);

}  // namespace hamembed::baselines
