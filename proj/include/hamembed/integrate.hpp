#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/LU>

#include "hamembed/hamsys.hpp"
#include "hamembed/linalg.hpp"

namespace hamembed::integrate {

using VectorField = std::function<Vec(const Vec&)>;

struct SolverConfig {
  double tol = 1e-12;  // residual infinity-norm
  int max_iter = 50;
};

void validate(const SolverConfig& cfg);

/// Time-stamped states of one run. Columns of `states` / `derivs` align with
/// `times`; `derivs` is empty when no derivative data is attached.
struct Trajectory {
  Vec times;
  Mat states;
  Mat derivs;
  std::string ic_id;

  Eigen::Index size() const { return times.size(); }
  Eigen::Index dim() const { return states.rows(); }
  bool has_derivs() const { return derivs.size() > 0; }
  /// Throws ValidationError when the invariants do not hold.
  void validate() const;
};

/// Implicit midpoint solver x+ = x + h f((x + x+)/2).
///
/// Fixed-point iteration is tried first. If it stalls or diverges the step is
/// solved by damped Newton with a central finite-difference Jacobian. The
/// factorized Newton matrix is kept between steps of the same size and only
/// rebuilt when its contraction degrades, so a stepper instance is stateful
/// and must not be shared between threads.
class MidpointStepper {
 public:
  MidpointStepper(VectorField field, SolverConfig cfg = {});

  Vec step(const Vec& x, double h);

  int newton_refreshes() const { return refreshes_; }

 private:
  std::optional<Vec> fixed_point(const Vec& x, double h, double& residual);
  Vec newton(const Vec& x, double h, Vec guess);
  double residual_norm(const Vec& x, const Vec& y, double h, Vec* res) const;
  void refresh_matrix(const Vec& x, const Vec& y, double h);

  VectorField field_;
  SolverConfig cfg_;
  bool prefer_newton_ = false;
  bool have_matrix_ = false;
  double matrix_h_ = 0.0;
  Eigen::PartialPivLU<Mat> lu_;
  int refreshes_ = 0;
};

/// One implicit midpoint step with a fresh solver.
Vec midpoint_step(const VectorField& f, const Vec& x, double h, const SolverConfig& cfg = {});

inline constexpr double kDefaultMaxStep = 0.01;

/// Integrates x' = f(x) over a uniform grid. Each grid interval is covered by
/// the smallest number of equal midpoint substeps no longer than max_step;
/// states are recorded on the grid only.
Trajectory integrate_field(const VectorField& f, const Vec& x0, const Vec& t_grid, const SolverConfig& cfg = {},
                           double max_step = kDefaultMaxStep);

/// integrate_field for a canonical system, with derivs = f(states) attached.
Trajectory integrate_trajectory(const hamsys::CanonicalSystem& sys, const Vec& x0, const Vec& t_grid,
                                const SolverConfig& cfg = {}, double max_step = kDefaultMaxStep);

/// Fourth-order five-point stencil derivative of each state row.
Mat stencil_derivatives(const Trajectory& traj);

/// n equidistant points on [t0, t1] (both included).
Vec uniform_grid(double t0, double t1, int n);

/// Spacing of a uniform grid; throws if the grid is not strictly increasing
/// and uniform to 1e-9 relative.
double grid_spacing(const Vec& t_grid);

}  // namespace hamembed::integrate
