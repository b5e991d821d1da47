#include "hamembed/integrate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "hamembed/errors.hpp"

namespace hamembed::integrate {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Level below which successive iterates differ only by round-off.
double roundoff_floor(const Vec& y) { return 8.0 * kEps * std::max(1.0, y.lpNorm<Eigen::Infinity>()); }

}  // namespace

void validate(const SolverConfig& cfg) {
  if (!(cfg.tol > 0.0)) throw ValidationError("SolverConfig: tol must be positive");
  if (cfg.max_iter < 1) throw ValidationError("SolverConfig: max_iter must be >= 1");
}

void Trajectory::validate() const {
  if (states.cols() != times.size()) throw ValidationError("Trajectory: states do not align with times");
  for (Eigen::Index k = 1; k < times.size(); ++k)
    if (!(times(k) > times(k - 1))) throw ValidationError("Trajectory: times must be strictly increasing");
  if (has_derivs() && (derivs.cols() != times.size() || derivs.rows() != states.rows()))
    throw ValidationError("Trajectory: derivs do not align with states");
}

MidpointStepper::MidpointStepper(VectorField field, SolverConfig cfg) : field_(std::move(field)), cfg_(cfg) {
  integrate::validate(cfg_);
}

double MidpointStepper::residual_norm(const Vec& x, const Vec& y, double h, Vec* res) const {
  Vec r = y - x - h * field_(0.5 * (x + y));
  const double norm = r.allFinite() ? r.lpNorm<Eigen::Infinity>() : std::numeric_limits<double>::infinity();
  if (res) *res = std::move(r);
  return norm;
}

std::optional<Vec> MidpointStepper::fixed_point(const Vec& x, double h, double& residual) {
  Vec y = x;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg_.max_iter; ++it) {
    Vec next = x + h * field_(0.5 * (x + y));
    if (!next.allFinite()) return std::nullopt;
    const double r = (next - y).lpNorm<Eigen::Infinity>();
    y = std::move(next);
    residual = r;
    if (r <= roundoff_floor(y)) return y;
    if (r <= cfg_.tol && r > 0.5 * prev) return y;
    if (it >= 2 && r > prev && r > cfg_.tol) return std::nullopt;
    prev = r;
  }
  if (residual <= cfg_.tol) return y;
  return std::nullopt;
}

void MidpointStepper::refresh_matrix(const Vec& x, const Vec& y, double h) {
  const Vec mid = 0.5 * (x + y);
  const Eigen::Index n = mid.size();
  Mat jac(n, n);
  Vec probe = mid;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-6 * std::max(1.0, std::abs(mid(j)));
    probe(j) = mid(j) + step;
    const Vec fp = field_(probe);
    probe(j) = mid(j) - step;
    const Vec fm = field_(probe);
    probe(j) = mid(j);
    jac.col(j) = (fp - fm) / (2.0 * step);
  }
  lu_.compute(Mat::Identity(n, n) - 0.5 * h * jac);
  have_matrix_ = true;
  matrix_h_ = h;
  ++refreshes_;
}

Vec MidpointStepper::newton(const Vec& x, double h, Vec y) {
  Vec res;
  double rn = residual_norm(x, y, h, &res);
  if (!std::isfinite(rn)) {
    y = x;
    rn = residual_norm(x, y, h, &res);
  }
  bool refreshed = false;
  if (!have_matrix_ || matrix_h_ != h) {
    refresh_matrix(x, y, h);
    refreshed = true;
  }
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg_.max_iter; ++it) {
    if (rn <= roundoff_floor(y)) return y;
    if (rn <= cfg_.tol && rn > 0.5 * prev) return y;

    const Vec delta = -lu_.solve(res);
    double alpha = 1.0;
    Vec trial;
    Vec trial_res;
    double rt = std::numeric_limits<double>::infinity();
    for (; alpha >= 1.0 / 64.0; alpha *= 0.5) {
      trial = y + alpha * delta;
      rt = residual_norm(x, trial, h, &trial_res);
      if (rt < rn) break;
    }
    if (!(rt < rn)) {
      if (rn <= cfg_.tol) return y;
      if (refreshed) break;
      refresh_matrix(x, y, h);
      refreshed = true;
      continue;
    }
    if (rt > 0.5 * rn && rt > cfg_.tol && !refreshed) {
      refresh_matrix(x, trial, h);
      refreshed = true;
    }
    prev = rn;
    y = std::move(trial);
    res = std::move(trial_res);
    rn = rt;
  }
  if (rn <= cfg_.tol) return y;
  std::ostringstream msg;
  msg << "implicit midpoint solve did not converge: final residual " << rn << " (tol " << cfg_.tol << ")";
  throw NumericalError(msg.str());
}

Vec MidpointStepper::step(const Vec& x, double h) {
  if (!std::isfinite(h)) throw ValidationError("midpoint_step: step size must be finite");
  if (!x.allFinite()) throw NumericalError("midpoint_step: non-finite state");
  if (h == 0.0) return x;
  double residual = std::numeric_limits<double>::infinity();
  if (!prefer_newton_) {
    if (auto y = fixed_point(x, h, residual)) return *y;
    prefer_newton_ = true;
  }
  return newton(x, h, x);
}

Vec midpoint_step(const VectorField& f, const Vec& x, double h, const SolverConfig& cfg) {
  MidpointStepper stepper(f, cfg);
  return stepper.step(x, h);
}

Vec uniform_grid(double t0, double t1, int n) {
  if (n < 1) throw ValidationError("uniform_grid: need at least one point");
  if (n == 1) return Vec::Constant(1, t0);
  if (!(t1 > t0)) throw ValidationError("uniform_grid: t1 must exceed t0");
  Vec t(n);
  const double h = (t1 - t0) / (n - 1);
  for (int k = 0; k < n; ++k) t(k) = t0 + k * h;
  t(n - 1) = t1;
  return t;
}

double grid_spacing(const Vec& t) {
  const Eigen::Index n = t.size();
  if (n < 2) throw ValidationError("grid_spacing: need at least two points");
  const double h = (t(n - 1) - t(0)) / static_cast<double>(n - 1);
  if (!(h > 0.0)) throw ValidationError("time grid must be strictly increasing");
  for (Eigen::Index k = 1; k < n; ++k) {
    const double d = t(k) - t(k - 1);
    if (!(d > 0.0)) throw ValidationError("time grid must be strictly increasing");
    if (std::abs(d - h) > 1e-9 * h + 8.0 * kEps * std::abs(t(k)))
      throw ValidationError("time grid must be uniform");
  }
  return h;
}

Trajectory integrate_field(const VectorField& f, const Vec& x0, const Vec& t_grid, const SolverConfig& cfg,
                           double max_step) {
  if (t_grid.size() == 0) throw ValidationError("integrate: empty time grid");
  if (!(max_step > 0.0)) throw ValidationError("integrate: max_step must be positive");
  Trajectory traj;
  traj.times = t_grid;
  traj.states.resize(x0.size(), t_grid.size());
  traj.states.col(0) = x0;
  if (t_grid.size() == 1) return traj;

  const double spacing = grid_spacing(t_grid);
  const int substeps = std::max(1, static_cast<int>(std::ceil(spacing / max_step - 1e-9)));
  const double h = spacing / substeps;
  MidpointStepper stepper(f, cfg);
  Vec x = x0;
  for (Eigen::Index k = 1; k < t_grid.size(); ++k) {
    try {
      for (int s = 0; s < substeps; ++s) x = stepper.step(x, h);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (at step " + std::to_string(k) + ", t = " +
                           std::to_string(t_grid(k)) + ")");
    }
    traj.states.col(k) = x;
  }
  return traj;
}

Trajectory integrate_trajectory(const hamsys::CanonicalSystem& sys, const Vec& x0, const Vec& t_grid,
                                const SolverConfig& cfg, double max_step) {
  if (x0.size() != sys.dim()) throw ValidationError("integrate_trajectory: initial state has wrong dimension");
  Trajectory traj = integrate_field([&sys](const Vec& x) { return sys.vector_field(x); }, x0, t_grid, cfg, max_step);
  traj.derivs.resize(traj.states.rows(), traj.states.cols());
  for (Eigen::Index k = 0; k < traj.size(); ++k) traj.derivs.col(k) = sys.vector_field(traj.states.col(k));
  return traj;
}

Mat stencil_derivatives(const Trajectory& traj) {
  const Eigen::Index n = traj.size();
  if (n < 5) throw ValidationError("stencil_derivatives: need at least 5 samples");
  const double h = grid_spacing(traj.times);
  const Mat& x = traj.states;
  Mat d(x.rows(), n);
  const double c = 1.0 / (12.0 * h);
  d.col(0) = c * (-25.0 * x.col(0) + 48.0 * x.col(1) - 36.0 * x.col(2) + 16.0 * x.col(3) - 3.0 * x.col(4));
  d.col(1) = c * (-3.0 * x.col(0) - 10.0 * x.col(1) + 18.0 * x.col(2) - 6.0 * x.col(3) + x.col(4));
  for (Eigen::Index k = 2; k < n - 2; ++k)
    d.col(k) = c * (-x.col(k + 2) + 8.0 * x.col(k + 1) - 8.0 * x.col(k - 1) + x.col(k - 2));
  d.col(n - 2) = c * (-x.col(n - 5) + 6.0 * x.col(n - 4) - 18.0 * x.col(n - 3) + 10.0 * x.col(n - 2) +
                      3.0 * x.col(n - 1));
  d.col(n - 1) = c * (3.0 * x.col(n - 5) - 16.0 * x.col(n - 4) + 36.0 * x.col(n - 3) - 48.0 * x.col(n - 2) +
                      25.0 * x.col(n - 1));
  return d;
}

}  // namespace hamembed::integrate
