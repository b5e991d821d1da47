#include <cmath>

#include "hamembed/baselines.hpp"
#include "hamembed/errors.hpp"

namespace hamembed::baselines {

Vec OpInfModel::field(const Vec& y) const { return apply_symplectic(2.0 * A * y + b); }

double OpInfModel::hamiltonian(const Vec& y) const { return y.dot(A * y) + b.dot(y); }

OpInfFit opinf_fit(const Mat& Y, const Mat& Ydot) {
  if (Y.rows() != Ydot.rows() || Y.cols() != Ydot.cols()) throw ValidationError("opinf_fit: Y and Ydot shapes differ");
  if (Y.rows() == 0 || Y.rows() % 2 != 0 || Y.cols() == 0) throw ValidationError("opinf_fit: need an even, non-zero dimension and samples");
  if (!Y.allFinite() || !Ydot.allFinite()) throw NumericalError("opinf_fit: non-finite data");
  const Eigen::Index d = Y.rows();
  const Eigen::Index na = d * (d + 1) / 2;
  const Eigen::Index p = na + d;

  // J'Ydot = 2AY + b, since J is orthogonal.
  const Mat target = symplectic_form(static_cast<int>(d / 2)).transpose() * Ydot;
  auto a_index = [d](Eigen::Index i, Eigen::Index j) {
    if (i > j) std::swap(i, j);
    return i * d - i * (i - 1) / 2 + (j - i);
  };

  Mat normal = Mat::Zero(p, p);
  Vec rhs = Vec::Zero(p);
  Mat phi(d, p);
  for (Eigen::Index k = 0; k < Y.cols(); ++k) {
    phi.setZero();
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) phi(i, a_index(i, j)) += 2.0 * Y(j, k);
      phi(i, na + i) = 1.0;
    }
    normal.noalias() += phi.transpose() * phi;
    rhs.noalias() += phi.transpose() * target.col(k);
  }
  const double min_eig = min_eigenvalue(normal, 1e-12);
  normal.diagonal().array() += kOpInfRidge;
  const Vec theta = normal.ldlt().solve(rhs);

  OpInfFit fit;
  fit.rank_deficient = Y.cols() * d < p || min_eig <= 1e-12 * std::max(1.0, normal.diagonal().maxCoeff());
  fit.model.m = static_cast<int>(d / 2);
  fit.model.A.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) fit.model.A(i, j) = theta(a_index(i, j));
  fit.model.b = theta.tail(d);
  for (Eigen::Index k = 0; k < Y.cols(); ++k) fit.residual += (Ydot.col(k) - fit.model.field(Y.col(k))).squaredNorm();
  return fit;
}

integrate::Trajectory opinf_rollout(const OpInfModel& model, const Vec& y0, const Vec& t_grid, double max_step) {
  const Eigen::Index d = 2 * model.m;
  if (y0.size() != d || model.A.rows() != d || model.b.size() != d) throw ValidationError("opinf_rollout: dimension mismatch");
  if (t_grid.size() == 0) throw ValidationError("opinf_rollout: empty time grid");
  integrate::Trajectory traj;
  traj.times = t_grid;
  traj.states.resize(d, t_grid.size());
  traj.states.col(0) = y0;
  if (t_grid.size() == 1) return traj;
  const double spacing = integrate::grid_spacing(t_grid);
  const int sub = std::max(1, static_cast<int>(std::ceil(spacing / max_step - 1e-9)));
  const double h = spacing / sub;

  const Mat J = symplectic_form(model.m);
  const Mat K = 2.0 * J * model.A;
  const Vec c = J * model.b;
  const Mat I = Mat::Identity(d, d);
  const Eigen::PartialPivLU<Mat> lhs(I - 0.5 * h * K);
  const Mat rhs = I + 0.5 * h * K;
  Vec y = y0;
  for (Eigen::Index k = 1; k < t_grid.size(); ++k) {
    for (int s = 0; s < sub; ++s) y = lhs.solve(rhs * y + h * c);
    if (!y.allFinite()) throw NumericalError("opinf_rollout: non-finite state at step " + std::to_string(k));
    traj.states.col(k) = y;
  }
  return traj;
}

}  // namespace hamembed::baselines
