#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "hamembed/integrate.hpp"
#include "hamembed/linalg.hpp"

namespace hamembed::eval {

/// (1/(T*d)) * sum_t |gt(t) - pred(t)|^2 over matching grids.
double traj_error(const integrate::Trajectory& gt, const integrate::Trajectory& pred);
/// Same measure on raw d x T series.
double traj_error(const Mat& gt, const Mat& pred);
/// |pred - gt|_F / |gt|_F
double relative_l2(const Mat& gt, const Mat& pred);
/// Mean over columns of |pred_k - gt_k|_2.
double mean_l2(const Mat& gt, const Mat& pred);

/// Middle element, or mean of the middle two. Throws on an empty set.
double median(std::vector<double> values);

/// Per-IC errors of one model under one metric. Failed rollouts are +inf.
struct ErrorReport {
  std::string metric;
  std::string variant;
  std::vector<double> values;
  double median = 0.0;  // over finite values; NaN when every rollout failed
  double min = 0.0;
  double max = 0.0;
  int failed = 0;
  int best = -1;
  int worst = -1;

  static ErrorReport from(std::string metric, std::string variant, std::vector<double> values);
};

using RolloutFn = std::function<integrate::Trajectory(const Vec& x0, const Vec& t_grid)>;

struct NamedModel {
  std::string name;
  RolloutFn rollout;
};

struct Metric {
  std::string name;
  std::function<double(const integrate::Trajectory& gt, const integrate::Trajectory& pred)> fn;
};

Metric traj_error_metric();
Metric relative_l2_metric();

/// Receives every successful prediction (model index, IC index).
using PredictionSink = std::function<void(std::size_t, std::size_t, const integrate::Trajectory&)>;

/// Rolls every model out from each test IC over that trajectory's grid and
/// scores it with each metric; one report per (model, metric), model-major.
/// A NumericalError from a rollout marks that IC failed (+inf).
std::vector<ErrorReport> benchmark_suite(const std::vector<integrate::Trajectory>& test_set,
                                         const std::vector<NamedModel>& models,
                                         const std::vector<Metric>& metrics = {traj_error_metric()},
                                         const PredictionSink& sink = {});

/// One row per IC: ic,<variant>,... (variant/metric for metrics other than
/// traj_error).
void write_report_csv(std::ostream& out, const std::vector<ErrorReport>& reports);
/// Fixed-width text table with median/min/max/failed/best/worst per report.
std::string summary_table(const std::vector<ErrorReport>& reports);

}  // namespace hamembed::eval
