#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "hamembed/errors.hpp"
#include "hamembed/eval.hpp"

namespace hamembed::eval {

double traj_error(const Mat& gt, const Mat& pred) {
  if (gt.rows() != pred.rows() || gt.cols() != pred.cols()) throw ValidationError("traj_error: series shapes differ");
  if (gt.size() == 0) throw ValidationError("traj_error: empty series");
  return (gt - pred).squaredNorm() / static_cast<double>(gt.size());
}

double traj_error(const integrate::Trajectory& gt, const integrate::Trajectory& pred) {
  if (gt.times.size() != pred.times.size()) throw ValidationError("traj_error: time grids differ in length");
  const double scale = std::max(1.0, gt.times.cwiseAbs().maxCoeff());
  if ((gt.times - pred.times).cwiseAbs().maxCoeff() > 1e-12 * scale) throw ValidationError("traj_error: time grids differ");
  return traj_error(gt.states, pred.states);
}

double relative_l2(const Mat& gt, const Mat& pred) {
  if (gt.rows() != pred.rows() || gt.cols() != pred.cols()) throw ValidationError("relative_l2: series shapes differ");
  const double norm = gt.norm();
  if (!(norm > 0.0)) throw ValidationError("relative_l2: ground truth has zero norm");
  return (pred - gt).norm() / norm;
}

double mean_l2(const Mat& gt, const Mat& pred) {
  if (gt.rows() != pred.rows() || gt.cols() != pred.cols()) throw ValidationError("mean_l2: snapshot shapes differ");
  if (gt.cols() == 0) throw ValidationError("mean_l2: no snapshots");
  return (pred - gt).colwise().norm().mean();
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ErrorReport ErrorReport::from(std::string metric, std::string variant, std::vector<double> values) {
  ErrorReport r;
  r.metric = std::move(metric);
  r.variant = std::move(variant);
  r.values = std::move(values);
  std::vector<double> finite;
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const double v = r.values[i];
    if (std::isnan(v)) throw ValidationError("ErrorReport: NaN entry at IC " + std::to_string(i));
    if (std::isinf(v)) {
      ++r.failed;
      continue;
    }
    finite.push_back(v);
    if (r.best < 0 || v < r.values[static_cast<std::size_t>(r.best)]) r.best = static_cast<int>(i);
    if (r.worst < 0 || v > r.values[static_cast<std::size_t>(r.worst)]) r.worst = static_cast<int>(i);
  }
  if (finite.empty()) {
    r.median = r.min = r.max = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.median = eval::median(finite);
    r.min = *std::min_element(finite.begin(), finite.end());
    r.max = *std::max_element(finite.begin(), finite.end());
  }
  return r;
}

Metric traj_error_metric() {
  return {"traj_error", [](const integrate::Trajectory& gt, const integrate::Trajectory& pred) { return traj_error(gt, pred); }};
}

Metric relative_l2_metric() {
  return {"relative_l2",
          [](const integrate::Trajectory& gt, const integrate::Trajectory& pred) { return relative_l2(gt.states, pred.states); }};
}

std::vector<ErrorReport> benchmark_suite(const std::vector<integrate::Trajectory>& test_set,
                                         const std::vector<NamedModel>& models, const std::vector<Metric>& metrics,
                                         const PredictionSink& sink) {
  if (test_set.empty()) throw ValidationError("benchmark_suite: no test ICs");
  if (metrics.empty()) throw ValidationError("benchmark_suite: no metrics");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<ErrorReport> reports;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const NamedModel& model = models[mi];
    std::vector<std::vector<double>> values(metrics.size());
    for (std::size_t ic = 0; ic < test_set.size(); ++ic) {
      const auto& gt = test_set[ic];
      std::optional<integrate::Trajectory> pred;
      try {
        pred = model.rollout(gt.states.col(0), gt.times);
      } catch (const NumericalError&) {
      }
      if (pred && pred->states.rows() != gt.states.rows())
        throw ValidationError("benchmark_suite: model '" + model.name + "' has the wrong ambient dimension");
      if (pred && sink) sink(mi, ic, *pred);
      for (std::size_t k = 0; k < metrics.size(); ++k) {
        double e = pred ? metrics[k].fn(gt, *pred) : inf;
        values[k].push_back(std::isfinite(e) ? e : inf);
      }
    }
    for (std::size_t k = 0; k < metrics.size(); ++k)
      reports.push_back(ErrorReport::from(metrics[k].name, model.name, std::move(values[k])));
  }
  return reports;
}

namespace {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<ErrorReport>& reports) {
  std::size_t rows = 0;
  for (const auto& r : reports) rows = std::max(rows, r.values.size());
  out << "ic";
  for (const auto& r : reports) out << ',' << (r.metric == "traj_error" ? r.variant : r.variant + "/" + r.metric);
  out << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    out << i;
    for (const auto& r : reports) out << ',' << (i < r.values.size() ? format_number(r.values[i]) : "");
    out << '\n';
  }
}

std::string summary_table(const std::vector<ErrorReport>& reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %-12s %12s %12s %12s %6s %5s %5s\n", "variant", "metric", "median", "min", "max",
                "failed", "best", "worst");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-16s %-12s %12.4e %12.4e %12.4e %6d %5d %5d\n", r.variant.c_str(), r.metric.c_str(),
                  r.median, r.min, r.max, r.failed, r.best, r.worst);
    out << line;
  }
  return out.str();
}

}  // namespace hamembed::eval
