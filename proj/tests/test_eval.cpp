#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hamembed/errors.hpp"
#include "hamembed/eval.hpp"
#include "hamembed/random.hpp"

using namespace hamembed;

namespace {

integrate::Trajectory make_traj(const Mat& states) {
  integrate::Trajectory t;
  t.times = integrate::uniform_grid(0.0, 1.0, states.cols());
  t.states = states;
  return t;
}

Mat random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  Mat m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST(TrajError, Examples) {
  const Mat a = random_matrix(3, 10, 1);
  EXPECT_EQ(eval::traj_error(make_traj(a), make_traj(a)), 0.0);
  EXPECT_NEAR(eval::traj_error(make_traj(a), make_traj((a.array() + 0.3).matrix())), 0.09, 1e-15);
  Mat one(1, 1);
  one << 2.0;
  EXPECT_DOUBLE_EQ(eval::traj_error(Mat::Zero(1, 1), one), 4.0);
}

TEST(TrajError, SymmetricAndPositiveOffDiagonal) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Mat a = random_matrix(2, 7, s);
    const Mat b = random_matrix(2, 7, s + 100);
    EXPECT_DOUBLE_EQ(eval::traj_error(a, b), eval::traj_error(b, a));
    EXPECT_GT(eval::traj_error(a, b), 0.0);
  }
}

TEST(TrajError, GridMismatch) {
  const Mat a = random_matrix(2, 5, 3);
  auto t1 = make_traj(a);
  auto t2 = make_traj(a);
  t2.times(2) += 0.01;
  EXPECT_THROW(eval::traj_error(t1, t2), ValidationError);
  EXPECT_THROW(eval::traj_error(t1, make_traj(random_matrix(2, 6, 3))), ValidationError);
  EXPECT_THROW(eval::traj_error(a, random_matrix(3, 5, 3)), ValidationError);
}

TEST(RelativeL2, Examples) {
  const Mat a = random_matrix(4, 9, 2);
  EXPECT_EQ(eval::relative_l2(a, a), 0.0);
  EXPECT_NEAR(eval::relative_l2(a, 1.1 * a), 0.1, 1e-14);
  EXPECT_NEAR(eval::relative_l2(a, Mat::Zero(4, 9)), 1.0, 1e-15);
  EXPECT_THROW(eval::relative_l2(Mat::Zero(4, 9), a), ValidationError);
  const Mat b = random_matrix(4, 9, 5);
  EXPECT_NEAR(eval::relative_l2(3.7 * a, 3.7 * b), eval::relative_l2(a, b), 1e-14);
}

TEST(MeanL2, Examples) {
  const Mat a = random_matrix(5, 8, 4);
  EXPECT_EQ(eval::mean_l2(a, a), 0.0);
  Mat shifted = a;
  for (Eigen::Index k = 0; k < a.cols(); ++k) shifted(k % 5, k) += 1.0;
  EXPECT_NEAR(eval::mean_l2(a, shifted), 1.0, 1e-15);
  const Mat x = random_matrix(5, 1, 6);
  const Mat y = random_matrix(5, 1, 7);
  EXPECT_DOUBLE_EQ(eval::mean_l2(x, y), (x - y).norm());
  EXPECT_THROW(eval::mean_l2(a, random_matrix(5, 7, 1)), ValidationError);
}

TEST(Median, MatchesBruteForce) {
  Rng rng(8);
  for (int n = 1; n <= 12; ++n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(rng.uniform(0, 1));
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    const double expected = n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
    EXPECT_EQ(eval::median(v), expected);
  }
  EXPECT_THROW(eval::median({}), ValidationError);
}

TEST(ErrorReport, FailuresExcluded) {
  const double inf = std::numeric_limits<double>::infinity();
  const auto r = eval::ErrorReport::from("traj_error", "x", {0.3, inf, 0.1, 0.2});
  EXPECT_EQ(r.failed, 1);
  EXPECT_DOUBLE_EQ(r.median, 0.2);
  EXPECT_DOUBLE_EQ(r.min, 0.1);
  EXPECT_DOUBLE_EQ(r.max, 0.3);
  EXPECT_EQ(r.best, 2);
  EXPECT_EQ(r.worst, 0);
  EXPECT_THROW(eval::ErrorReport::from("m", "v", {std::nan("")}), ValidationError);
  EXPECT_TRUE(std::isnan(eval::ErrorReport::from("m", "v", {inf}).median));
}

TEST(BenchmarkSuite, IdentityAndOrdering) {
  std::vector<integrate::Trajectory> tests;
  for (std::uint64_t s = 0; s < 5; ++s) tests.push_back(make_traj(random_matrix(2, 20, s)));
  auto lookup = [&tests](const Vec& x0) -> const integrate::Trajectory& {
    for (const auto& t : tests)
      if (t.states.col(0) == x0) return t;
    throw std::logic_error("unknown IC");
  };
  eval::NamedModel exact{"exact", [&](const Vec& x0, const Vec&) { return lookup(x0); }};
  eval::NamedModel small{"small", [&](const Vec& x0, const Vec&) {
                           auto t = lookup(x0);
                           t.states.array() += 0.01;
                           return t;
                         }};
  eval::NamedModel large{"large", [&](const Vec& x0, const Vec&) {
                           auto t = lookup(x0);
                           t.states.array() += 0.1;
                           return t;
                         }};
  eval::NamedModel broken{"broken", [](const Vec&, const Vec&) -> integrate::Trajectory {
                            throw NumericalError("diverged");
                          }};
  const auto reports = eval::benchmark_suite(tests, {exact, small, large, broken});
  ASSERT_EQ(reports.size(), 4u);
  EXPECT_EQ(reports[0].median, 0.0);
  for (double v : reports[0].values) EXPECT_EQ(v, 0.0);
  EXPECT_LT(reports[1].median, reports[2].median);
  EXPECT_EQ(reports[3].failed, 5);
  EXPECT_THROW(eval::benchmark_suite({}, {exact}), ValidationError);

  std::ostringstream csv;
  eval::write_report_csv(csv, reports);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "ic,exact,small,large,broken");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
  EXPECT_NE(eval::summary_table(reports).find("broken"), std::string::npos);
}

TEST(BenchmarkSuite, MultipleMetricsAndSink) {
  std::vector<integrate::Trajectory> tests{make_traj(random_matrix(3, 10, 1)), make_traj(random_matrix(3, 10, 2))};
  eval::NamedModel scaled{"scaled", [&](const Vec& x0, const Vec&) {
                            auto t = tests[x0 == tests[0].states.col(0) ? 0 : 1];
                            t.states *= 1.1;
                            return t;
                          }};
  int calls = 0;
  const auto reports = eval::benchmark_suite(tests, {scaled}, {eval::traj_error_metric(), eval::relative_l2_metric()},
                                             [&](std::size_t m, std::size_t, const integrate::Trajectory&) {
                                               EXPECT_EQ(m, 0u);
                                               ++calls;
                                             });
  EXPECT_EQ(calls, 2);
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[1].metric, "relative_l2");
  for (double v : reports[1].values) EXPECT_NEAR(v, 0.1, 1e-14);
  std::ostringstream csv;
  eval::write_report_csv(csv, reports);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "ic,scaled,scaled/relative_l2");
  EXPECT_THROW(eval::benchmark_suite(tests, {scaled}, {}), ValidationError);
}
