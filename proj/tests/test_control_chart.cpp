#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "gilevel/control_chart.hpp"
#include "gilevel/hyperparam.hpp"
#include "gilevel/simulate.hpp"
#include "oracles.hpp"

using namespace gilevel;

namespace {

ModelConfig chart_model(int p) {
  ModelConfig config;
  config.phi = 1.0;
  config.n0 = 1.0;
  config.w_spec = WDiscounts{std::vector<double>(p, 0.9)};
  return config;
}

}  // namespace

TEST_CASE("log Bayes factor at the forecast mode is the analytic density gap") {
  const int p = 2;
  ModelConfig config = chart_model(p);
  FilterState state = filter_init(config, p);
  state.n = 30.0;
  Eigen::MatrixXd sm(2, 2);
  sm << 40.0, 8.0, 8.0, 60.0;
  state.S = SpdMatrix(sm);
  state.m = Eigen::VectorXd::Constant(p, 1.0);

  const Eigen::VectorXd target_mean = state.m;
  const SpdMatrix target_cov(sm / (30.0 - 2.0));
  const Eigen::VectorXd y = state.m;  // zero forecast error at phi = 1

  // t density at its mode minus the Gaussian density at its mode.
  const double n = state.n;
  auto lgp = [&](double a) {
    double out = 0.25 * p * (p - 1) * std::log(M_PI);
    for (int i = 1; i <= p; ++i) out += std::lgamma(a + 0.5 * (1 - i));
    return out;
  };
  const double log_t_mode = lgp(0.5 * (n + p)) - lgp(0.5 * (n + p - 1)) -
                            0.5 * p * std::log(M_PI) -
                            0.5 * std::log(sm.determinant());
  const double log_n_mode =
      -0.5 * p * std::log(2.0 * M_PI) -
      0.5 * std::log(target_cov.mat().determinant());
  const double want = log_t_mode - log_n_mode;
  CHECK(log_bayes_factor(state, y, target_mean, target_cov) ==
        doctest::Approx(want).epsilon(1e-12));
  // Near zero: the t and its moment-matched normal have similar peaks.
  CHECK(std::abs(want) < 0.5);

  // Far into the tail the heavy-tailed model dominates the target.
  Eigen::VectorXd far = target_mean;
  far(0) += 10.0 * std::sqrt(target_cov(0, 0));
  CHECK(log_bayes_factor(state, far, target_mean, target_cov) > 5.0);

  CHECK_THROWS_AS(
      log_bayes_factor(state, y, target_mean, SpdMatrix::Zero(p)),
      ConfigError);
}

TEST_CASE("ewma arithmetic") {
  const std::vector<double> h = {1.0, 2.0, 3.0};
  const std::vector<double> identity = ewma(h, 1.0, 99.0);
  CHECK(identity == h);

  const std::vector<double> constant = ewma({2.0, 2.0, 2.0}, 0.3, 2.0);
  for (double z : constant) CHECK(z == doctest::Approx(2.0));

  // Unit impulse at t = 1 decays geometrically.
  std::vector<double> impulse(6, 0.0);
  impulse[0] = 1.0;
  const double lambda = 0.25;
  const std::vector<double> z = ewma(impulse, lambda, 0.0);
  for (std::size_t t = 0; t < z.size(); ++t) {
    CHECK(z[t] ==
          doctest::Approx(lambda * std::pow(1.0 - lambda, t)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(ewma(h, 0.0, 0.0), ParameterError);
}

TEST_CASE("EWMA path stays inside the convex hull of its inputs") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> h(100);
  for (double& x : h) x = normal(rng);
  const double z0 = 0.3;
  const std::vector<double> z = ewma(h, 0.1, z0);
  double lo = z0, hi = z0;
  for (std::size_t t = 0; t < h.size(); ++t) {
    lo = std::min(lo, h[t]);
    hi = std::max(hi, h[t]);
    CHECK(z[t] >= lo - 1e-12);
    CHECK(z[t] <= hi + 1e-12);
  }
}

TEST_CASE("chart configuration errors") {
  const int p = 2;
  std::mt19937_64 rng(2);
  const SpdMatrix sigma = oracles::random_pd(p, rng);
  const Eigen::MatrixXd data = simulate_llm(
      sigma, SpdMatrix(0.01 * sigma.mat()), 1.0, 50,
      Eigen::VectorXd::Zero(p), rng);
  ChartConfig chart;
  chart.target_mean = Eigen::VectorXd::Zero(p);
  chart.target_cov = sigma;

  chart.phase1_end = 5;
  CHECK_THROWS_AS(chart_run(data, chart, chart_model(p)), ConfigError);
  chart.phase1_end = 50;
  CHECK_THROWS_AS(chart_run(data, chart, chart_model(p)), ConfigError);
  chart.phase1_end = 30;
  chart.target_mean = Eigen::VectorXd::Zero(p + 1);
  CHECK_THROWS_AS(chart_run(data, chart, chart_model(p)), ConfigError);
}

TEST_CASE("limits are calibrated from Phase I only") {
  const int p = 2;
  std::mt19937_64 rng(3);
  const SpdMatrix sigma = oracles::random_pd(p, rng);
  Eigen::MatrixXd data(150, p);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(p, 5.0);
  for (int t = 0; t < 150; ++t) {
    data.row(t) = mvn_sample(mean, sigma, rng).transpose();
  }
  ChartConfig chart;
  chart.phase1_end = 100;
  chart.target_mean = mean;
  chart.target_cov = sigma;

  const ChartReport full = chart_run(data, chart, chart_model(p));
  const ChartReport cut =
      chart_run(data.topRows(110), chart, chart_model(p));
  CHECK(full.center == cut.center);
  CHECK(full.lcl == cut.lcl);
  CHECK(full.ucl == cut.ucl);
  REQUIRE(full.points.size() == 150);
  CHECK(full.msse.allFinite());

  // Huge multiplier: no signals anywhere.
  chart.limit_multiplier = 1e6;
  const ChartReport loose = chart_run(data, chart, chart_model(p));
  CHECK(loose.signal_times.empty());
}

TEST_CASE("false alarms are rare and real shifts are caught") {
  const int p = 2, n_obs = 160, phase1 = 100;
  std::mt19937_64 rng(4);
  Eigen::MatrixXd corr(2, 2);
  corr << 1.0, 0.3, 0.3, 1.0;
  const SpdMatrix sigma(corr);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(p, 10.0);

  ChartConfig chart;
  chart.phase1_end = phase1;
  chart.target_mean = mean;
  chart.target_cov = sigma;

  int false_alarm_runs = 0;
  int detected_in_time = 0;
  const int runs = 30;
  for (int run = 0; run < runs; ++run) {
    Eigen::MatrixXd data(n_obs, p);
    for (int t = 0; t < n_obs; ++t) {
      data.row(t) = mvn_sample(mean, sigma, rng).transpose();
    }
    const ChartReport clean = chart_run(data, chart, chart_model(p));
    if (!clean.signal_times.empty()) ++false_alarm_runs;

    // Shift of three observation standard deviations from phase1 + 1 on.
    Eigen::MatrixXd shifted = data;
    for (int t = phase1; t < n_obs; ++t) {
      for (int i = 0; i < p; ++i) {
        shifted(t, i) += 3.0 * std::sqrt(sigma(i, i));
      }
    }
    const ChartReport alarm = chart_run(shifted, chart, chart_model(p));
    if (!alarm.signal_times.empty() &&
        alarm.signal_times.front() <= phase1 + 20) {
      ++detected_in_time;
    }
  }
  CHECK(false_alarm_runs <= runs / 10);
  CHECK(detected_in_time >= (9 * runs) / 10);
}

TEST_CASE("sequential z0 mode runs") {
  const int p = 2;
  std::mt19937_64 rng(5);
  const SpdMatrix sigma = oracles::random_pd(p, rng);
  Eigen::MatrixXd data(80, p);
  for (int t = 0; t < 80; ++t) {
    data.row(t) = mvn_sample(Eigen::VectorXd::Zero(p), sigma, rng).transpose();
  }
  ChartConfig chart;
  chart.phase1_end = 50;
  chart.target_mean = Eigen::VectorXd::Zero(p);
  chart.target_cov = sigma;
  chart.sequential_z0 = true;
  const ChartReport report = chart_run(data, chart, chart_model(p));
  CHECK(report.points.front().z ==
        doctest::Approx(report.points.front().h).epsilon(1e-12));
}
